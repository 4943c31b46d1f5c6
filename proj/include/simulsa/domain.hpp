#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace simulsa {

// ─── Errors ─────────────────────────────────────────────────────────────────

enum class ErrorCode {
    InvalidArgument,
    InvalidInterval,
    InvalidGrid,
    NonPositiveParameter,
    InvalidDraw,
    EmptyClip,
    InvalidSpec,
    BackendUnavailable,
    ProtocolViolation,
    AudioDecode,
    LengthMismatch,
    UnknownTemplate,
    InvalidManifest,
    IoFailure,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
  public:
    Error(ErrorCode code, const std::string &message);

    ErrorCode code() const noexcept { return code_; }

  private:
    ErrorCode code_;
};

// ─── Audio ──────────────────────────────────────────────────────────────────

// Immutable mono 16-bit PCM clip. Prefixes share the underlying buffer, so
// copying or slicing a clip never copies samples.
class AudioClip {
  public:
    AudioClip() = default;
    AudioClip(std::vector<std::int16_t> samples, int sample_rate_hz);

    std::span<const std::int16_t> samples() const;
    std::size_t sample_count() const { return length_; }
    int sample_rate_hz() const { return sample_rate_hz_; }
    int channel_count() const { return 1; }
    bool empty() const { return length_ == 0; }

    // floor(1000 * samples / rate)
    std::int64_t duration_ms() const;

    // First `count` samples (clamped to the clip length).
    AudioClip prefix(std::size_t count) const;

    friend bool operator==(const AudioClip &a, const AudioClip &b);

  private:
    std::shared_ptr<const std::vector<std::int16_t>> buffer_;
    std::size_t length_ = 0;
    int sample_rate_hz_ = 16000;
};

// ─── Pairs ──────────────────────────────────────────────────────────────────

enum class PairKind { offline, truncated };

std::string_view to_string(PairKind kind);
PairKind parse_pair_kind(std::string_view text);

struct SpeechTextPair {
    std::string id;
    std::string audio_path;
    // In-memory audio; set for truncated pairs before their clip is written.
    std::optional<AudioClip> audio;
    std::string target_text;
    std::optional<std::string> source_text;
    PairKind kind = PairKind::offline;
    // Present iff kind == truncated.
    std::optional<std::int64_t> truncation_ms;
};

// Canonical single-line JSON form:
// {"id","audio_path","source_text"?,"target_text","kind"?,"truncation_ms"?}.
// "kind" is written only for truncated pairs. Inline audio is not serialized.
std::string pair_to_json_line(const SpeechTextPair &pair);
SpeechTextPair pair_from_json_line(std::string_view line);

// ─── Truncation policy ──────────────────────────────────────────────────────

enum class TruncationFamily { beta_decay, uniform, beta_decay_fullspan, beta_decay_grid };

std::string_view to_string(TruncationFamily family);

struct TruncationPolicy {
    TruncationFamily family = TruncationFamily::beta_decay;
    std::int64_t l_ms = 500;
    std::int64_t r_ms = 5000;
    std::int64_t grid_step_ms = 500;
    double alpha = 1.0;
    double beta = 3.0;
};

// Throws Error{InvalidInterval | InvalidGrid | NonPositiveParameter}.
void validate_policy(const TruncationPolicy &policy);

// ─── Scores and streaming config ────────────────────────────────────────────

struct TokenScore {
    double candidate_logprob = 0.0;
    // Vocabulary tokens with probability strictly greater than the candidate.
    std::int64_t strictly_greater_count = 0;
    double eos_logprob = 0.0;
    std::int64_t vocab_size = 1;

    bool is_argmax() const { return strictly_greater_count == 0; }
};

// Throws Error{ProtocolViolation} when the score is not a well-formed answer.
void validate_token_score(const TokenScore &score);

struct StreamConfig {
    std::int64_t chunk_ms = 500;
    std::int64_t rollback_tokens = 0;
    std::int64_t max_new_tokens_per_step = 128;
};

void validate_stream_config(const StreamConfig &config);

// Chunk size that may be infinite (offline decoding).
class ChunkSize {
  public:
    ChunkSize() = default;
    static ChunkSize finite(std::int64_t ms);
    static ChunkSize infinite() { return ChunkSize{}; }
    // Accepts a positive integer or "inf".
    static ChunkSize parse(std::string_view text);

    bool is_infinite() const { return !ms_.has_value(); }
    std::int64_t ms() const;
    std::string to_string() const;

    friend bool operator==(const ChunkSize &, const ChunkSize &) = default;
    // Finite sizes order numerically; infinity sorts last.
    friend bool operator<(const ChunkSize &a, const ChunkSize &b);

  private:
    std::optional<std::int64_t> ms_;
};

} // namespace simulsa
