#include "simulsa/domain.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>

#include <json.hpp>

namespace simulsa {

using ordered_json = nlohmann::ordered_json;

std::string_view to_string(ErrorCode code) {
    switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::InvalidInterval: return "InvalidInterval";
    case ErrorCode::InvalidGrid: return "InvalidGrid";
    case ErrorCode::NonPositiveParameter: return "NonPositiveParameter";
    case ErrorCode::InvalidDraw: return "InvalidDraw";
    case ErrorCode::EmptyClip: return "EmptyClip";
    case ErrorCode::InvalidSpec: return "InvalidSpec";
    case ErrorCode::BackendUnavailable: return "BackendUnavailable";
    case ErrorCode::ProtocolViolation: return "ProtocolViolation";
    case ErrorCode::AudioDecode: return "AudioDecode";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::UnknownTemplate: return "UnknownTemplate";
    case ErrorCode::InvalidManifest: return "InvalidManifest";
    case ErrorCode::IoFailure: return "IoFailure";
    }
    return "Unknown";
}

Error::Error(ErrorCode code, const std::string &message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

// ─── AudioClip ──────────────────────────────────────────────────────────────

AudioClip::AudioClip(std::vector<std::int16_t> samples, int sample_rate_hz)
    : length_(samples.size()), sample_rate_hz_(sample_rate_hz) {
    if (sample_rate_hz <= 0) {
        throw Error(ErrorCode::NonPositiveParameter, "sample rate must be positive");
    }
    buffer_ = std::make_shared<const std::vector<std::int16_t>>(std::move(samples));
}

std::span<const std::int16_t> AudioClip::samples() const {
    if (!buffer_) return {};
    return std::span<const std::int16_t>(buffer_->data(), length_);
}

std::int64_t AudioClip::duration_ms() const {
    return static_cast<std::int64_t>(length_) * 1000 / sample_rate_hz_;
}

AudioClip AudioClip::prefix(std::size_t count) const {
    AudioClip out = *this;
    out.length_ = std::min(count, length_);
    return out;
}

bool operator==(const AudioClip &a, const AudioClip &b) {
    if (a.sample_rate_hz_ != b.sample_rate_hz_ || a.length_ != b.length_) return false;
    auto sa = a.samples();
    auto sb = b.samples();
    return std::equal(sa.begin(), sa.end(), sb.begin());
}

// ─── SpeechTextPair ─────────────────────────────────────────────────────────

std::string_view to_string(PairKind kind) {
    return kind == PairKind::offline ? "offline" : "truncated";
}

PairKind parse_pair_kind(std::string_view text) {
    if (text == "offline") return PairKind::offline;
    if (text == "truncated") return PairKind::truncated;
    throw Error(ErrorCode::InvalidManifest, "unknown pair kind '" + std::string(text) + "'");
}

std::string pair_to_json_line(const SpeechTextPair &pair) {
    ordered_json j;
    j["id"] = pair.id;
    j["audio_path"] = pair.audio_path;
    if (pair.source_text) j["source_text"] = *pair.source_text;
    j["target_text"] = pair.target_text;
    if (pair.kind == PairKind::truncated) {
        j["kind"] = to_string(pair.kind);
        if (pair.truncation_ms) j["truncation_ms"] = *pair.truncation_ms;
    }
    return j.dump();
}

namespace {

const std::string &require_string(const nlohmann::json &j, const char *key) {
    auto it = j.find(key);
    if (it == j.end() || !it->is_string()) {
        throw Error(ErrorCode::InvalidManifest, std::string("missing string field '") + key + "'");
    }
    return it->get_ref<const std::string &>();
}

} // namespace

SpeechTextPair pair_from_json_line(std::string_view line) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error &e) {
        throw Error(ErrorCode::InvalidManifest, e.what());
    }
    if (!j.is_object()) throw Error(ErrorCode::InvalidManifest, "record is not a JSON object");

    SpeechTextPair pair;
    pair.id = require_string(j, "id");
    pair.audio_path = require_string(j, "audio_path");
    pair.target_text = require_string(j, "target_text");
    if (j.contains("source_text")) pair.source_text = require_string(j, "source_text");
    if (j.contains("kind")) pair.kind = parse_pair_kind(require_string(j, "kind"));
    if (auto it = j.find("truncation_ms"); it != j.end()) {
        if (!it->is_number_integer() || it->get<std::int64_t>() < 0) {
            throw Error(ErrorCode::InvalidManifest, "truncation_ms must be a non-negative integer");
        }
        pair.truncation_ms = it->get<std::int64_t>();
    }
    if ((pair.kind == PairKind::truncated) != pair.truncation_ms.has_value()) {
        throw Error(ErrorCode::InvalidManifest,
                    "record '" + pair.id + "': truncation_ms must be present iff kind is truncated");
    }
    return pair;
}

// ─── Policy ─────────────────────────────────────────────────────────────────

std::string_view to_string(TruncationFamily family) {
    switch (family) {
    case TruncationFamily::beta_decay: return "beta";
    case TruncationFamily::uniform: return "uniform";
    case TruncationFamily::beta_decay_fullspan: return "beta-full";
    case TruncationFamily::beta_decay_grid: return "beta-grid";
    }
    return "unknown";
}

void validate_policy(const TruncationPolicy &policy) {
    if (policy.l_ms <= 0 || policy.r_ms <= 0) {
        throw Error(ErrorCode::NonPositiveParameter, "interval bounds must be positive");
    }
    if (policy.grid_step_ms <= 0) {
        throw Error(ErrorCode::NonPositiveParameter, "grid step must be positive");
    }
    if (!(policy.alpha > 0.0) || !(policy.beta > 0.0) || !std::isfinite(policy.alpha) ||
        !std::isfinite(policy.beta)) {
        throw Error(ErrorCode::NonPositiveParameter, "alpha and beta must be positive and finite");
    }
    if (policy.l_ms >= policy.r_ms) {
        throw Error(ErrorCode::InvalidInterval, "l_ms (" + std::to_string(policy.l_ms) +
                                                    ") must be below r_ms (" +
                                                    std::to_string(policy.r_ms) + ")");
    }
    if (policy.family == TruncationFamily::beta_decay_grid &&
        (policy.r_ms - policy.l_ms) % policy.grid_step_ms != 0) {
        throw Error(ErrorCode::InvalidGrid, "grid step " + std::to_string(policy.grid_step_ms) +
                                                " does not divide the interval span");
    }
}

// ─── Scores / streaming ─────────────────────────────────────────────────────

void validate_token_score(const TokenScore &score) {
    auto bad_logprob = [](double lp) { return !std::isfinite(lp) || lp > 0.0; };
    if (score.vocab_size <= 0) throw Error(ErrorCode::ProtocolViolation, "vocab_size must be positive");
    if (score.strictly_greater_count < 0 || score.strictly_greater_count >= score.vocab_size) {
        throw Error(ErrorCode::ProtocolViolation, "strictly_greater_count out of [0, vocab_size)");
    }
    if (bad_logprob(score.candidate_logprob) || bad_logprob(score.eos_logprob)) {
        throw Error(ErrorCode::ProtocolViolation, "log-probabilities must be finite and <= 0");
    }
}

void validate_stream_config(const StreamConfig &config) {
    if (config.chunk_ms <= 0) throw Error(ErrorCode::NonPositiveParameter, "chunk_ms must be positive");
    if (config.rollback_tokens < 0) {
        throw Error(ErrorCode::InvalidArgument, "rollback must be non-negative");
    }
    if (config.max_new_tokens_per_step <= 0) {
        throw Error(ErrorCode::NonPositiveParameter, "max_new_tokens_per_step must be positive");
    }
}

ChunkSize ChunkSize::finite(std::int64_t ms) {
    if (ms <= 0) throw Error(ErrorCode::NonPositiveParameter, "chunk size must be positive");
    ChunkSize c;
    c.ms_ = ms;
    return c;
}

ChunkSize ChunkSize::parse(std::string_view text) {
    if (text == "inf" || text == "infinity") return infinite();
    std::int64_t value = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size()) {
        throw Error(ErrorCode::InvalidArgument, "chunk size must be a positive integer or 'inf', got '" +
                                                    std::string(text) + "'");
    }
    return finite(value);
}

std::int64_t ChunkSize::ms() const {
    if (!ms_) throw Error(ErrorCode::InvalidArgument, "infinite chunk size has no millisecond value");
    return *ms_;
}

std::string ChunkSize::to_string() const { return ms_ ? std::to_string(*ms_) : "inf"; }

bool operator<(const ChunkSize &a, const ChunkSize &b) {
    if (a.is_infinite()) return false;
    if (b.is_infinite()) return true;
    return *a.ms_ < *b.ms_;
}

} // namespace simulsa
