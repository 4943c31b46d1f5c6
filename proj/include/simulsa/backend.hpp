#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "simulsa/domain.hpp"

namespace simulsa {

struct ScoreRequest {
    std::string prompt;
    AudioClip audio;
    std::vector<std::string> prefix_tokens;
    std::string candidate_token;
};

struct GenerateRequest {
    std::string prompt;
    AudioClip audio;
    // Forced committed prefix; generation continues after it.
    std::vector<std::string> prefix_tokens;
    std::int64_t max_new_tokens = 128;
};

struct Generation {
    std::vector<std::string> tokens; // never includes the end-of-sequence token
    bool finished = false;           // true iff generation stopped at end-of-sequence
};

// Next-token scoring and greedy generation over p(. | prompt, audio, prefix).
// Implementations must be safe to call from several threads at once.
class Provider {
  public:
    virtual ~Provider() = default;

    virtual TokenScore score_next(const ScoreRequest &request) = 0;
    virtual Generation generate(const GenerateRequest &request) = 0;

    // Token inventory used to split reference translations. Defaults to
    // whitespace words with isolated CJK characters.
    virtual std::vector<std::string> tokenize(std::string_view text) const;
};

// ─── Synthetic oracle ───────────────────────────────────────────────────────

// Test model with an explicit readiness schedule: target token j becomes the
// argmax once at least ready_at_ms[j] of audio is available.
struct SyntheticOracleSpec {
    std::vector<std::string> target_tokens;
    std::vector<std::int64_t> ready_at_ms; // non-decreasing, one per token
    double high_prob = 0.9;
    std::int64_t vocab_size = 1000;
};

// Throws Error{InvalidSpec}.
void validate_oracle_spec(const SyntheticOracleSpec &spec);

// Given audio of duration d and prefix y_1..y_i, the distribution puts
// high_prob on y_{i+1} when i < t, the prefix matches the target and
// a_{i+1} <= d; otherwise high_prob sits on end-of-sequence. The remaining
// mass is spread uniformly over the other vocab_size - 1 tokens.
class SyntheticProvider final : public Provider {
  public:
    explicit SyntheticProvider(SyntheticOracleSpec spec);

    TokenScore score_next(const ScoreRequest &request) override;
    Generation generate(const GenerateRequest &request) override;

    const SyntheticOracleSpec &spec() const { return spec_; }

    // Probability of the argmax token and of each of the other tokens.
    double argmax_probability() const { return spec_.high_prob; }
    double other_probability() const;

  private:
    // Expected next token, or nullptr when end-of-sequence dominates.
    const std::string *argmax_token(std::int64_t duration_ms,
                                    const std::vector<std::string> &prefix) const;

    SyntheticOracleSpec spec_;
};

std::unique_ptr<Provider> make_synthetic_provider(SyntheticOracleSpec spec);

// Routes each request to the oracle registered for the audio path embedded in
// the prompt ("<audio>PATH</audio>..."). A corpus with a single entry answers
// every request.
class SyntheticCorpusProvider final : public Provider {
  public:
    void add(std::string audio_path, SyntheticOracleSpec spec);
    std::size_t size() const { return by_path_.size(); }

    TokenScore score_next(const ScoreRequest &request) override;
    Generation generate(const GenerateRequest &request) override;

  private:
    SyntheticProvider &route(std::string_view prompt);

    std::map<std::string, SyntheticProvider, std::less<>> by_path_;
};

// Loads a JSONL corpus of oracle specs:
// {"audio_path": str, "target_tokens": [str], "ready_at_ms": [int],
//  "high_prob"?: num, "vocab_size"?: int}
// Relative audio paths are kept verbatim so they match manifest entries.
std::unique_ptr<SyntheticCorpusProvider> load_synthetic_corpus(const std::string &path);

// Text between the first "<audio>" and "</audio>", or empty.
std::string_view audio_path_from_prompt(std::string_view prompt);

// ─── Provider URIs ──────────────────────────────────────────────────────────

struct ProviderOptions {
    unsigned max_concurrency = 4;
    std::string bearer_token;
};

// "synthetic:FILE" or an http(s):// base URL of a bridge.
std::unique_ptr<Provider> open_provider(const std::string &uri, const ProviderOptions &options = {});

} // namespace simulsa
