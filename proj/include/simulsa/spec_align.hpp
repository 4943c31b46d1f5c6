#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "simulsa/backend.hpp"
#include "simulsa/domain.hpp"

namespace simulsa {

struct SpeculationConfig {
    // Position threshold. Unset means 100 / vocab_size as reported by the provider.
    std::optional<double> tau;
    std::string prompt_template_id = "default";
};

double default_tau(std::int64_t vocab_size);

enum class StopReason { eos_dominates, rank_exceeds_tau, exhausted_target };

std::string_view to_string(StopReason reason);

struct SpeculationResult {
    std::size_t prefix_len = 0;
    StopReason stop_reason = StopReason::exhausted_target;
    std::vector<TokenScore> per_step_scores;
};

// Which disjunct of the termination rule fires, if any:
//   p(candidate) < p(EOS)                 -> eos_dominates
//   strictly_greater_count / |V| > tau    -> rank_exceeds_tau
// Both comparisons are strict and exact (log space, no epsilon).
std::optional<StopReason> termination_reason(const TokenScore &score, double tau);

inline bool termination_check(const TokenScore &score, double tau) {
    return termination_reason(score, tau).has_value();
}

// Carries the scores collected before the provider failed.
class SpeculationError : public Error {
  public:
    SpeculationError(const Error &cause, std::vector<TokenScore> partial);
    const std::vector<TokenScore> &partial_scores() const { return partial_; }

  private:
    std::vector<TokenScore> partial_;
};

// Walks the reference translation token by token. At step i the candidate
// y_i is scored against the distribution conditioned on y_1..y_{i-1} and the
// truncated audio; the first step that triggers termination fixes the prefix
// at y_1..y_{i-1}. Throws Error{InvalidArgument} on an empty target and
// SpeculationError when the provider fails.
SpeculationResult speculate_prefix(Provider &provider, const AudioClip &truncated_audio,
                                   std::span<const std::string> target_tokens,
                                   const SpeculationConfig &config, std::string_view prompt);

// Truncated pair whose target is the detokenized speculated prefix; nullopt
// (drop) when the prefix is empty. The id is "<parent>#t<point_ms>".
std::optional<SpeechTextPair> build_truncated_pair(const SpeechTextPair &parent,
                                                   std::span<const std::string> parent_tokens,
                                                   std::int64_t point_ms,
                                                   const SpeculationResult &result,
                                                   std::optional<AudioClip> truncated_audio = std::nullopt);

} // namespace simulsa
