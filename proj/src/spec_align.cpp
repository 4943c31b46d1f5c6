#include "simulsa/spec_align.hpp"

#include "simulsa/text.hpp"

namespace simulsa {

double default_tau(std::int64_t vocab_size) { return 100.0 / static_cast<double>(vocab_size); }

std::string_view to_string(StopReason reason) {
    switch (reason) {
    case StopReason::eos_dominates: return "eos_dominates";
    case StopReason::rank_exceeds_tau: return "rank_exceeds_tau";
    case StopReason::exhausted_target: return "exhausted_target";
    }
    return "unknown";
}

std::optional<StopReason> termination_reason(const TokenScore &score, double tau) {
    if (score.candidate_logprob < score.eos_logprob) return StopReason::eos_dominates;
    const double rank_fraction =
        static_cast<double>(score.strictly_greater_count) / static_cast<double>(score.vocab_size);
    if (rank_fraction > tau) return StopReason::rank_exceeds_tau;
    return std::nullopt;
}

SpeculationError::SpeculationError(const Error &cause, std::vector<TokenScore> partial)
    : Error(cause.code(), std::string(cause.what()) + " (after " + std::to_string(partial.size()) +
                              " scored steps)"),
      partial_(std::move(partial)) {}

SpeculationResult speculate_prefix(Provider &provider, const AudioClip &truncated_audio,
                                   std::span<const std::string> target_tokens,
                                   const SpeculationConfig &config, std::string_view prompt) {
    if (target_tokens.empty()) throw Error(ErrorCode::InvalidArgument, "speculation needs a non-empty target");
    if (config.tau && !(*config.tau > 0.0)) throw Error(ErrorCode::NonPositiveParameter, "tau must be positive");

    SpeculationResult result;
    ScoreRequest request;
    request.prompt = std::string(prompt);
    request.audio = truncated_audio;
    request.prefix_tokens.reserve(target_tokens.size());

    for (std::size_t i = 0; i < target_tokens.size(); ++i) {
        request.candidate_token = target_tokens[i];
        TokenScore score;
        try {
            score = provider.score_next(request);
        } catch (const Error &e) {
            throw SpeculationError(e, std::move(result.per_step_scores));
        }
        result.per_step_scores.push_back(score);
        const double tau = config.tau.value_or(default_tau(score.vocab_size));
        if (auto reason = termination_reason(score, tau)) {
            result.prefix_len = i;
            result.stop_reason = *reason;
            return result;
        }
        request.prefix_tokens.push_back(target_tokens[i]);
    }
    result.prefix_len = target_tokens.size();
    result.stop_reason = StopReason::exhausted_target;
    return result;
}

std::optional<SpeechTextPair> build_truncated_pair(const SpeechTextPair &parent,
                                                   std::span<const std::string> parent_tokens,
                                                   std::int64_t point_ms,
                                                   const SpeculationResult &result,
                                                   std::optional<AudioClip> truncated_audio) {
    if (result.prefix_len == 0) return std::nullopt;
    if (result.prefix_len > parent_tokens.size()) {
        throw Error(ErrorCode::InvalidArgument, "speculated prefix is longer than the parent target");
    }
    SpeechTextPair pair;
    pair.id = parent.id + "#t" + std::to_string(point_ms);
    pair.audio_path = parent.audio_path;
    pair.audio = std::move(truncated_audio);
    pair.target_text = detokenize(parent_tokens.first(result.prefix_len));
    pair.kind = PairKind::truncated;
    pair.truncation_ms = point_ms;
    return pair;
}

} // namespace simulsa
