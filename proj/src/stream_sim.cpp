#include "simulsa/stream_sim.hpp"

#include <chrono>

#include <json.hpp>

#include "simulsa/text.hpp"
#include "simulsa/trunc_sampler.hpp"

namespace simulsa {

StreamError::StreamError(const Error &cause, StreamSession session)
    : Error(cause.code(), std::string(cause.what()) + " (at " + std::to_string(session.consumed_ms) + " ms)"),
      session_(std::move(session)) {}

StreamOutcome run_stream_session(Provider &provider, const AudioClip &clip, std::string_view prompt,
                                 const StreamConfig &config) {
    validate_stream_config(config);
    if (clip.empty()) throw Error(ErrorCode::EmptyClip, "cannot stream an empty clip");

    StreamSession session;
    session.clip = clip;
    session.config = config;
    const std::int64_t duration = clip.duration_ms();

    GenerateRequest request;
    request.prompt = std::string(prompt);
    request.max_new_tokens = config.max_new_tokens_per_step;

    bool final_chunk = false;
    while (!final_chunk) {
        session.consumed_ms = std::min(session.consumed_ms + config.chunk_ms, duration);
        final_chunk = session.consumed_ms >= duration;
        request.audio = final_chunk ? clip : slice_audio(clip, session.consumed_ms);
        request.prefix_tokens = session.committed;

        const auto started = std::chrono::steady_clock::now();
        Generation generation;
        try {
            generation = provider.generate(request);
        } catch (const Error &e) {
            throw StreamError(e, std::move(session));
        }

        StepRecord step;
        step.chunk_end_ms = session.consumed_ms;
        step.emitted = generation.tokens;
        session.committed.insert(session.committed.end(), generation.tokens.begin(), generation.tokens.end());
        if (!final_chunk) {
            const auto drop = std::min<std::size_t>(static_cast<std::size_t>(config.rollback_tokens),
                                                    session.committed.size());
            step.rolled_back.assign(session.committed.end() - static_cast<std::ptrdiff_t>(drop),
                                    session.committed.end());
            session.committed.resize(session.committed.size() - drop);
        }
        step.committed_after = session.committed;
        step.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started).count();
        session.step_log.push_back(std::move(step));
    }

    StreamOutcome outcome;
    outcome.final_text = detokenize(session.committed);
    outcome.session = std::move(session);
    return outcome;
}

std::string offline_translate(Provider &provider, const AudioClip &clip, std::string_view prompt,
                              std::int64_t max_new_tokens) {
    if (clip.empty()) throw Error(ErrorCode::EmptyClip, "cannot translate an empty clip");
    GenerateRequest request;
    request.prompt = std::string(prompt);
    request.audio = clip;
    request.max_new_tokens = max_new_tokens;
    return detokenize(provider.generate(request).tokens);
}

std::string step_record_to_json(const StepRecord &step) {
    nlohmann::ordered_json j;
    j["chunk_end_ms"] = step.chunk_end_ms;
    j["emitted"] = step.emitted;
    j["rolled_back"] = step.rolled_back;
    j["committed_after"] = step.committed_after;
    return j.dump();
}

} // namespace simulsa
