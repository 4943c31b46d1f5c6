#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "simulsa/backend.hpp"
#include "simulsa/domain.hpp"

namespace simulsa {

struct StepRecord {
    std::int64_t chunk_end_ms = 0;
    std::vector<std::string> emitted;
    std::vector<std::string> rolled_back;
    std::vector<std::string> committed_after;
    double wall_ms = 0.0; // not serialized
};

struct StreamSession {
    AudioClip clip;
    StreamConfig config;
    std::vector<std::string> committed;
    std::int64_t consumed_ms = 0;
    std::vector<StepRecord> step_log;
};

struct StreamOutcome {
    std::string final_text;
    StreamSession session;
};

// Session state up to the failed step.
class StreamError : public Error {
  public:
    StreamError(const Error &cause, StreamSession session);
    const StreamSession &session() const { return session_; }

  private:
    StreamSession session_;
};

// Chunked decoding with rollback. Each step extends the audio by chunk_ms
// (capped at the clip duration), generates a continuation of the committed
// prefix, appends it, and, unless the whole clip has been consumed, removes
// the last min(rollback, committed) tokens.
StreamOutcome run_stream_session(Provider &provider, const AudioClip &clip, std::string_view prompt,
                                 const StreamConfig &config);

// One generation over the full clip with an empty prefix.
std::string offline_translate(Provider &provider, const AudioClip &clip, std::string_view prompt,
                              std::int64_t max_new_tokens);

// {"chunk_end_ms": int, "emitted": [str], "rolled_back": [str], "committed_after": [str]}
std::string step_record_to_json(const StepRecord &step);

} // namespace simulsa
