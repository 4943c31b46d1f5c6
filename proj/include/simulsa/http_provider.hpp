#pragma once

#include <chrono>
#include <semaphore>
#include <string>

#include <json.hpp>

#include "simulsa/backend.hpp"

namespace simulsa {

// Client for a model bridge speaking the JSON protocol:
//
//   POST /v1/score_next {"prompt", "audio_b64_wav", "prefix_tokens", "candidate_token"}
//     -> {"candidate_logprob", "strictly_greater_count", "eos_logprob", "vocab_size"}
//   POST /v1/generate   {"prompt", "audio_b64_wav", "prefix_tokens", "max_new_tokens"}
//     -> {"tokens", "finished"}
//
// Errors come back as 4xx/5xx with {"error": str}. Connection failures, 5xx,
// 404 and 405 map to BackendUnavailable; other 4xx and malformed bodies map to
// ProtocolViolation.
struct HttpProviderOptions {
    std::string base_url; // may carry a path prefix, e.g. http://host:8000/models/a
    std::string bearer_token; // sent as "Authorization: Bearer ..." when non-empty
    unsigned max_concurrency = 4;
    std::chrono::milliseconds connect_timeout{5000};
    std::chrono::milliseconds read_timeout{600000};
};

class HttpProvider final : public Provider {
  public:
    static constexpr unsigned kMaxConcurrency = 1024;

    explicit HttpProvider(HttpProviderOptions options);

    TokenScore score_next(const ScoreRequest &request) override;
    Generation generate(const GenerateRequest &request) override;

    const HttpProviderOptions &options() const { return options_; }

  private:
    nlohmann::json post(const std::string &endpoint, const nlohmann::json &body);

    HttpProviderOptions options_;
    std::string origin_;      // scheme://host[:port]
    std::string path_prefix_; // empty or "/..."
    std::counting_semaphore<kMaxConcurrency> slots_;
};

// Wire encoding shared by the client and test servers.
nlohmann::json score_request_to_json(const ScoreRequest &request);
nlohmann::json generate_request_to_json(const GenerateRequest &request);
// Throw Error{ProtocolViolation} on missing or ill-typed fields.
TokenScore token_score_from_json(const nlohmann::json &body);
Generation generation_from_json(const nlohmann::json &body, std::int64_t max_new_tokens);
nlohmann::json token_score_to_json(const TokenScore &score);
nlohmann::json generation_to_json(const Generation &generation);

} // namespace simulsa
