#include <httplib.h>

#include "simulsa/http_provider.hpp"

#include <algorithm>
#include <cmath>

#include "simulsa/wav.hpp"

namespace simulsa {

using nlohmann::json;

namespace {

[[noreturn]] void violation(const std::string &why) { throw Error(ErrorCode::ProtocolViolation, why); }

const json &field(const json &body, const char *key) {
    auto it = body.find(key);
    if (it == body.end()) violation(std::string("response is missing '") + key + "'");
    return *it;
}

double number_field(const json &body, const char *key) {
    const json &v = field(body, key);
    if (!v.is_number()) violation(std::string("'") + key + "' is not a number");
    double d = v.get<double>();
    if (std::isnan(d)) violation(std::string("'") + key + "' is NaN");
    return d;
}

std::int64_t integer_field(const json &body, const char *key) {
    const json &v = field(body, key);
    if (!v.is_number_integer()) violation(std::string("'") + key + "' is not an integer");
    return v.get<std::int64_t>();
}

// Releases a concurrency slot on scope exit.
class SlotGuard {
  public:
    explicit SlotGuard(std::counting_semaphore<HttpProvider::kMaxConcurrency> &s) : s_(s) { s_.acquire(); }
    ~SlotGuard() { s_.release(); }
    SlotGuard(const SlotGuard &) = delete;
    SlotGuard &operator=(const SlotGuard &) = delete;

  private:
    std::counting_semaphore<HttpProvider::kMaxConcurrency> &s_;
};

} // namespace

json score_request_to_json(const ScoreRequest &request) {
    return json{{"prompt", request.prompt},
                {"audio_b64_wav", base64_encode(encode_wav(request.audio))},
                {"prefix_tokens", request.prefix_tokens},
                {"candidate_token", request.candidate_token}};
}

json generate_request_to_json(const GenerateRequest &request) {
    return json{{"prompt", request.prompt},
                {"audio_b64_wav", base64_encode(encode_wav(request.audio))},
                {"prefix_tokens", request.prefix_tokens},
                {"max_new_tokens", request.max_new_tokens}};
}

TokenScore token_score_from_json(const json &body) {
    if (!body.is_object()) violation("response is not a JSON object");
    TokenScore score;
    score.candidate_logprob = number_field(body, "candidate_logprob");
    score.strictly_greater_count = integer_field(body, "strictly_greater_count");
    score.eos_logprob = number_field(body, "eos_logprob");
    score.vocab_size = integer_field(body, "vocab_size");
    validate_token_score(score);
    return score;
}

Generation generation_from_json(const json &body, std::int64_t max_new_tokens) {
    if (!body.is_object()) violation("response is not a JSON object");
    const json &tokens = field(body, "tokens");
    const json &finished = field(body, "finished");
    if (!tokens.is_array()) violation("'tokens' is not an array");
    if (!finished.is_boolean()) violation("'finished' is not a boolean");
    Generation out;
    for (const auto &t : tokens) {
        if (!t.is_string()) violation("'tokens' holds a non-string entry");
        out.tokens.push_back(t.get<std::string>());
    }
    if (static_cast<std::int64_t>(out.tokens.size()) > max_new_tokens) {
        violation("bridge returned more than max_new_tokens tokens");
    }
    out.finished = finished.get<bool>();
    return out;
}

json token_score_to_json(const TokenScore &score) {
    return json{{"candidate_logprob", score.candidate_logprob},
                {"strictly_greater_count", score.strictly_greater_count},
                {"eos_logprob", score.eos_logprob},
                {"vocab_size", score.vocab_size}};
}

json generation_to_json(const Generation &generation) {
    return json{{"tokens", generation.tokens}, {"finished", generation.finished}};
}

// ─── HttpProvider ───────────────────────────────────────────────────────────

HttpProvider::HttpProvider(HttpProviderOptions options)
    : options_(std::move(options)),
      slots_(static_cast<std::ptrdiff_t>(std::clamp(options_.max_concurrency, 1u, kMaxConcurrency))) {
    if (options_.base_url.empty()) throw Error(ErrorCode::InvalidArgument, "empty backend URL");
    while (!options_.base_url.empty() && options_.base_url.back() == '/') options_.base_url.pop_back();
    const auto scheme_end = options_.base_url.find("://");
    const auto path_start =
        scheme_end == std::string::npos ? std::string::npos : options_.base_url.find('/', scheme_end + 3);
    origin_ = options_.base_url.substr(0, path_start);
    if (path_start != std::string::npos) path_prefix_ = options_.base_url.substr(path_start);
}

json HttpProvider::post(const std::string &endpoint, const json &body) {
    SlotGuard slot(slots_);
    httplib::Client client(origin_);
    if (!client.is_valid()) throw Error(ErrorCode::InvalidArgument, "invalid backend URL " + options_.base_url);
    client.set_connection_timeout(options_.connect_timeout);
    client.set_read_timeout(options_.read_timeout);
    client.set_write_timeout(options_.read_timeout);
    if (!options_.bearer_token.empty()) client.set_bearer_token_auth(options_.bearer_token);

    auto res = client.Post(path_prefix_ + endpoint, body.dump(), "application/json");
    if (!res) {
        throw Error(ErrorCode::BackendUnavailable,
                    options_.base_url + endpoint + ": " + httplib::to_string(res.error()));
    }
    std::string message;
    json parsed = json::parse(res->body, nullptr, false);
    if (res->status != 200) {
        if (parsed.is_object() && parsed.contains("error") && parsed["error"].is_string()) {
            message = parsed["error"].get<std::string>();
        } else {
            message = res->body.substr(0, 200);
        }
        // A missing endpoint means the URL does not point at a bridge.
        const bool unavailable = res->status >= 500 || res->status == 404 || res->status == 405;
        const auto code = unavailable ? ErrorCode::BackendUnavailable : ErrorCode::ProtocolViolation;
        throw Error(code, endpoint + " returned HTTP " + std::to_string(res->status) + ": " + message);
    }
    if (parsed.is_discarded()) violation(endpoint + " returned a body that is not valid JSON");
    return parsed;
}

TokenScore HttpProvider::score_next(const ScoreRequest &request) {
    return token_score_from_json(post("/v1/score_next", score_request_to_json(request)));
}

Generation HttpProvider::generate(const GenerateRequest &request) {
    if (request.max_new_tokens < 1) throw Error(ErrorCode::InvalidArgument, "max_new_tokens must be >= 1");
    return generation_from_json(post("/v1/generate", generate_request_to_json(request)),
                                request.max_new_tokens);
}

std::unique_ptr<Provider> open_provider(const std::string &uri, const ProviderOptions &options) {
    constexpr std::string_view synthetic = "synthetic:";
    if (uri.starts_with(synthetic)) return load_synthetic_corpus(uri.substr(synthetic.size()));
    if (uri.starts_with("http://") || uri.starts_with("https://")) {
        HttpProviderOptions http;
        http.base_url = uri;
        http.bearer_token = options.bearer_token;
        http.max_concurrency = options.max_concurrency;
        return std::make_unique<HttpProvider>(std::move(http));
    }
    throw Error(ErrorCode::InvalidArgument,
                "backend must be 'synthetic:FILE' or an http(s):// URL, got '" + uri + "'");
}

} // namespace simulsa
