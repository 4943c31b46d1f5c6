#include "simulsa/backend.hpp"

#include <cmath>
#include <fstream>

#include <json.hpp>

#include "simulsa/text.hpp"

namespace simulsa {

std::vector<std::string> Provider::tokenize(std::string_view text) const { return tokenize_text(text); }

// ─── SyntheticProvider ──────────────────────────────────────────────────────

void validate_oracle_spec(const SyntheticOracleSpec &spec) {
    auto invalid = [](const std::string &why) { throw Error(ErrorCode::InvalidSpec, why); };
    if (spec.ready_at_ms.size() != spec.target_tokens.size()) {
        invalid("ready_at_ms must have one entry per target token");
    }
    for (std::size_t j = 0; j < spec.ready_at_ms.size(); ++j) {
        if (spec.ready_at_ms[j] <= 0) invalid("ready_at_ms entries must be positive");
        if (j > 0 && spec.ready_at_ms[j] < spec.ready_at_ms[j - 1]) {
            invalid("ready_at_ms must be non-decreasing");
        }
        if (spec.target_tokens[j].empty()) invalid("target tokens must be non-empty");
    }
    if (spec.vocab_size < 2) invalid("vocab_size must be at least 2");
    if (!(spec.high_prob < 1.0) || !(spec.high_prob * static_cast<double>(spec.vocab_size) > 1.0)) {
        invalid("high_prob must lie in (1/vocab_size, 1)");
    }
}

SyntheticProvider::SyntheticProvider(SyntheticOracleSpec spec) : spec_(std::move(spec)) {
    validate_oracle_spec(spec_);
}

double SyntheticProvider::other_probability() const {
    return (1.0 - spec_.high_prob) / static_cast<double>(spec_.vocab_size - 1);
}

const std::string *SyntheticProvider::argmax_token(std::int64_t duration_ms,
                                                   const std::vector<std::string> &prefix) const {
    const std::size_t i = prefix.size();
    if (i >= spec_.target_tokens.size()) return nullptr;
    for (std::size_t j = 0; j < i; ++j) {
        if (prefix[j] != spec_.target_tokens[j]) return nullptr;
    }
    if (spec_.ready_at_ms[i] > duration_ms) return nullptr;
    return &spec_.target_tokens[i];
}

TokenScore SyntheticProvider::score_next(const ScoreRequest &request) {
    const std::string *top = argmax_token(request.audio.duration_ms(), request.prefix_tokens);
    const double high = std::log(spec_.high_prob);
    const double low = std::log(other_probability());

    TokenScore score;
    score.vocab_size = spec_.vocab_size;
    score.eos_logprob = top ? low : high;
    if (top && *top == request.candidate_token) {
        score.candidate_logprob = high;
        score.strictly_greater_count = 0;
    } else {
        score.candidate_logprob = low;
        score.strictly_greater_count = 1;
    }
    return score;
}

Generation SyntheticProvider::generate(const GenerateRequest &request) {
    if (request.max_new_tokens < 1) throw Error(ErrorCode::InvalidArgument, "max_new_tokens must be >= 1");
    const std::int64_t duration = request.audio.duration_ms();
    std::vector<std::string> context = request.prefix_tokens;
    Generation out;
    while (static_cast<std::int64_t>(out.tokens.size()) < request.max_new_tokens) {
        const std::string *top = argmax_token(duration, context);
        if (!top) {
            out.finished = true;
            return out;
        }
        out.tokens.push_back(*top);
        context.push_back(*top);
    }
    return out;
}

std::unique_ptr<Provider> make_synthetic_provider(SyntheticOracleSpec spec) {
    return std::make_unique<SyntheticProvider>(std::move(spec));
}

// ─── SyntheticCorpusProvider ────────────────────────────────────────────────

std::string_view audio_path_from_prompt(std::string_view prompt) {
    constexpr std::string_view open = "<audio>";
    constexpr std::string_view close = "</audio>";
    auto begin = prompt.find(open);
    if (begin == std::string_view::npos) return {};
    begin += open.size();
    auto end = prompt.find(close, begin);
    if (end == std::string_view::npos) return {};
    return prompt.substr(begin, end - begin);
}

void SyntheticCorpusProvider::add(std::string audio_path, SyntheticOracleSpec spec) {
    by_path_.insert_or_assign(std::move(audio_path), SyntheticProvider(std::move(spec)));
}

SyntheticProvider &SyntheticCorpusProvider::route(std::string_view prompt) {
    if (by_path_.size() == 1) return by_path_.begin()->second;
    auto path = audio_path_from_prompt(prompt);
    auto it = by_path_.find(path);
    if (it == by_path_.end()) {
        throw Error(ErrorCode::ProtocolViolation,
                    "no synthetic oracle registered for audio '" + std::string(path) + "'");
    }
    return it->second;
}

TokenScore SyntheticCorpusProvider::score_next(const ScoreRequest &request) {
    return route(request.prompt).score_next(request);
}

Generation SyntheticCorpusProvider::generate(const GenerateRequest &request) {
    return route(request.prompt).generate(request);
}

std::unique_ptr<SyntheticCorpusProvider> load_synthetic_corpus(const std::string &path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::IoFailure, "cannot open synthetic oracle corpus " + path);
    auto corpus = std::make_unique<SyntheticCorpusProvider>();
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            auto j = nlohmann::json::parse(line);
            SyntheticOracleSpec spec;
            spec.target_tokens = j.at("target_tokens").get<std::vector<std::string>>();
            spec.ready_at_ms = j.at("ready_at_ms").get<std::vector<std::int64_t>>();
            spec.high_prob = j.value("high_prob", spec.high_prob);
            spec.vocab_size = j.value("vocab_size", spec.vocab_size);
            corpus->add(j.at("audio_path").get<std::string>(), std::move(spec));
        } catch (const nlohmann::json::exception &e) {
            throw Error(ErrorCode::InvalidSpec, path + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    if (corpus->size() == 0) throw Error(ErrorCode::InvalidSpec, path + ": no oracle specs");
    return corpus;
}

} // namespace simulsa
