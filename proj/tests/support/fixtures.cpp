#include "fixtures.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <random>

#include <json.hpp>

#include "simulsa/text.hpp"
#include "simulsa/wav.hpp"

namespace simulsa::testing {

AudioClip make_clip(std::int64_t duration_ms, int sample_rate_hz) {
    const auto count = static_cast<std::size_t>(duration_ms * sample_rate_hz / 1000);
    std::vector<std::int16_t> samples(count);
    for (std::size_t i = 0; i < count; ++i) {
        samples[i] = static_cast<std::int16_t>(((i * 7919u) % 2001u) - 1000);
    }
    return AudioClip(std::move(samples), sample_rate_hz);
}

TempDir::TempDir() {
    static std::mt19937_64 rng{std::random_device{}()};
    path_ = std::filesystem::temp_directory_path() / ("simulsa-test-" + std::to_string(rng()));
    std::filesystem::create_directories(path_);
}

TempDir::~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
}

std::string read_file(const std::filesystem::path &path) {
    std::ifstream in(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path &path, const std::string &content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << content;
}

double ks_statistic(std::vector<double> samples, const std::function<double(double)> &cdf) {
    std::sort(samples.begin(), samples.end());
    const double n = static_cast<double>(samples.size());
    double d = 0.0;
    std::size_t i = 0;
    while (i < samples.size()) {
        // Group ties so the empirical CDF jumps once per distinct value.
        std::size_t j = i;
        while (j < samples.size() && samples[j] == samples[i]) ++j;
        const double f = cdf(samples[i]);
        d = std::max(d, std::abs(static_cast<double>(i) / n - f));
        d = std::max(d, std::abs(static_cast<double>(j) / n - f));
        i = j;
    }
    return d;
}

namespace {

std::size_t count_ngram(const std::vector<std::string> &seq, const std::vector<std::string> &gram) {
    std::size_t count = 0;
    if (seq.size() < gram.size()) return 0;
    for (std::size_t p = 0; p + gram.size() <= seq.size(); ++p) {
        bool match = true;
        for (std::size_t k = 0; k < gram.size(); ++k) {
            if (seq[p + k] != gram[k]) {
                match = false;
                break;
            }
        }
        if (match) ++count;
    }
    return count;
}

} // namespace

BruteBleu brute_force_bleu(const std::vector<std::vector<std::string>> &hyps,
                           const std::vector<std::vector<std::string>> &refs) {
    BruteBleu out{};
    double matched[4] = {0, 0, 0, 0};
    double total[4] = {0, 0, 0, 0};
    for (std::size_t s = 0; s < hyps.size(); ++s) {
        const auto &h = hyps[s];
        const auto &r = refs[s];
        out.hyp_len += static_cast<std::int64_t>(h.size());
        out.ref_len += static_cast<std::int64_t>(r.size());
        for (std::size_t n = 1; n <= 4; ++n) {
            if (h.size() < n) continue;
            // Visit each distinct n-gram once at its first occurrence.
            for (std::size_t p = 0; p + n <= h.size(); ++p) {
                std::vector<std::string> gram(h.begin() + p, h.begin() + p + n);
                bool seen_before = false;
                for (std::size_t q = 0; q < p; ++q) {
                    if (std::equal(gram.begin(), gram.end(), h.begin() + q)) {
                        seen_before = true;
                        break;
                    }
                }
                total[n - 1] += 1;
                if (seen_before) continue;
                matched[n - 1] += static_cast<double>(std::min(count_ngram(h, gram), count_ngram(r, gram)));
            }
        }
    }
    double log_sum = 0.0;
    bool any_zero = false;
    for (int n = 0; n < 4; ++n) {
        out.precisions[n] = total[n] > 0 ? matched[n] / total[n] : 0.0;
        if (out.precisions[n] == 0.0) any_zero = true;
        else log_sum += std::log(out.precisions[n]);
    }
    if (out.hyp_len == 0) out.brevity_penalty = 0.0;
    else if (out.hyp_len < out.ref_len)
        out.brevity_penalty = std::exp(1.0 - static_cast<double>(out.ref_len) / static_cast<double>(out.hyp_len));
    else out.brevity_penalty = 1.0;
    out.score = any_zero ? 0.0 : 100.0 * out.brevity_penalty * std::exp(log_sum / 4.0);
    return out;
}

SyntheticOracleSpec random_oracle_spec(std::uint64_t seed, int min_tokens, int max_tokens,
                                       std::int64_t max_ready_ms) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> len_dist(min_tokens, max_tokens);
    std::uniform_int_distribution<std::int64_t> ready_dist(1, max_ready_ms);
    SyntheticOracleSpec spec;
    const int t = len_dist(rng);
    for (int i = 0; i < t; ++i) {
        spec.target_tokens.push_back("w" + std::to_string(i));
        spec.ready_at_ms.push_back(ready_dist(rng));
    }
    std::sort(spec.ready_at_ms.begin(), spec.ready_at_ms.end());
    spec.high_prob = 0.9;
    spec.vocab_size = 1000;
    return spec;
}

std::size_t expected_prefix_len(const SyntheticOracleSpec &spec, std::int64_t cut_ms) {
    std::size_t best = 0;
    for (std::size_t i = 1; i <= spec.ready_at_ms.size(); ++i) {
        bool all_ready = true;
        for (std::size_t j = 0; j < i; ++j) all_ready = all_ready && spec.ready_at_ms[j] <= cut_ms;
        if (all_ready) best = i;
    }
    return best;
}

OracleCorpus write_oracle_corpus(const std::filesystem::path &dir, int records, std::uint64_t seed,
                                 const std::string &target_lang) {
    OracleCorpus corpus;
    corpus.manifest = dir / "manifest.jsonl";
    corpus.oracle = dir / "oracle.jsonl";
    std::filesystem::create_directories(dir / "audio");
    std::mt19937_64 rng(seed);
    std::string manifest_lines;
    if (!target_lang.empty()) {
        manifest_lines += nlohmann::ordered_json{{"source_lang", "en"}, {"target_lang", target_lang}}.dump() + "\n";
    }
    std::string oracle_lines;
    for (int i = 0; i < records; ++i) {
        const std::int64_t duration = 1500 + static_cast<std::int64_t>(rng() % 6000);
        auto spec = random_oracle_spec(seed * 7919 + static_cast<std::uint64_t>(i), 1, 12, duration);
        const std::string id = "utt" + std::to_string(i);
        const std::string rel = "audio/" + id + ".wav";
        write_wav(dir / rel, make_clip(duration));

        SpeechTextPair pair;
        pair.id = id;
        pair.audio_path = rel;
        pair.target_text = detokenize(spec.target_tokens);
        manifest_lines += pair_to_json_line(pair) + "\n";

        nlohmann::ordered_json o;
        o["audio_path"] = rel;
        o["target_tokens"] = spec.target_tokens;
        o["ready_at_ms"] = spec.ready_at_ms;
        o["high_prob"] = spec.high_prob;
        o["vocab_size"] = spec.vocab_size;
        oracle_lines += o.dump() + "\n";

        corpus.ids.push_back(id);
        corpus.specs.push_back(std::move(spec));
        corpus.durations_ms.push_back(duration);
    }
    write_file(corpus.manifest, manifest_lines);
    write_file(corpus.oracle, oracle_lines);
    return corpus;
}

} // namespace simulsa::testing
