#include "simulsa/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <tuple>

#include "simulsa/text.hpp"

namespace simulsa {

BleuTokenizer parse_bleu_tokenizer(std::string_view name) {
    if (name == "space") return BleuTokenizer::space;
    if (name == "cjk_char" || name == "zh") return BleuTokenizer::cjk_char;
    throw Error(ErrorCode::InvalidArgument, "unknown tokenizer '" + std::string(name) + "'");
}

std::string_view to_string(BleuTokenizer tokenizer) {
    return tokenizer == BleuTokenizer::space ? "space" : "cjk_char";
}

BleuTokenizer default_tokenizer_for(std::string_view target_lang) {
    auto base = target_lang.substr(0, target_lang.find_first_of("-_"));
    if (base == "zh" || base == "ja" || base == "ko" || base == "cmn" || base == "yue") {
        return BleuTokenizer::cjk_char;
    }
    return BleuTokenizer::space;
}

std::vector<std::string> tokenize_for_bleu(std::string_view text, BleuTokenizer mode) {
    return split_tokens(text, mode == BleuTokenizer::cjk_char);
}

namespace {

using Ngram = std::vector<std::string_view>;

std::map<Ngram, std::int64_t> count_ngrams(const std::vector<std::string> &tokens, std::size_t n) {
    std::map<Ngram, std::int64_t> counts;
    if (tokens.size() < n) return counts;
    for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
        ++counts[Ngram(tokens.begin() + static_cast<std::ptrdiff_t>(i),
                       tokens.begin() + static_cast<std::ptrdiff_t>(i + n))];
    }
    return counts;
}

} // namespace

BleuReport corpus_bleu(std::span<const std::vector<std::string>> hyps,
                       std::span<const std::vector<std::string>> refs) {
    if (hyps.size() != refs.size()) {
        throw Error(ErrorCode::LengthMismatch, std::to_string(hyps.size()) + " hypotheses vs " +
                                                   std::to_string(refs.size()) + " references");
    }
    if (hyps.empty()) throw Error(ErrorCode::LengthMismatch, "empty corpus");

    std::array<std::int64_t, 4> matched{};
    std::array<std::int64_t, 4> total{};
    BleuReport report;
    for (std::size_t s = 0; s < hyps.size(); ++s) {
        report.hyp_len += static_cast<std::int64_t>(hyps[s].size());
        report.ref_len += static_cast<std::int64_t>(refs[s].size());
        for (std::size_t n = 1; n <= 4; ++n) {
            auto hyp_counts = count_ngrams(hyps[s], n);
            auto ref_counts = count_ngrams(refs[s], n);
            for (const auto &[gram, count] : hyp_counts) {
                total[n - 1] += count;
                auto it = ref_counts.find(gram);
                if (it != ref_counts.end()) matched[n - 1] += std::min(count, it->second);
            }
        }
    }

    double log_sum = 0.0;
    bool any_zero = false;
    for (std::size_t n = 0; n < 4; ++n) {
        report.ngram_precisions[n] =
            total[n] > 0 ? static_cast<double>(matched[n]) / static_cast<double>(total[n]) : 0.0;
        if (report.ngram_precisions[n] == 0.0) any_zero = true;
        else log_sum += std::log(report.ngram_precisions[n]);
    }

    if (report.hyp_len == 0) {
        report.brevity_penalty = 0.0;
    } else if (report.hyp_len < report.ref_len) {
        report.brevity_penalty =
            std::exp(1.0 - static_cast<double>(report.ref_len) / static_cast<double>(report.hyp_len));
    } else {
        report.brevity_penalty = 1.0;
    }
    report.score = any_zero ? 0.0 : 100.0 * report.brevity_penalty * std::exp(log_sum / 4.0);
    report.score = std::clamp(report.score, 0.0, 100.0);
    return report;
}

std::string format_score(double value) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
    return std::string(buf, ptr);
}

namespace {

std::string csv_row(const GridRow &row, bool with_m) {
    std::string line = row.model_label + ",";
    if (with_m) line += (row.m ? std::to_string(*row.m) : std::string()) + ",";
    line += row.chunk.to_string() + "," + std::to_string(row.rollback) + "," + format_score(row.bleu) + "\n";
    return line;
}

} // namespace

std::string assemble_grid_report(std::vector<GridRow> rows) {
    std::stable_sort(rows.begin(), rows.end(), [](const GridRow &a, const GridRow &b) {
        return std::tie(a.model_label, a.rollback, a.chunk) < std::tie(b.model_label, b.rollback, b.chunk);
    });
    std::string csv = "model,chunk_ms,rollback,bleu\n";
    for (const auto &row : rows) csv += csv_row(row, false);
    return csv;
}

std::string assemble_sweep_report(std::vector<GridRow> rows) {
    std::stable_sort(rows.begin(), rows.end(), [](const GridRow &a, const GridRow &b) {
        return std::tie(a.model_label, a.m, a.rollback, a.chunk) < std::tie(b.model_label, b.m, b.rollback, b.chunk);
    });
    std::string csv = "model,m,chunk_ms,rollback,bleu\n";
    for (const auto &row : rows) csv += csv_row(row, true);
    return csv;
}

} // namespace simulsa
