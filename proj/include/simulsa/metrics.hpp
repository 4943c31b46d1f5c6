#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "simulsa/domain.hpp"

namespace simulsa {

enum class BleuTokenizer { space, cjk_char };

BleuTokenizer parse_bleu_tokenizer(std::string_view name);
std::string_view to_string(BleuTokenizer tokenizer);

// cjk_char when the language tag names Chinese, Japanese or Korean.
BleuTokenizer default_tokenizer_for(std::string_view target_lang);

std::vector<std::string> tokenize_for_bleu(std::string_view text, BleuTokenizer mode);

struct BleuReport {
    double score = 0.0;                       // [0, 100]
    std::array<double, 4> ngram_precisions{}; // clipped matches / hypothesis n-grams
    double brevity_penalty = 0.0;
    std::int64_t hyp_len = 0;
    std::int64_t ref_len = 0;
};

// Corpus BLEU with a single reference per segment, n = 1..4, clipped counts
// summed over the corpus, no smoothing. Throws Error{LengthMismatch} when the
// corpora differ in size or are empty.
BleuReport corpus_bleu(std::span<const std::vector<std::string>> hyps,
                       std::span<const std::vector<std::string>> refs);

struct GridRow {
    std::string model_label;
    std::optional<std::int64_t> m; // augmentation size, sweep reports only
    ChunkSize chunk;
    std::int64_t rollback = 0;
    double bleu = 0.0;
};

// Shortest decimal that round-trips, e.g. 7.9 -> "7.9", 100 -> "100".
std::string format_score(double value);

// "model,chunk_ms,rollback,bleu" sorted by (model, rollback, chunk) with
// infinite chunks last and encoded as "inf". LF line endings.
std::string assemble_grid_report(std::vector<GridRow> rows);

// "model,m,chunk_ms,rollback,bleu" sorted by (model, m, rollback, chunk).
std::string assemble_sweep_report(std::vector<GridRow> rows);

} // namespace simulsa
