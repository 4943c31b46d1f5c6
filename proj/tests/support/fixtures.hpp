#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "simulsa/backend.hpp"
#include "simulsa/domain.hpp"

namespace simulsa::testing {

// Deterministic non-silent clip of the given duration.
AudioClip make_clip(std::int64_t duration_ms, int sample_rate_hz = 16000);

// Removes the directory on destruction.
class TempDir {
  public:
    TempDir();
    ~TempDir();
    TempDir(const TempDir &) = delete;
    TempDir &operator=(const TempDir &) = delete;

    const std::filesystem::path &path() const { return path_; }
    std::filesystem::path operator/(const std::string &name) const { return path_ / name; }

  private:
    std::filesystem::path path_;
};

std::string read_file(const std::filesystem::path &path);
void write_file(const std::filesystem::path &path, const std::string &content);

// Two-sided Kolmogorov-Smirnov statistic of `samples` against `cdf`.
double ks_statistic(std::vector<double> samples, const std::function<double(double)> &cdf);

// Brute-force corpus BLEU written independently of the library: n-grams are
// enumerated by position and counted by linear scans.
struct BruteBleu {
    double score;
    double precisions[4];
    double brevity_penalty;
    std::int64_t hyp_len;
    std::int64_t ref_len;
};
BruteBleu brute_force_bleu(const std::vector<std::vector<std::string>> &hyps,
                           const std::vector<std::vector<std::string>> &refs);

// Random oracle spec: t in [min_tokens, max_tokens], readiness times strictly
// inside (0, max_ready_ms], non-decreasing. Tokens are unique "w<i>" words.
SyntheticOracleSpec random_oracle_spec(std::uint64_t seed, int min_tokens, int max_tokens,
                                       std::int64_t max_ready_ms);

// Independent oracle for the speculated prefix: max{i : a_j <= cut for j <= i}.
std::size_t expected_prefix_len(const SyntheticOracleSpec &spec, std::int64_t cut_ms);

// On-disk evaluation corpus: one WAV per record under dir/audio, a manifest
// and a matching synthetic oracle file. Record i has a random spec whose
// readiness times fall inside its clip; targets are the spec tokens joined
// by spaces.
struct OracleCorpus {
    std::filesystem::path manifest;
    std::filesystem::path oracle;
    std::vector<std::string> ids;
    std::vector<SyntheticOracleSpec> specs;
    std::vector<std::int64_t> durations_ms;
};
OracleCorpus write_oracle_corpus(const std::filesystem::path &dir, int records, std::uint64_t seed,
                                 const std::string &target_lang = "");

} // namespace simulsa::testing
