#pragma once

#include <cstdint>
#include <optional>
#include <random>

#include "simulsa/domain.hpp"

namespace simulsa {

struct TruncationDraw {
    double unit_draw = 0.0; // u in [0, 1)
    double x_prime = 0.0;   // variate on [0, 1) before mapping to milliseconds
    std::int64_t point_ms = 0;
};

// Quantile of Beta(alpha, beta) at u. Closed form when alpha == 1 or beta == 1,
// numeric inversion of the regularized incomplete beta otherwise.
double beta_quantile(double alpha, double beta, double u);

// Inverse-transform draw of a truncation point for a clip of the given
// duration. Returns nullopt (skip) when the family is restricted to [l, r] and
// the clip is not longer than l. The upper bound is min(r, duration).
//
//   beta_decay           s' = l + (r_eff - l) * x',  x' ~ Beta(alpha, beta)
//   uniform              s' = l + (r_eff - l) * u
//   beta_decay_fullspan  s' = 1 + (duration - 1) * x'
//   beta_decay_grid      beta_decay point floored onto l + k * grid_step
//
// Continuous results are rounded half-up to integer milliseconds.
// Throws Error{InvalidDraw} if u is outside [0, 1).
std::optional<TruncationDraw> sample_truncation_point(const TruncationPolicy &policy,
                                                      std::int64_t audio_duration_ms,
                                                      double unit_draw);

// Prefix holding floor(point_ms * rate / 1000) samples; the whole clip when
// point_ms >= duration. Throws Error{EmptyClip} for an empty clip.
AudioClip slice_audio(const AudioClip &clip, std::int64_t point_ms);

// Probability density (per ms) of the truncation point. Zero outside the
// support. Without a duration the support is [l, r]; with one it is
// [l, min(r, duration)] (or [1, duration] for the full-span family, which
// requires the duration). The grid family reports its cell masses spread
// uniformly over each grid cell.
double density(const TruncationPolicy &policy, double s_prime_ms,
               std::optional<std::int64_t> audio_duration_ms = std::nullopt);

// Matching cumulative distribution of the continuous (unrounded) point.
double cumulative(const TruncationPolicy &policy, double s_prime_ms,
                  std::optional<std::int64_t> audio_duration_ms = std::nullopt);

// 53-bit uniform double in [0, 1) from one generator output.
double unit_from_bits(std::uint64_t bits);

// Per-sample child stream: the generator seeded with seed ^ index. Lets
// workers draw independently while keeping results reproducible.
double unit_draw_for(std::uint64_t seed, std::uint64_t index);

// Sequential seeded sampler over a single generator.
class TruncationSampler {
  public:
    TruncationSampler(TruncationPolicy policy, std::uint64_t seed);

    double next_unit();
    std::optional<TruncationDraw> next(std::int64_t audio_duration_ms);

    const TruncationPolicy &policy() const { return policy_; }

  private:
    TruncationPolicy policy_;
    std::mt19937_64 engine_;
};

} // namespace simulsa
