#include "simulsa/trunc_sampler.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/special_functions/beta.hpp>

namespace simulsa {

namespace {

bool restricted(TruncationFamily family) { return family != TruncationFamily::beta_decay_fullspan; }

std::int64_t round_half_up(double value) { return static_cast<std::int64_t>(std::floor(value + 0.5)); }

// CDF and PDF of Beta(alpha, beta) on [0, 1].
double unit_cdf(const TruncationPolicy &p, double x) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    if (p.family == TruncationFamily::uniform) return x;
    if (p.alpha == 1.0) return 1.0 - std::pow(1.0 - x, p.beta);
    return boost::math::ibeta(p.alpha, p.beta, x);
}

double unit_pdf(const TruncationPolicy &p, double x) {
    if (x < 0.0 || x > 1.0) return 0.0;
    if (p.family == TruncationFamily::uniform) return 1.0;
    if (p.alpha == 1.0) return p.beta * std::pow(1.0 - x, p.beta - 1.0);
    return boost::math::ibeta_derivative(p.alpha, p.beta, x);
}

struct Support {
    double lower;
    double upper;
    bool empty;
};

Support support_of(const TruncationPolicy &p, std::optional<std::int64_t> duration) {
    if (!restricted(p.family)) {
        if (!duration) {
            throw Error(ErrorCode::InvalidArgument, "full-span density needs the clip duration");
        }
        return {1.0, static_cast<double>(*duration), *duration < 1};
    }
    const auto upper = duration ? std::min(p.r_ms, *duration) : p.r_ms;
    return {static_cast<double>(p.l_ms), static_cast<double>(upper), upper <= p.l_ms};
}

// Grid cell [start, end) holding s, clipped to the support.
std::pair<double, double> grid_cell(const TruncationPolicy &p, const Support &sup, double s) {
    const double step = static_cast<double>(p.grid_step_ms);
    double start = sup.lower + std::floor((s - sup.lower) / step) * step;
    if (start >= sup.upper) start -= step;
    return {start, std::min(start + step, sup.upper)};
}

} // namespace

double beta_quantile(double alpha, double beta, double u) {
    if (u <= 0.0) return 0.0;
    if (alpha == 1.0) {
        if (beta == 3.0) return 1.0 - std::cbrt(1.0 - u);
        return 1.0 - std::pow(1.0 - u, 1.0 / beta);
    }
    if (beta == 1.0) return std::pow(u, 1.0 / alpha);
    return boost::math::ibeta_inv(alpha, beta, u);
}

std::optional<TruncationDraw> sample_truncation_point(const TruncationPolicy &policy,
                                                      std::int64_t audio_duration_ms,
                                                      double unit_draw) {
    validate_policy(policy);
    if (audio_duration_ms <= 0) {
        throw Error(ErrorCode::InvalidArgument, "audio duration must be positive");
    }
    if (!(unit_draw >= 0.0 && unit_draw < 1.0)) {
        throw Error(ErrorCode::InvalidDraw, "unit draw must lie in [0, 1)");
    }

    TruncationDraw draw;
    draw.unit_draw = unit_draw;
    draw.x_prime = policy.family == TruncationFamily::uniform
                       ? unit_draw
                       : beta_quantile(policy.alpha, policy.beta, unit_draw);

    if (!restricted(policy.family)) {
        const double span = static_cast<double>(audio_duration_ms - 1);
        draw.point_ms = std::clamp<std::int64_t>(round_half_up(1.0 + span * draw.x_prime), 1,
                                                 audio_duration_ms);
        return draw;
    }

    if (audio_duration_ms <= policy.l_ms) return std::nullopt;
    const std::int64_t upper = std::min(policy.r_ms, audio_duration_ms);
    const double lower = static_cast<double>(policy.l_ms);
    const double point = lower + static_cast<double>(upper - policy.l_ms) * draw.x_prime;

    if (policy.family == TruncationFamily::beta_decay_grid) {
        const auto cells = static_cast<std::int64_t>(std::floor((point - lower) /
                                                                static_cast<double>(policy.grid_step_ms)));
        draw.point_ms = policy.l_ms + cells * policy.grid_step_ms;
    } else {
        draw.point_ms = round_half_up(point);
    }
    draw.point_ms = std::clamp(draw.point_ms, policy.l_ms, upper);
    return draw;
}

AudioClip slice_audio(const AudioClip &clip, std::int64_t point_ms) {
    if (clip.empty()) throw Error(ErrorCode::EmptyClip, "cannot slice an empty clip");
    if (point_ms <= 0) throw Error(ErrorCode::InvalidArgument, "slice point must be positive");
    if (point_ms >= clip.duration_ms()) return clip;
    const auto count = point_ms * clip.sample_rate_hz() / 1000;
    return clip.prefix(static_cast<std::size_t>(count));
}

double density(const TruncationPolicy &policy, double s_prime_ms,
               std::optional<std::int64_t> audio_duration_ms) {
    validate_policy(policy);
    const Support sup = support_of(policy, audio_duration_ms);
    if (sup.empty || s_prime_ms < sup.lower || s_prime_ms > sup.upper) return 0.0;
    const double width = sup.upper - sup.lower;
    if (width <= 0.0) return 0.0;

    if (policy.family == TruncationFamily::beta_decay_grid) {
        auto [start, end] = grid_cell(policy, sup, s_prime_ms);
        const double mass = unit_cdf(policy, (end - sup.lower) / width) -
                            unit_cdf(policy, (start - sup.lower) / width);
        return mass / (end - start);
    }
    return unit_pdf(policy, (s_prime_ms - sup.lower) / width) / width;
}

double cumulative(const TruncationPolicy &policy, double s_prime_ms,
                  std::optional<std::int64_t> audio_duration_ms) {
    validate_policy(policy);
    const Support sup = support_of(policy, audio_duration_ms);
    if (sup.empty) return 1.0;
    if (s_prime_ms <= sup.lower) return 0.0;
    if (s_prime_ms >= sup.upper) return 1.0;
    const double width = sup.upper - sup.lower;

    if (policy.family == TruncationFamily::beta_decay_grid) {
        auto [start, end] = grid_cell(policy, sup, s_prime_ms);
        const double f0 = unit_cdf(policy, (start - sup.lower) / width);
        const double f1 = unit_cdf(policy, (end - sup.lower) / width);
        return f0 + (f1 - f0) * (s_prime_ms - start) / (end - start);
    }
    return unit_cdf(policy, (s_prime_ms - sup.lower) / width);
}

double unit_from_bits(std::uint64_t bits) { return static_cast<double>(bits >> 11) * 0x1.0p-53; }

double unit_draw_for(std::uint64_t seed, std::uint64_t index) {
    std::mt19937_64 engine(seed ^ index);
    return unit_from_bits(engine());
}

TruncationSampler::TruncationSampler(TruncationPolicy policy, std::uint64_t seed)
    : policy_(policy), engine_(seed) {
    validate_policy(policy_);
}

double TruncationSampler::next_unit() { return unit_from_bits(engine_()); }

std::optional<TruncationDraw> TruncationSampler::next(std::int64_t audio_duration_ms) {
    return sample_truncation_point(policy_, audio_duration_ms, next_unit());
}

} // namespace simulsa
