#include <doctest.h>

#include <cmath>

#include "fixtures.hpp"
#include "simulsa/spec_align.hpp"
#include "simulsa/text.hpp"
#include "simulsa/trunc_sampler.hpp"

using namespace simulsa;

namespace {

TokenScore score(double p_cand, double p_eos, std::int64_t count, std::int64_t vocab) {
    return TokenScore{std::log(p_cand), count, std::log(p_eos), vocab};
}

SyntheticOracleSpec three_token_spec() {
    SyntheticOracleSpec spec;
    spec.target_tokens = {"y1", "y2", "y3"};
    spec.ready_at_ms = {600, 1200, 1800};
    return spec;
}

// Provider with a fixed rank for every candidate, for tau sweeps.
class RankedProvider final : public Provider {
  public:
    explicit RankedProvider(std::vector<std::int64_t> ranks) : ranks_(std::move(ranks)) {}
    TokenScore score_next(const ScoreRequest &r) override {
        return TokenScore{std::log(0.3), ranks_.at(r.prefix_tokens.size()), std::log(0.01), 1000};
    }
    Generation generate(const GenerateRequest &) override { return {}; }

  private:
    std::vector<std::int64_t> ranks_;
};

class FailingProvider final : public Provider {
  public:
    explicit FailingProvider(std::size_t fail_at) : fail_at_(fail_at) {}
    TokenScore score_next(const ScoreRequest &r) override {
        if (r.prefix_tokens.size() == fail_at_) throw Error(ErrorCode::BackendUnavailable, "down");
        return TokenScore{std::log(0.9), 0, std::log(0.01), 100};
    }
    Generation generate(const GenerateRequest &) override { return {}; }

  private:
    std::size_t fail_at_;
};

} // namespace

TEST_CASE("termination rule disjuncts") {
    CHECK(termination_check(score(0.01, 0.02, 0, 1000), 0.1));
    CHECK(termination_reason(score(0.01, 0.02, 0, 1000), 0.1) == StopReason::eos_dominates);
    CHECK(termination_check(score(0.30, 0.001, 150, 1000), 0.1));
    CHECK(termination_reason(score(0.30, 0.001, 150, 1000), 0.1) == StopReason::rank_exceeds_tau);
    CHECK_FALSE(termination_check(score(0.30, 0.001, 0, 1000), 0.1));
}

TEST_CASE("rank threshold is strict at the boundary") {
    const std::int64_t vocab = 151646;
    const double tau = 100.0 / vocab;
    CHECK(default_tau(vocab) == tau);
    CHECK_FALSE(termination_check(score(0.3, 0.001, 100, vocab), tau));
    CHECK(termination_check(score(0.3, 0.001, 101, vocab), tau));
    // Equal probabilities do not terminate either.
    CHECK_FALSE(termination_check(score(0.3, 0.3, 0, vocab), tau));
}

TEST_CASE("speculation on the three-token oracle") {
    SyntheticProvider oracle(three_token_spec());
    const std::vector<std::string> target = {"y1", "y2", "y3"};
    SpeculationConfig cfg;

    auto mid = speculate_prefix(oracle, testing::make_clip(1500), target, cfg, "p");
    CHECK(mid.prefix_len == 2);
    CHECK(mid.stop_reason == StopReason::eos_dominates);
    CHECK(mid.per_step_scores.size() == 3);

    auto early = speculate_prefix(oracle, testing::make_clip(500), target, cfg, "p");
    CHECK(early.prefix_len == 0);
    CHECK(early.per_step_scores.size() == 1);

    auto late = speculate_prefix(oracle, testing::make_clip(1800), target, cfg, "p");
    CHECK(late.prefix_len == 3);
    CHECK(late.stop_reason == StopReason::exhausted_target);

    CHECK_THROWS_AS(speculate_prefix(oracle, testing::make_clip(1800), {}, cfg, "p"), Error);
}

TEST_CASE("brute-force equivalence and monotonicity over random oracles") {
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        auto spec = testing::random_oracle_spec(seed, 1, 12, 6000);
        SyntheticProvider oracle(spec);
        std::size_t prev = 0;
        for (std::int64_t cut = 100; cut <= 6500; cut += 400) {
            auto r = speculate_prefix(oracle, testing::make_clip(cut), spec.target_tokens, {}, "p");
            CHECK(r.prefix_len == testing::expected_prefix_len(spec, cut));
            CHECK(r.prefix_len >= prev);
            prev = r.prefix_len;
        }
    }
}

TEST_CASE("larger tau never shortens the prefix") {
    RankedProvider ranked({0, 3, 1, 40, 2, 0, 900});
    const std::vector<std::string> target = {"a", "b", "c", "d", "e", "f", "g"};
    std::size_t prev = 0;
    for (double tau : {0.0001, 0.001, 0.002, 0.003, 0.01, 0.05, 0.5, 0.95}) {
        SpeculationConfig cfg;
        cfg.tau = tau;
        auto r = speculate_prefix(ranked, testing::make_clip(1000), target, cfg, "p");
        CHECK(r.prefix_len >= prev);
        prev = r.prefix_len;
    }
    SpeculationConfig cfg;
    cfg.tau = 0.002; // ranks 3/1000 > 0.002 stop at step 2
    auto r = speculate_prefix(ranked, testing::make_clip(1000), target, cfg, "p");
    CHECK(r.prefix_len == 1);
    CHECK(r.stop_reason == StopReason::rank_exceeds_tau);
}

TEST_CASE("provider failure keeps partial scores") {
    FailingProvider failing(2);
    const std::vector<std::string> target = {"a", "b", "c", "d"};
    try {
        speculate_prefix(failing, testing::make_clip(1000), target, {}, "p");
        FAIL("expected SpeculationError");
    } catch (const SpeculationError &e) {
        CHECK(e.code() == ErrorCode::BackendUnavailable);
        CHECK(e.partial_scores().size() == 2);
    }
}

TEST_CASE("build_truncated_pair") {
    SpeechTextPair parent;
    parent.id = "utt1";
    parent.audio_path = "/data/utt1.wav";
    parent.target_text = "a b c d e";
    parent.source_text = "src";
    auto tokens = tokenize_text(parent.target_text);

    SpeculationResult two{2, StopReason::eos_dominates, {}};
    auto pair = build_truncated_pair(parent, tokens, 1500, two, testing::make_clip(1500));
    REQUIRE(pair);
    CHECK(pair->kind == PairKind::truncated);
    CHECK(pair->target_text == "a b");
    CHECK(pair->truncation_ms == 1500);
    CHECK(pair->audio_path == parent.audio_path);
    CHECK(pair->audio->duration_ms() == 1500);
    CHECK(pair->id == "utt1#t1500");
    CHECK_FALSE(pair->source_text.has_value());

    SpeculationResult none{0, StopReason::eos_dominates, {}};
    CHECK_FALSE(build_truncated_pair(parent, tokens, 1500, none).has_value());

    SpeculationResult all{5, StopReason::exhausted_target, {}};
    CHECK(build_truncated_pair(parent, tokens, 1500, all)->target_text == parent.target_text);

    // CJK targets keep their characters adjacent.
    parent.target_text = "我们 去 OK 了";
    auto zh = tokenize_text(parent.target_text);
    SpeculationResult three{3, StopReason::eos_dominates, {}};
    auto zh_pair = build_truncated_pair(parent, zh, 900, three);
    CHECK(zh_pair->target_text == "我们去");
    CHECK(tokenize_text(zh_pair->target_text) == std::vector<std::string>(zh.begin(), zh.begin() + 3));
}
