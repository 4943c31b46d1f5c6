#include <doctest.h>

#include <cmath>

#include "fixtures.hpp"
#include "simulsa/backend.hpp"

using namespace simulsa;

namespace {

SyntheticOracleSpec three_token_spec() {
    SyntheticOracleSpec spec;
    spec.target_tokens = {"y1", "y2", "y3"};
    spec.ready_at_ms = {600, 1200, 1800};
    spec.high_prob = 0.9;
    spec.vocab_size = 1000;
    return spec;
}

ScoreRequest score_req(std::int64_t cut_ms, std::vector<std::string> prefix, std::string candidate) {
    return ScoreRequest{"p", testing::make_clip(cut_ms), std::move(prefix), std::move(candidate)};
}

double prob(double logprob) { return std::exp(logprob); }

} // namespace

TEST_CASE("score_next: ready candidate is the argmax") {
    SyntheticProvider oracle(three_token_spec());
    auto s = oracle.score_next(score_req(1500, {"y1"}, "y2"));
    CHECK(s.strictly_greater_count == 0);
    CHECK(s.is_argmax());
    CHECK(prob(s.candidate_logprob) == doctest::Approx(0.9));
    CHECK(s.candidate_logprob > s.eos_logprob);
    CHECK(s.vocab_size == 1000);
}

TEST_CASE("score_next: unready candidate loses to EOS") {
    SyntheticProvider oracle(three_token_spec());
    auto s = oracle.score_next(score_req(1500, {"y1", "y2"}, "y3"));
    CHECK(s.candidate_logprob < s.eos_logprob);
    CHECK(s.strictly_greater_count == 1);
    CHECK(prob(s.eos_logprob) == doctest::Approx(0.9));

    auto first = oracle.score_next(score_req(500, {}, "y1"));
    CHECK(first.candidate_logprob < first.eos_logprob);
}

TEST_CASE("score_next: wrong candidate and diverged prefix") {
    SyntheticProvider oracle(three_token_spec());
    auto wrong = oracle.score_next(score_req(5000, {"y1"}, "zz"));
    CHECK(wrong.strictly_greater_count == 1);
    CHECK(prob(wrong.candidate_logprob) == doctest::Approx(0.1 / 999));
    auto diverged = oracle.score_next(score_req(5000, {"y2"}, "y2"));
    CHECK(diverged.candidate_logprob < diverged.eos_logprob);
}

TEST_CASE("generate follows readiness") {
    SyntheticProvider oracle(three_token_spec());
    auto g = oracle.generate({"p", testing::make_clip(1500), {}, 128});
    CHECK(g.tokens == std::vector<std::string>{"y1", "y2"});
    CHECK(g.finished);

    auto full = oracle.generate({"p", testing::make_clip(2000), {}, 128});
    CHECK(full.tokens == std::vector<std::string>{"y1", "y2", "y3"});
    CHECK(full.finished);

    auto done = oracle.generate({"p", testing::make_clip(2000), {"y1", "y2", "y3"}, 128});
    CHECK(done.tokens.empty());
    CHECK(done.finished);

    auto capped = oracle.generate({"p", testing::make_clip(2000), {}, 2});
    CHECK(capped.tokens == std::vector<std::string>{"y1", "y2"});
    CHECK_FALSE(capped.finished);
}

TEST_CASE("empty target always prefers EOS") {
    SyntheticOracleSpec spec;
    spec.vocab_size = 50;
    SyntheticProvider oracle(spec);
    auto g = oracle.generate({"p", testing::make_clip(3000), {}, 10});
    CHECK(g.tokens.empty());
    CHECK(g.finished);
    auto s = oracle.score_next(score_req(3000, {}, "anything"));
    CHECK(s.candidate_logprob < s.eos_logprob);
}

TEST_CASE("distribution normalization") {
    SyntheticProvider oracle(three_token_spec());
    CHECK(oracle.other_probability() == doctest::Approx(0.1 / 999).epsilon(1e-15));
    for (std::int64_t cut : {100, 700, 1300, 2500}) {
        for (std::size_t i = 0; i <= 3; ++i) {
            std::vector<std::string> prefix(oracle.spec().target_tokens.begin(),
                                            oracle.spec().target_tokens.begin() + i);
            // One argmax token plus vocab_size - 1 tokens at the residual mass.
            const auto &target = oracle.spec().target_tokens;
            auto argmax = oracle.score_next(score_req(cut, prefix, i < target.size() ? target[i] : "y1"));
            auto other = oracle.score_next(score_req(cut, prefix, "not-in-target"));
            double p_top = std::max(prob(argmax.candidate_logprob), prob(argmax.eos_logprob));
            double total = p_top + 999.0 * prob(other.candidate_logprob);
            CHECK(std::abs(total - 1.0) < 1e-9);
        }
    }
}

TEST_CASE("score_next agrees with generate's first token") {
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        auto spec = testing::random_oracle_spec(seed, 1, 8, 4000);
        SyntheticProvider oracle(spec);
        for (std::int64_t cut : {200, 1000, 2500, 4000}) {
            auto g = oracle.generate({"p", testing::make_clip(cut), {}, 1});
            if (g.tokens.empty()) {
                auto s = oracle.score_next(score_req(cut, {}, spec.target_tokens[0]));
                CHECK(s.candidate_logprob < s.eos_logprob);
            } else {
                auto s = oracle.score_next(score_req(cut, {}, g.tokens[0]));
                CHECK(s.strictly_greater_count == 0);
            }
        }
    }
}

TEST_CASE("answers are deterministic") {
    SyntheticProvider oracle(three_token_spec());
    auto a = oracle.score_next(score_req(1300, {"y1"}, "y2"));
    auto b = oracle.score_next(score_req(1300, {"y1"}, "y2"));
    CHECK(a.candidate_logprob == b.candidate_logprob);
    CHECK(a.eos_logprob == b.eos_logprob);
    CHECK(a.strictly_greater_count == b.strictly_greater_count);
}

TEST_CASE("invalid oracle specs are rejected") {
    auto expect_invalid = [](SyntheticOracleSpec spec) {
        try {
            SyntheticProvider p(std::move(spec));
            FAIL("expected InvalidSpec");
        } catch (const Error &e) {
            CHECK(e.code() == ErrorCode::InvalidSpec);
        }
    };
    auto s = three_token_spec();
    s.ready_at_ms = {600, 1200};
    expect_invalid(s);
    s = three_token_spec();
    s.ready_at_ms = {600, 500, 1800};
    expect_invalid(s);
    s = three_token_spec();
    s.high_prob = 0.001; // not above 1 / vocab
    expect_invalid(s);
    s = three_token_spec();
    s.high_prob = 1.0;
    expect_invalid(s);
    s = three_token_spec();
    s.ready_at_ms[0] = 0;
    expect_invalid(s);
}

TEST_CASE("audio path extraction and corpus routing") {
    CHECK(audio_path_from_prompt("<audio>/a b.wav</audio>Detect") == "/a b.wav");
    CHECK(audio_path_from_prompt("no tags").empty());

    SyntheticCorpusProvider corpus;
    auto a = three_token_spec();
    auto b = three_token_spec();
    b.target_tokens = {"z1", "z2", "z3"};
    corpus.add("a.wav", a);
    corpus.add("b.wav", b);
    auto ga = corpus.generate({"<audio>a.wav</audio>x", testing::make_clip(2000), {}, 8});
    auto gb = corpus.generate({"<audio>b.wav</audio>x", testing::make_clip(2000), {}, 8});
    CHECK(ga.tokens.front() == "y1");
    CHECK(gb.tokens.front() == "z1");
    CHECK_THROWS_AS(corpus.generate({"<audio>c.wav</audio>x", testing::make_clip(2000), {}, 8}), Error);
}

TEST_CASE("synthetic corpus file loading") {
    testing::TempDir dir;
    testing::write_file(dir / "oracle.jsonl",
                        R"({"audio_path":"x.wav","target_tokens":["a","b"],"ready_at_ms":[100,200]})"
                        "\n"
                        R"({"audio_path":"y.wav","target_tokens":[],"ready_at_ms":[],"high_prob":0.5,"vocab_size":10})"
                        "\n");
    auto corpus = load_synthetic_corpus((dir / "oracle.jsonl").string());
    CHECK(corpus->size() == 2);
    auto g = corpus->generate({"<audio>x.wav</audio>", testing::make_clip(300), {}, 8});
    CHECK(g.tokens == std::vector<std::string>{"a", "b"});

    testing::write_file(dir / "bad.jsonl", R"({"audio_path":"x.wav","target_tokens":["a"]})");
    CHECK_THROWS_AS(load_synthetic_corpus((dir / "bad.jsonl").string()), Error);

    auto p = open_provider("synthetic:" + (dir / "oracle.jsonl").string());
    CHECK(p != nullptr);
    CHECK_THROWS_AS(open_provider("ftp://nope"), Error);
}
