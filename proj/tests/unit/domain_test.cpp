#include <doctest.h>

#include <random>

#include "fixtures.hpp"
#include "simulsa/domain.hpp"
#include "simulsa/text.hpp"

using namespace simulsa;

namespace {

ErrorCode policy_error(const TruncationPolicy &p) {
    try {
        validate_policy(p);
    } catch (const Error &e) {
        return e.code();
    }
    FAIL("expected a validation error");
    return ErrorCode::InvalidArgument;
}

} // namespace

TEST_CASE("validate_policy") {
    TruncationPolicy p;
    CHECK(p.alpha == 1.0);
    CHECK(p.beta == 3.0);
    CHECK_NOTHROW(validate_policy(p));

    TruncationPolicy swapped;
    swapped.l_ms = 5000;
    swapped.r_ms = 500;
    CHECK(policy_error(swapped) == ErrorCode::InvalidInterval);

    TruncationPolicy grid;
    grid.family = TruncationFamily::beta_decay_grid;
    grid.grid_step_ms = 500;
    CHECK_NOTHROW(validate_policy(grid));
    grid.grid_step_ms = 700;
    CHECK(policy_error(grid) == ErrorCode::InvalidGrid);

    // Step only has to divide the span for the grid family.
    TruncationPolicy plain;
    plain.grid_step_ms = 700;
    CHECK_NOTHROW(validate_policy(plain));

    TruncationPolicy zero;
    zero.l_ms = 0;
    CHECK(policy_error(zero) == ErrorCode::NonPositiveParameter);
    TruncationPolicy bad_beta;
    bad_beta.beta = 0.0;
    CHECK(policy_error(bad_beta) == ErrorCode::NonPositiveParameter);
}

TEST_CASE("AudioClip duration and prefix sharing") {
    auto clip = testing::make_clip(1234, 16000);
    CHECK(clip.sample_count() == 19744);
    CHECK(clip.duration_ms() == 1234);
    CHECK(clip.channel_count() == 1);
    AudioClip odd(std::vector<std::int16_t>(7), 8000);
    CHECK(odd.duration_ms() == 0); // floor(1000 * 7 / 8000)
    auto head = clip.prefix(100);
    CHECK(head.sample_count() == 100);
    CHECK(head.samples().data() == clip.samples().data());
    CHECK(clip.prefix(1u << 30) == clip);
    CHECK_THROWS_AS(AudioClip(std::vector<std::int16_t>(3), 0), Error);
}

TEST_CASE("pair JSON form") {
    auto pair = pair_from_json_line(R"({"id":"a","audio_path":"x.wav","target_text":"你好 world"})");
    CHECK(pair.kind == PairKind::offline);
    CHECK_FALSE(pair.source_text);
    CHECK(pair.target_text == "你好 world");

    auto trunc = pair_from_json_line(
        R"({"id":"b","audio_path":"y.wav","source_text":"s","target_text":"t","kind":"truncated","truncation_ms":900})");
    CHECK(trunc.kind == PairKind::truncated);
    CHECK(trunc.truncation_ms == 900);

    CHECK_THROWS_AS(pair_from_json_line(R"({"id":"b","audio_path":"y.wav","target_text":"t","kind":"truncated"})"),
                    Error);
    CHECK_THROWS_AS(pair_from_json_line(R"({"id":"b","audio_path":"y.wav","target_text":"t","truncation_ms":5})"),
                    Error);
    CHECK_THROWS_AS(pair_from_json_line(R"({"id":"b","target_text":"t"})"), Error);
    CHECK_THROWS_AS(pair_from_json_line("not json"), Error);
}

TEST_CASE("pairs round-trip bit-identically through their canonical form") {
    std::mt19937_64 rng(11);
    const std::vector<std::string> pieces = {"a", "é", "你", "\"q\"", "\\", "\t", " ", "🙂", "x y"};
    for (int i = 0; i < 300; ++i) {
        SpeechTextPair p;
        auto text = [&] {
            std::string s;
            for (int n = static_cast<int>(rng() % 6); n > 0; --n) s += pieces[rng() % pieces.size()];
            return s;
        };
        p.id = "id" + std::to_string(i) + text();
        p.audio_path = text() + ".wav";
        p.target_text = text();
        if (rng() % 2) p.source_text = text();
        if (rng() % 2) {
            p.kind = PairKind::truncated;
            p.truncation_ms = static_cast<std::int64_t>(rng() % 100000);
        }
        const auto line = pair_to_json_line(p);
        CHECK(pair_to_json_line(pair_from_json_line(line)) == line);
    }
}

TEST_CASE("TokenScore validation") {
    CHECK_NOTHROW(validate_token_score({-0.1, 0, -2.0, 10}));
    CHECK(TokenScore{-0.1, 0, -2.0, 10}.is_argmax());
    CHECK_THROWS_AS(validate_token_score({-0.1, 10, -2.0, 10}), Error);
    CHECK_THROWS_AS(validate_token_score({-0.1, -1, -2.0, 10}), Error);
    CHECK_THROWS_AS(validate_token_score({0.1, 0, -2.0, 10}), Error);
    CHECK_THROWS_AS(validate_token_score({std::nan(""), 0, -2.0, 10}), Error);
    CHECK_THROWS_AS(validate_token_score({-1, 0, -2.0, 0}), Error);
}

TEST_CASE("ChunkSize parsing and ordering") {
    CHECK(ChunkSize::parse("500").ms() == 500);
    CHECK(ChunkSize::parse("inf").is_infinite());
    CHECK(ChunkSize::parse("inf").to_string() == "inf");
    CHECK_THROWS_AS(ChunkSize::parse("0"), Error);
    CHECK_THROWS_AS(ChunkSize::parse("-5"), Error);
    CHECK_THROWS_AS(ChunkSize::parse("5x"), Error);
    CHECK(ChunkSize::finite(500) < ChunkSize::finite(1000));
    CHECK(ChunkSize::finite(4000) < ChunkSize::infinite());
    CHECK_FALSE(ChunkSize::infinite() < ChunkSize::finite(4000));
}

TEST_CASE("text tokens") {
    using Tokens = std::vector<std::string>;
    CHECK(tokenize_text("  the  cat\tsat\n") == Tokens{"the", "cat", "sat"});
    CHECK(tokenize_text("我们去 park 吧") == Tokens{"我", "们", "去", "park", "吧"});
    CHECK(detokenize(Tokens{"我", "们", "去", "park", "吧"}) == "我们去 park 吧");
    CHECK(detokenize(Tokens{}).empty());
    CHECK(tokenize_text("").empty());
    // Retokenizing a detokenized prefix gives the prefix back.
    const Tokens t = tokenize_text("Hello 世界, this is 一个 test。");
    for (std::size_t n = 0; n <= t.size(); ++n) {
        Tokens prefix(t.begin(), t.begin() + static_cast<std::ptrdiff_t>(n));
        CHECK(tokenize_text(detokenize(prefix)) == prefix);
    }
}
