#include <doctest.h>

#include <cmath>
#include <limits>

#include "dusev/cue.hpp"
#include "dusev/error.hpp"
#include "dusev/rng.hpp"

using namespace dusev;

namespace {

RawSceneObservation make_obs(std::array<int, 5> counts, std::array<double, 5> confs) {
  RawSceneObservation obs;
  obs.scene_id = "test";
  obs.counts = counts;
  obs.confidences = confs;
  return obs;
}

}  // namespace

TEST_CASE("tokenize: all-zero counts give all-zero tokens") {
  const auto tokens = tokenize(make_obs({0, 0, 0, 0, 0}, {0, 0, 0, 0, 0}), NormalizationCaps{});
  for (const auto& t : tokens.tokens) {
    CHECK(t.v == 0.0);
    CHECK(t.c == 0.0);
  }
}

TEST_CASE("tokenize: counts at the cap saturate to v = 1") {
  NormalizationCaps caps;
  const auto tokens =
      tokenize(make_obs({50, 20, 5, 3, 20}, {0.9, 0.9, 0.9, 0.9, 0.9}), caps);
  for (const auto& t : tokens.tokens) CHECK(t.v == 1.0);
}

TEST_CASE("tokenize: person count 25 with cap 50 and confidence 0.8") {
  const auto tokens = tokenize(make_obs({25, 0, 0, 0, 0}, {0.8, 0, 0, 0, 0}), NormalizationCaps{});
  CHECK(tokens.tokens[0].v == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(tokens.tokens[0].c == doctest::Approx(0.8).epsilon(1e-12));
}

TEST_CASE("tokenize: bad confidence names the offending cue") {
  CHECK_THROWS_WITH_AS(tokenize(make_obs({1, 0, 2, 0, 0}, {0.5, 0, 1.5, 0, 0}),
                                NormalizationCaps{}),
                       doctest::Contains("weapon"), ValidationError);
  CHECK_THROWS_AS(tokenize(make_obs({0, 0, 0, 0, 0},
                                    {0, 0, 0, std::numeric_limits<double>::quiet_NaN(), 0}),
                           NormalizationCaps{}),
                  ValidationError);
}

TEST_CASE("tokenize: negative count rejected") {
  CHECK_THROWS_AS(tokenize(make_obs({-1, 0, 0, 0, 0}, {0.5, 0, 0, 0, 0}), NormalizationCaps{}),
                  ValidationError);
}

TEST_CASE("tokenize: bad cap rejected") {
  NormalizationCaps caps;
  caps.caps[2] = 0;
  CHECK_THROWS_AS(tokenize(make_obs({0, 0, 0, 0, 0}, {0, 0, 0, 0, 0}), caps), ConfigError);
}

TEST_CASE("tokenize: monotone in counts and idempotent past the cap") {
  Rng rng(99);
  NormalizationCaps caps;
  for (int trial = 0; trial < 200; ++trial) {
    const int k = rng.uniform_int(0, kNumCues - 1);
    auto obs = make_obs({rng.uniform_int(0, 60), rng.uniform_int(0, 25), rng.uniform_int(0, 7),
                         rng.uniform_int(0, 4), rng.uniform_int(0, 25)},
                        {0.7, 0.7, 0.7, 0.7, 0.7});
    auto more = obs;
    more.counts[k] += rng.uniform_int(1, 10);
    const auto t0 = tokenize(obs, caps);
    const auto t1 = tokenize(more, caps);
    CHECK(t1.tokens[k].v >= t0.tokens[k].v);
  }
  // any count at or past the cap pins v at exactly 1
  auto base = make_obs({50, 0, 0, 0, 0}, {0.9, 0, 0, 0, 0});
  auto beyond = make_obs({83, 0, 0, 0, 0}, {0.9, 0, 0, 0, 0});
  CHECK(tokenize(base, caps).tokens[0].v == 1.0);
  CHECK(tokenize(beyond, caps).tokens[0].v == 1.0);
}

TEST_CASE("quantize: band anchors from the published ranges") {
  CHECK(quantize(2.0) == RiskBand::Low);
  CHECK(quantize(5.0) == RiskBand::Medium);
  CHECK(quantize(9.0) == RiskBand::High);
}

TEST_CASE("quantize: boundary policy at 3.5 and 6.5") {
  CHECK(quantize(3.5) == RiskBand::Medium);
  CHECK(quantize(6.5) == RiskBand::High);
  CHECK(quantize(3.4999999) == RiskBand::Low);
  CHECK(quantize(6.4999999) == RiskBand::Medium);
}

TEST_CASE("quantize: rejects NaN and out-of-range scores") {
  CHECK_THROWS_AS(quantize(std::numeric_limits<double>::quiet_NaN()), DomainError);
  CHECK_THROWS_AS(quantize(-0.1), DomainError);
  CHECK_THROWS_AS(quantize(10.1), DomainError);
}

TEST_CASE("quantize: partitions [0,10] totally") {
  Rng rng(7);
  for (int i = 0; i <= 1000; ++i) {
    const double score = 10.0 * i / 1000.0;
    const RiskBand band = quantize(score);
    // exactly one band per the boundary rule
    if (score < 3.5) {
      CHECK(band == RiskBand::Low);
    } else if (score < 6.5) {
      CHECK(band == RiskBand::Medium);
    } else {
      CHECK(band == RiskBand::High);
    }
  }
  (void)rng;
}

TEST_CASE("validate_scene: reports every violation") {
  SUBCASE("confidence without detections") {
    const auto violations = validate_scene(make_obs({0, 0, 0, 0, 0}, {0.9, 0, 0, 0, 0}));
    REQUIRE(violations.size() == 1);
    CHECK(violations[0].find("confidence without detections") != std::string::npos);
    CHECK(violations[0].find("person") != std::string::npos);
  }
  SUBCASE("label out of range") {
    auto obs = make_obs({1, 0, 0, 0, 0}, {0.5, 0, 0, 0, 0});
    obs.label = 11.2;
    const auto violations = validate_scene(obs);
    REQUIRE(violations.size() == 1);
    CHECK(violations[0] == "label out of range");
  }
  SUBCASE("well-formed record") {
    auto obs = make_obs({3, 1, 0, 0, 1}, {0.8, 0.7, 0, 0, 0.65});
    obs.label = 4.2;
    CHECK(validate_scene(obs).empty());
  }
  SUBCASE("multiple violations are all reported") {
    auto obs = make_obs({0, -2, 0, 0, 0}, {0.9, 0.5, 0, 1.2, 0});
    obs.label = -3.0;
    CHECK(validate_scene(obs).size() == 4);
  }
}
