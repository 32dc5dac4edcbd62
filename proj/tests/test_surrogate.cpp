#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "mcxai/mcts.hpp"
#include "mcxai/surrogate.hpp"

using namespace mcxai;

TEST_CASE("uniform surrogate is constant") {
  auto g = testing::binary(2, [](std::span<const double> x) { return x[0] > 0 ? 0.9 : 0.1; });
  ActionSpace space = build_action_space(2, MaskConfig{});
  GameSpec spec = make_game_spec(g, GameState::root({1, 1}), 0);
  MaskConfig mask;
  SurrogateContext ctx{g, spec, space, mask};
  UniformSurrogate u;
  CHECK(u.q_predict(ctx, spec.root, g.predict_one(spec.root.values()), 0) == 0.5);
  CHECK(u.q_predict(ctx, spec.root, g.predict_one(spec.root.values()), 1) == 0.5);
  std::vector<QSample> samples{{{0, 0}, 0, 1.0}};
  u.q_update(samples);
  CHECK(u.q_predict(ctx, spec.root, g.predict_one(spec.root.values()), 0) == 0.5);
}

TEST_CASE("occlusion surrogate") {
  // g[0] = 0.9 with feature 0 present, 0.4 once it is masked.
  auto g = testing::binary(2, [](std::span<const double> x) { return x[0] != 0.0 ? 0.9 : 0.4; });
  ActionSpace space = build_action_space(2, MaskConfig{});
  MaskConfig mask;

  SUBCASE("classification sign") {
    GameSpec spec = make_game_spec(g, GameState::root({1, 1}), 0);
    SurrogateContext ctx{g, spec, space, mask};
    OcclusionSurrogate occ;
    const auto probs = g.predict_one(spec.root.values());
    CHECK(occ.q_predict(ctx, spec.root, probs, 0) == doctest::Approx(0.75));
    CHECK(occ.q_predict(ctx, spec.root, probs, 1) == doctest::Approx(0.5));
    CHECK(occ.classifier_calls() == 2);
  }
  SUBCASE("misclassification sign is negated") {
    GameSpec spec = make_game_spec(g, GameState::root({1, 1}), 1);
    REQUIRE(spec.kind == GameKind::Misclassification);
    SurrogateContext ctx{g, spec, space, mask};
    OcclusionSurrogate occ;
    const auto probs = g.predict_one(spec.root.values());
    // Target class 1 goes 0.1 -> 0.6: v = +0.5.
    CHECK(occ.q_predict(ctx, spec.root, probs, 0) == doctest::Approx(0.75));
  }
  SUBCASE("one classifier call per candidate") {
    GameSpec spec = make_game_spec(g, GameState::root({1, 1}), 0);
    SurrogateContext ctx{g, spec, space, mask};
    OcclusionSurrogate occ;
    std::vector<ActionIndex> cands{0, 1};
    auto q = occ.q_values(ctx, spec.root, g.predict_one(spec.root.values()), cands);
    CHECK(q.size() == 2);
    CHECK(occ.classifier_calls() == 2);
    for (double v : q) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }
  }
}

TEST_CASE("linear surrogate") {
  auto g = testing::binary(3, [](std::span<const double>) { return 0.9; });
  ActionSpace space = build_action_space(3, MaskConfig{});
  GameSpec spec = make_game_spec(g, GameState::root({1, 1, 1}), 0);
  MaskConfig mask;
  SurrogateContext ctx{g, spec, space, mask};

  SUBCASE("zero weights predict 0.5") {
    LinearSurrogate lin(3, 0.5);
    CHECK(lin.q_predict(ctx, spec.root, g.predict_one(spec.root.values()), 1) == 0.5);
  }
  SUBCASE("loss is non-increasing on a fixed sample set") {
    LinearSurrogate lin(3, 0.5);
    std::vector<QSample> samples{
        {{0, 0, 0}, 0, 0.9}, {{0, 0, 0}, 1, 0.2}, {{1, 0, 0}, 2, 0.6}, {{1, 1, 0}, 2, 0.1}};
    double prev = lin.loss(samples);
    for (int i = 0; i < 100; ++i) {
      lin.q_update(samples);
      const double cur = lin.loss(samples);
      CHECK(cur <= prev + 1e-15);
      prev = cur;
    }
  }
  SUBCASE("single repeated sample converges") {
    LinearSurrogate lin(3, 0.5);
    std::vector<QSample> one{{{0, 1, 0}, 2, 1.0}};
    for (int i = 0; i < 200; ++i) lin.q_update(one);
    CHECK(std::abs(lin.predict_sample(one[0]) - 1.0) < 0.05);
    GameState s = apply_mask(spec.root, space[1], mask);
    CHECK(std::abs(lin.q_predict(ctx, s, g.predict_one(s.values()), 2) - 1.0) < 0.05);
  }
  SUBCASE("step outside (0, 2)") {
    CHECK_THROWS_AS(LinearSurrogate(3, 0.0), ConfigError);
    CHECK_THROWS_AS(LinearSurrogate(3, 2.0), ConfigError);
  }
}

TEST_CASE("surrogate names") {
  CHECK(parse_surrogate_kind("occlusion") == SurrogateKind::Occlusion);
  CHECK(surrogate_kind_name(SurrogateKind::Linear) == "linear");
  CHECK_THROWS_AS(parse_surrogate_kind("alphago"), ConfigError);
  CHECK(masked_indicator(GameState::root({1, 2}), 2) == std::vector<double>{0, 0});
}
