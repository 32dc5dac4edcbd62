#include <doctest.h>

#include <algorithm>
#include <random>

#include "helpers.hpp"
#include "mcxai/core.hpp"
#include "mcxai/dataset.hpp"
#include "mcxai/error.hpp"

using namespace mcxai;

TEST_CASE("apply_mask replaces the masked feature with tau") {
  ActionSpace space = build_action_space(3, MaskConfig{});
  MaskConfig cfg;
  cfg.tau = 10.0;
  GameState s = apply_mask(GameState::root({1, 2, 3}), space[1], cfg);
  CHECK(s.values() == FeatureVector{1, 10, 3});
  CHECK(s.depth() == 1);
  CHECK(s.masked_actions() == std::vector<ActionIndex>{1});
}

TEST_CASE("masking a feature that already equals tau still advances depth") {
  ActionSpace space = build_action_space(3, MaskConfig{});
  GameState s = apply_mask(GameState::root({5, 0, 5}), space[1], MaskConfig{});
  CHECK(s.values() == FeatureVector{5, 0, 5});
  CHECK(s.depth() == 1);
}

TEST_CASE("grid grouping masks whole patches") {
  MaskConfig cfg;
  cfg.grouping = Grid{2, 2, 1, 2};
  ActionSpace space = build_action_space(4, cfg);
  REQUIRE(space.size() == 2);
  GameState s = apply_mask(GameState::root({1, 2, 3, 4}), space[0], cfg);
  CHECK(s.values() == FeatureVector{0, 0, 3, 4});
}

TEST_CASE("re-masking an action is rejected") {
  ActionSpace space = build_action_space(2, MaskConfig{});
  GameState s = apply_mask(GameState::root({1, 2}), space[0], MaskConfig{});
  CHECK_THROWS_AS(apply_mask(s, space[0], MaskConfig{}), DuplicateActionError);
}

TEST_CASE("available_actions excludes applied actions") {
  ActionSpace space = build_action_space(4, MaskConfig{});
  GameState root = GameState::root({1, 1, 1, 1});
  CHECK(available_action_indices(root, space).size() == 4);
  GameState s = replay(root, std::vector<ActionIndex>{2, 0}, space, MaskConfig{});
  CHECK(available_action_indices(s, space) == std::vector<ActionIndex>{1, 3});
  GameState all = replay(s, std::vector<ActionIndex>{1, 3}, space, MaskConfig{});
  CHECK(available_actions(all, space).empty());
}

TEST_CASE("build_action_space") {
  SUBCASE("per-feature") {
    ActionSpace s = build_action_space(3, MaskConfig{});
    REQUIRE(s.size() == 3);
    for (int i = 0; i < 3; ++i) {
      CHECK(s[i].feature_indices == std::vector<std::size_t>{static_cast<std::size_t>(i)});
    }
  }
  SUBCASE("4x4 grid of 2x2 patches") {
    MaskConfig cfg;
    cfg.grouping = Grid{4, 4, 2, 2};
    ActionSpace s = build_action_space(16, cfg);
    REQUIRE(s.size() == 4);
    CHECK(s[0].feature_indices == std::vector<std::size_t>{0, 1, 4, 5});
    CHECK(s[3].feature_indices == std::vector<std::size_t>{10, 11, 14, 15});
  }
  SUBCASE("patch that does not divide the grid") {
    MaskConfig cfg;
    cfg.grouping = Grid{4, 4, 3, 3};
    CHECK_THROWS_AS(build_action_space(16, cfg), DimensionError);
  }
  SUBCASE("grid that does not match n") {
    MaskConfig cfg;
    cfg.grouping = Grid{4, 4, 2, 2};
    CHECK_THROWS_AS(build_action_space(15, cfg), DimensionError);
  }
  SUBCASE("n = 0") { CHECK_THROWS(build_action_space(0, MaskConfig{})); }
}

TEST_CASE("ActionSpace rejects non-partitions") {
  CHECK_THROWS(ActionSpace(3, {Action{0, {0, 1}}, Action{1, {1, 2}}}));
  CHECK_THROWS(ActionSpace(3, {Action{0, {0}}, Action{1, {1}}}));
  CHECK_THROWS(ActionSpace(3, {Action{0, {0, 1, 2}}, Action{1, {}}}));
  CHECK_THROWS(ActionSpace(3, {Action{0, {0, 1, 5}}}));
}

TEST_CASE("mask values are independent of the order masks are applied") {
  std::mt19937_64 rng(3);
  MaskConfig cfg;
  cfg.tau = -0.5;
  ActionSpace space = build_action_space(8, cfg);
  std::normal_distribution<double> N;
  for (int trial = 0; trial < 50; ++trial) {
    FeatureVector x(8);
    for (double& v : x) v = N(rng);
    std::vector<ActionIndex> order{0, 1, 2, 3, 4, 5, 6, 7};
    std::shuffle(order.begin(), order.end(), rng);
    order.resize(1 + rng() % 8);
    auto shuffled = order;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    GameState a = replay(GameState::root(x), order, space, cfg);
    GameState b = replay(GameState::root(x), shuffled, space, cfg);
    CHECK(a.values() == b.values());
    CHECK(a.depth() == order.size());
    // Locality: only masked features moved.
    for (std::size_t j = 0; j < 8; ++j) {
      const bool masked = std::count(order.begin(), order.end(), static_cast<ActionIndex>(j)) > 0;
      CHECK(a.values()[j] == (masked ? cfg.tau : x[j]));
    }
  }
}

TEST_CASE("per-feature tau") {
  MaskConfig cfg;
  cfg.feature_tau = std::vector<double>{7, 8, 9};
  ActionSpace space = build_action_space(3, cfg);
  GameState s = replay(GameState::root({1, 2, 3}), std::vector<ActionIndex>{0, 2}, space, cfg);
  CHECK(s.values() == FeatureVector{7, 2, 9});
}

TEST_CASE("derive_seed is deterministic and name-sensitive") {
  CHECK(derive_seed(1, "search") == derive_seed(1, "search"));
  CHECK(derive_seed(1, "search") != derive_seed(2, "search"));
  CHECK(derive_seed(1, "search") != derive_seed(1, "bench"));
}

TEST_CASE("parse_dataset") {
  SUBCASE("basic") {
    Dataset d = parse_dataset("a,b,label,c,d\n1,2,0,3,4\n5,6,1,7,8\n-1e-3,2.5E2,0,0,0\n");
    CHECK(d.n_features == 4);
    CHECK(d.size() == 3);
    CHECK(d.n_classes == 2);
    CHECK(d.instances[1] == FeatureVector{5, 6, 7, 8});
    CHECK(d.instances[2][1] == 250.0);
    CHECK(d.feature_names == std::vector<std::string>{"a", "b", "c", "d"});
  }
  SUBCASE("CRLF line endings") {
    Dataset d = parse_dataset("x,label\r\n1,0\r\n2,1\r\n");
    CHECK(d.size() == 2);
    CHECK(d.instances[1][0] == 2.0);
  }
  SUBCASE("sparse labels") {
    Dataset d = parse_dataset("x,label\n1,0\n2,2\n");
    CHECK(d.n_classes == 3);
  }
  SUBCASE("text in a feature column names the cell") {
    try {
      parse_dataset("x,y,label\n1,2,0\n3,abc,1\n");
      FAIL("expected a parse error");
    } catch (const ParseError& e) {
      const std::string msg = e.what();
      CHECK(msg.find("row 3") != std::string::npos);
      CHECK(msg.find("y") != std::string::npos);
    }
  }
  SUBCASE("unknown label column") { CHECK_THROWS_AS(parse_dataset("x,y\n1,2\n"), ParseError); }
  SUBCASE("negative label") { CHECK_THROWS_AS(parse_dataset("x,label\n1,-1\n"), ParseError); }
  SUBCASE("ragged row") { CHECK_THROWS_AS(parse_dataset("x,y,label\n1,0\n"), ParseError); }
  SUBCASE("non-finite value") { CHECK_THROWS_AS(parse_dataset("x,label\ninf,0\n"), ParseError); }
}

TEST_CASE("dataset round trip is bit-exact") {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> N(0, 1e3);
  Dataset d;
  d.n_features = 5;
  d.n_classes = 3;
  for (int i = 0; i < 20; ++i) {
    FeatureVector x(5);
    for (double& v : x) v = N(rng);
    d.instances.push_back(x);
    d.labels.push_back(i % 3);
  }
  auto path = testing::temp_path("d.csv");
  save_dataset(d, path);
  Dataset back = load_dataset(path);
  CHECK(back.instances == d.instances);
  CHECK(back.labels == d.labels);
  CHECK(back.n_classes == 3);
}

TEST_CASE("load_dataset on a missing file") {
  CHECK_THROWS_AS(load_dataset("/nonexistent/d.csv"), ParseError);
}

TEST_CASE("train_test_split is deterministic and disjoint") {
  Dataset d;
  d.n_features = 1;
  d.n_classes = 2;
  for (int i = 0; i < 10; ++i) {
    d.instances.push_back({static_cast<double>(i)});
    d.labels.push_back(i % 2);
  }
  auto [a, b] = train_test_split(d, 0.3, 5);
  auto [c, e] = train_test_split(d, 0.3, 5);
  CHECK(a.instances == c.instances);
  CHECK(b.size() == 3);
  CHECK(a.size() == 7);
  std::vector<double> seen;
  for (auto& x : a.instances) seen.push_back(x[0]);
  for (auto& x : b.instances) seen.push_back(x[0]);
  std::sort(seen.begin(), seen.end());
  CHECK(std::adjacent_find(seen.begin(), seen.end()) == seen.end());
  CHECK(column_means(d) == std::vector<double>{4.5});
}
