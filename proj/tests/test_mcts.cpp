#include <doctest.h>

#include <cmath>
#include <random>
#include <set>

#include "helpers.hpp"
#include "mcxai/explain.hpp"
#include "mcxai/mcts.hpp"
#include "mcxai/reference_models.hpp"

using namespace mcxai;

namespace {

TreeNode node_with(std::vector<EdgeStats> edges) {
  TreeNode n;
  n.edges = std::move(edges);
  return n;
}

EdgeStats visited(ActionIndex a, double mu, std::uint64_t n) {
  return EdgeStats{a, n, mu * static_cast<double>(n), std::nullopt};
}

// Sum-of-features rule: class 0 while the sum stays above `threshold`.
testing::FnClassifier sum_rule(std::size_t n, double threshold) {
  return testing::binary(n, [threshold](std::span<const double> x) {
    double s = 0.0;
    for (double v : x) s += v;
    return 1.0 / (1.0 + std::exp(-(s - threshold)));
  });
}

void check_invariants(const SearchTree& t) {
  CHECK(t.root().visits() == t.episodes_completed());
  for (const auto& n : t.nodes()) {
    std::uint64_t sum = 0;
    for (const auto& e : n.edges) {
      sum += e.visits;
      if (e.visits > 0) {
        CHECK(e.win_rate() >= 0.0);
        CHECK(e.win_rate() <= 1.0);
      }
      if (e.child) CHECK(t.node(*e.child).parent == n.id);
    }
    CHECK(n.visits() == sum);
    if (n.terminal) CHECK(n.edges.empty());
    if (n.parent) {
      const auto& in = t.node(*n.parent).edge(n.state.masked_actions().back());
      CHECK(in.visits == n.visits() + n.stops);
    }
  }
}

}  // namespace

TEST_CASE("uct_select") {
  const double sqrt2 = std::sqrt(2.0);
  SUBCASE("unvisited edges come first") {
    CHECK(uct_select(node_with({visited(0, 0.5, 2), EdgeStats{1}}), sqrt2) == 1);
  }
  SUBCASE("worked example") {
    auto n = node_with({visited(0, 0.5, 2), visited(1, 0.9, 6)});
    const double a = 0.5 + sqrt2 * std::sqrt(std::log(8.0) / 2.0);
    const double b = 0.9 + sqrt2 * std::sqrt(std::log(8.0) / 6.0);
    CHECK(std::abs(uct_score(n.edges[0], 8, sqrt2) - a) < 1e-12);
    CHECK(std::abs(uct_score(n.edges[1], 8, sqrt2) - b) < 1e-12);
    CHECK(a == doctest::Approx(1.9420).epsilon(1e-4));
    CHECK(b == doctest::Approx(1.7326).epsilon(1e-4));
    CHECK(uct_select(n, sqrt2) == 0);
  }
  SUBCASE("lambda 0 exploits") {
    CHECK(uct_select(node_with({visited(0, 0.5, 2), visited(1, 0.9, 6)}), 0.0) == 1);
  }
  SUBCASE("ties go to the lowest index") {
    CHECK(uct_select(node_with({visited(2, 0.5, 3), visited(5, 0.5, 3)}), sqrt2) == 2);
    CHECK(uct_select(node_with({EdgeStats{3}, EdgeStats{4}}), sqrt2) == 3);
  }
  SUBCASE("randomized edge sets") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> U;
    for (int trial = 0; trial < 500; ++trial) {
      std::vector<EdgeStats> edges;
      const int k = 1 + static_cast<int>(rng() % 8);
      bool any_unvisited = false;
      for (int a = 0; a < k; ++a) {
        if (rng() % 4 == 0) {
          edges.push_back(EdgeStats{a});
          any_unvisited = true;
        } else {
          edges.push_back(visited(a, U(rng), 1 + rng() % 50));
        }
      }
      auto n = node_with(edges);
      const ActionIndex pick = uct_select(n, sqrt2);
      if (any_unvisited) {
        int first = 0;
        while (edges[first].visits != 0) ++first;
        CHECK(pick == first);
      } else {
        const ActionIndex greedy = uct_select(n, 0.0);
        for (const auto& e : edges) CHECK(e.win_rate() <= edges[greedy].win_rate());
      }
    }
  }
}

TEST_CASE("backpropagate") {
  auto g = sum_rule(4, 1.5);
  ActionSpace space = build_action_space(4, MaskConfig{});
  GameSpec spec = make_game_spec(g, GameState::root({1, 1, 1, 1}), 0);
  SearchTree tree(spec, space, MaskConfig{}, SearchConfig{}, "uniform");
  tree.add_root(g.predict_one(spec.root.values()));
  GameState s1 = apply_mask(spec.root, space[1], {});
  const NodeId n1 = tree.add_child(0, 1, s1, g.predict_one(s1.values()));
  GameState s2 = apply_mask(s1, space[3], {});
  const NodeId n2 = tree.add_child(n1, 3, s2, g.predict_one(s2.values()));
  GameState s3 = apply_mask(s2, space[0], {});
  tree.add_child(n2, 0, s3, g.predict_one(s3.values()));

  std::vector<std::pair<NodeId, ActionIndex>> path{{0, 1}, {n1, 3}, {n2, 0}};
  backpropagate(tree, path, 0.6);
  for (const auto& [id, a] : path) {
    CHECK(tree.node(id).edge(a).visits == 1);
    CHECK(tree.node(id).edge(a).total_reward == doctest::Approx(0.6));
  }
  CHECK(tree.node(0).edge(0).visits == 0);

  backpropagate(tree, std::span(path).first(1), 0.0);
  CHECK(tree.node(0).edge(1).visits == 2);
  CHECK(tree.node(0).edge(1).total_reward == doctest::Approx(0.6));

  SearchTree t2(spec, space, MaskConfig{}, SearchConfig{}, "uniform");
  t2.add_root(g.predict_one(spec.root.values()));
  std::vector<std::pair<NodeId, ActionIndex>> one{{0, 2}};
  backpropagate(t2, one, 0.4);
  backpropagate(t2, one, 0.8);
  CHECK(t2.node(0).edge(2).win_rate() == doctest::Approx(0.6));
}

TEST_CASE("expand picks the argmax of Q") {
  // Masking feature 2 lowers g[0] the most, so occlusion prefers it.
  auto g = testing::binary(3, [](std::span<const double> x) {
    return 0.5 + 0.1 * x[0] + 0.05 * x[1] + 0.3 * x[2];
  });
  ActionSpace space = build_action_space(3, MaskConfig{});
  GameSpec spec = make_game_spec(g, GameState::root({1, 1, 1}), 0);

  SearchTree tree(spec, space, MaskConfig{}, SearchConfig{}, "occlusion");
  tree.add_root(g.predict_one(spec.root.values()));
  OcclusionSurrogate occ;
  const NodeId c = expand(tree, 0, g, occ);
  CHECK(tree.node(c).state.masked_actions() == std::vector<ActionIndex>{2});
  CHECK(occ.classifier_calls() == 3);

  SearchTree uni(spec, space, MaskConfig{}, SearchConfig{}, "uniform");
  uni.add_root(g.predict_one(spec.root.values()));
  UniformSurrogate u;
  CHECK(uni.node(expand(uni, 0, g, u)).state.masked_actions() == std::vector<ActionIndex>{0});
  CHECK(uni.node(expand(uni, 0, g, u)).state.masked_actions() == std::vector<ActionIndex>{1});
  expand(uni, 0, g, u);
  CHECK_THROWS_AS(expand(uni, 0, g, u), ConfigError);
}

TEST_CASE("rollout") {
  ActionSpace space = build_action_space(1, MaskConfig{});
  auto flip = testing::binary(1, [](std::span<const double> x) { return x[0] != 0.0 ? 0.9 : 0.2; });
  GameSpec spec = make_game_spec(flip, GameState::root({1}), 0);
  std::mt19937_64 rng(1);

  SUBCASE("single mask that flips at depth 1") {
    auto r = rollout(spec.root, spec, flip, space, {}, RewardConfig{0.0, 10}, rng);
    CHECK(r.reached_terminal);
    CHECK(r.actions == std::vector<ActionIndex>{0});
    CHECK(std::abs(r.reward.r - 0.9) < 1e-12);
  }
  SUBCASE("start already terminal") {
    GameState masked = apply_mask(spec.root, space[0], {});
    auto r = rollout(masked, spec, flip, space, {}, RewardConfig{0.0, 10}, rng);
    CHECK(r.actions.empty());
    CHECK(r.reached_terminal);
  }
  SUBCASE("exhausted without termination scores zero") {
    auto never = testing::binary(1, [](std::span<const double>) { return 0.9; });
    GameSpec s = make_game_spec(never, GameState::root({1}), 0);
    auto r = rollout(s.root, s, never, space, {}, RewardConfig{0.5, 10}, rng);
    CHECK_FALSE(r.reached_terminal);
    CHECK(r.reward.r == 0.0);
  }
  SUBCASE("same seed, same rollout") {
    auto g = sum_rule(8, 2.5);
    ActionSpace s8 = build_action_space(8, MaskConfig{});
    GameSpec s = make_game_spec(g, GameState::root(FeatureVector(8, 1.0)), 0);
    std::mt19937_64 a(9);
    std::mt19937_64 b(9);
    auto ra = rollout(s.root, s, g, s8, {}, RewardConfig{0.5, 10}, a);
    auto rb = rollout(s.root, s, g, s8, {}, RewardConfig{0.5, 10}, b);
    CHECK(ra.actions == rb.actions);
    CHECK(ra.reward.r == rb.reward.r);
    CHECK(std::set<ActionIndex>(ra.actions.begin(), ra.actions.end()).size() == ra.actions.size());
  }
  SUBCASE("depth cap") {
    auto g = sum_rule(8, -100.0);
    ActionSpace s8 = build_action_space(8, MaskConfig{});
    GameSpec s = make_game_spec(g, GameState::root(FeatureVector(8, 1.0)), 0);
    auto r = rollout(s.root, s, g, s8, {}, RewardConfig{0.5, 3}, rng);
    CHECK(r.actions.size() == 3);
    CHECK(r.reward.r == 0.0);
  }
}

TEST_CASE("run_episodes") {
  SUBCASE("one episode expands exactly one child") {
    auto g = sum_rule(4, 1.5);
    ActionSpace space = build_action_space(4, MaskConfig{});
    GameSpec spec = make_game_spec(g, GameState::root({1, 1, 1, 1}), 0);
    SearchConfig cfg;
    cfg.episodes = 1;
    SearchTree t = run_episodes(spec, g, space, {}, cfg, SurrogateConfig{});
    CHECK(t.size() == 2);
    CHECK(t.root().visits() == 1);
  }
  SUBCASE("covers every complete path of a small game") {
    // Class 0 unless two of the three features are masked.
    auto g = sum_rule(3, 1.5);
    ActionSpace space = build_action_space(3, MaskConfig{});
    GameSpec spec = make_game_spec(g, GameState::root({1, 1, 1}), 0);
    SearchConfig cfg;
    cfg.episodes = 500;
    cfg.reward.max_depth = 3;
    SearchTree t = run_episodes(spec, g, space, {}, cfg, SurrogateConfig{SurrogateKind::Uniform});
    check_invariants(t);
    std::size_t found = 0;
    for (ActionIndex a = 0; a < 3; ++a) {
      for (ActionIndex b = 0; b < 3; ++b) {
        if (a == b) continue;
        auto id = t.find(std::vector<ActionIndex>{a, b});
        REQUIRE(id);
        CHECK(t.node(*id).terminal);
        ++found;
      }
    }
    CHECK(found == 6);
    CHECK(complete_paths(t).size() == 6);
  }
  SUBCASE("fixed seed gives identical trees") {
    auto g = sum_rule(6, 2.5);
    ActionSpace space = build_action_space(6, MaskConfig{});
    GameSpec spec = make_game_spec(g, GameState::root(FeatureVector(6, 1.0)), 0);
    SearchConfig cfg;
    cfg.episodes = 300;
    cfg.seed = 42;
    for (auto kind : {SurrogateKind::Uniform, SurrogateKind::Occlusion, SurrogateKind::Linear}) {
      auto a = run_episodes(spec, g, space, {}, cfg, SurrogateConfig{kind});
      auto b = run_episodes(spec, g, space, {}, cfg, SurrogateConfig{kind});
      CHECK(export_json(a) == export_json(b));
      check_invariants(a);
    }
  }
  SUBCASE("terminal root gives a single-node tree") {
    auto g = sum_rule(2, 10.0);
    ActionSpace space = build_action_space(2, MaskConfig{});
    GameSpec spec = make_game_spec(g, GameState::root({1, 1}), 0);
    spec.kind = GameKind::Classification;  // force: root is actually class 1
    auto t = run_episodes(spec, g, space, {}, SearchConfig{}, SurrogateConfig{});
    CHECK(t.size() == 1);
    CHECK(t.root().terminal);
    CHECK(t.episodes_completed() == 0);
  }
  SUBCASE("config validation") {
    auto g = sum_rule(2, 0.5);
    ActionSpace space = build_action_space(2, MaskConfig{});
    GameSpec spec = make_game_spec(g, GameState::root({1, 1}), 0);
    SearchConfig cfg;
    cfg.episodes = 0;
    CHECK_THROWS_AS(run_episodes(spec, g, space, {}, cfg, {}), ConfigError);
    cfg.episodes = 1;
    cfg.lambda = -1;
    CHECK_THROWS_AS(run_episodes(spec, g, space, {}, cfg, {}), ConfigError);
  }
}

TEST_CASE("bookkeeping holds on a trained model") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> N;
  Dataset d;
  d.n_features = 8;
  d.n_classes = 3;
  for (int i = 0; i < 90; ++i) {
    FeatureVector x(8);
    for (double& v : x) v = N(rng);
    d.labels.push_back(x[0] + x[1] > 0.5 ? 0 : (x[2] > 0 ? 1 : 2));
    d.instances.push_back(x);
  }
  TrainParams hp;
  hp.epochs = 300;
  auto m = train_mlp(d, hp);
  ActionSpace space = build_action_space(8, MaskConfig{});
  for (int i = 0; i < 5; ++i) {
    GameSpec spec = make_game_spec(m, GameState::root(d.instances[i]), d.labels[i]);
    SearchConfig cfg;
    cfg.episodes = 400;
    cfg.reward.max_depth = 5;
    cfg.seed = static_cast<std::uint64_t>(i);
    CountingClassifier counted(m);
    auto t = run_episodes(spec, counted, space, {}, cfg, SurrogateConfig{SurrogateKind::Uniform});
    if (t.root().terminal) continue;
    check_invariants(t);
    CHECK(counted.calls() <= cfg.episodes * (2 * cfg.reward.max_depth + 1));
    CHECK(t.stats().classifier_calls == counted.calls());
  }
}

TEST_CASE("classifier failure aborts with the partial tree") {
  int budget = 40;
  auto g = testing::binary(4, [&budget](std::span<const double> x) {
    if (--budget < 0) throw ModelError("black box went away");
    return x[0] >= 0.0 ? 0.9 : 0.1;
  });
  ActionSpace space = build_action_space(4, MaskConfig{});
  GameSpec spec = make_game_spec(g, GameState::root({1, 1, 1, 1}), 0);
  SearchConfig cfg;
  cfg.episodes = 1000;
  try {
    run_episodes(spec, g, space, {}, cfg, SurrogateConfig{SurrogateKind::Uniform});
    FAIL("expected SearchAbortedError");
  } catch (const SearchAbortedError& e) {
    REQUIRE(e.partial_tree());
    CHECK(e.partial_tree()->episodes_completed() < 1000);
  }
}
