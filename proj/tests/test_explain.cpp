#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "mcxai/explain.hpp"
#include "mcxai/mcts.hpp"

using namespace mcxai;

namespace {

// Hand-built tree over 3 actions: root edges a0, a1, a2 with chosen stats.
struct Fixture {
  testing::FnClassifier g = testing::binary(3, [](std::span<const double> x) {
    return (x[0] == 0.0 && x[1] == 0.0) || x[2] == 0.0 ? 0.2 : 0.8;
  });
  ActionSpace space = build_action_space(3, MaskConfig{});
  GameSpec spec = make_game_spec(g, GameState::root({1, 1, 1}), 0);
  SearchTree tree{spec, space, MaskConfig{}, SearchConfig{}, "uniform"};

  NodeId child(NodeId parent, ActionIndex a) {
    GameState s = apply_mask(tree.node(parent).state, space[a], {});
    auto p = g.predict_one(s.values());
    return tree.add_child(parent, a, std::move(s), std::move(p));
  }
  void set(NodeId n, ActionIndex a, std::uint64_t visits, double total) {
    tree.node(n).edge(a).visits = visits;
    tree.node(n).edge(a).total_reward = total;
  }
  Fixture() { tree.add_root(g.predict_one(spec.root.values())); }
};

}  // namespace

TEST_CASE("root_importance ordering") {
  Fixture f;
  f.child(0, 0);
  f.child(0, 1);
  f.set(0, 0, 10, 3.0);
  f.set(0, 1, 10, 8.0);
  auto r = root_importance(f.tree);
  REQUIRE(r.size() == 3);
  CHECK(r[0].action == 1);
  CHECK(r[1].action == 0);
  CHECK(r[2].action == 2);
  CHECK_FALSE(r[2].explored);
  CHECK(r[2].win_rate == 0.0);

  f.set(0, 0, 10, 5.0);
  f.set(0, 1, 4, 2.0);
  r = root_importance(f.tree);
  CHECK(r[0].action == 0);
  CHECK(r[1].action == 1);
}

TEST_CASE("path_importance") {
  Fixture f;
  const NodeId n1 = f.child(0, 1);
  f.child(n1, 0);
  f.set(0, 1, 5, 2.0);
  f.set(n1, 0, 3, 1.5);
  CHECK(path_importance(f.tree, std::vector<ActionIndex>{1}) == doctest::Approx(0.4));
  CHECK(path_importance(f.tree, std::vector<ActionIndex>{1, 0}) == doctest::Approx(0.5));
  CHECK_THROWS_AS(path_importance(f.tree, std::vector<ActionIndex>{2}), PathNotFoundError);
  CHECK_THROWS_AS(path_importance(f.tree, std::vector<ActionIndex>{1, 2}), PathNotFoundError);
}

TEST_CASE("best_complete_path") {
  SUBCASE("largest win rate") {
    Fixture f;
    f.child(0, 2);  // terminal
    const NodeId n0 = f.child(0, 0);
    f.child(n0, 1);  // terminal
    f.set(0, 2, 10, 7.0);
    f.set(0, 0, 10, 9.0);
    f.set(n0, 1, 10, 9.0);
    auto best = best_complete_path(f.tree);
    CHECK(best.actions == std::vector<ActionIndex>{0, 1});
    CHECK(best.complete);
    CHECK(best.win_rate == doctest::Approx(0.9));
  }
  SUBCASE("ties prefer the shorter path") {
    Fixture f;
    f.child(0, 2);
    const NodeId n0 = f.child(0, 0);
    f.child(n0, 1);
    f.set(0, 2, 10, 7.0);
    f.set(0, 0, 10, 7.0);
    f.set(n0, 1, 10, 7.0);
    CHECK(best_complete_path(f.tree).actions == std::vector<ActionIndex>{2});
  }
  SUBCASE("no terminal") {
    Fixture f;
    f.child(0, 0);
    CHECK_THROWS_AS(best_complete_path(f.tree), NoCompletePathError);
  }
}

TEST_CASE("rank invariance under reward scaling") {
  Fixture f;
  f.child(0, 2);
  const NodeId n0 = f.child(0, 0);
  f.child(n0, 1);
  f.child(0, 1);
  f.set(0, 2, 10, 6.0);
  f.set(0, 0, 8, 6.0);
  f.set(0, 1, 3, 1.0);
  f.set(n0, 1, 8, 6.0);
  auto before = root_importance(f.tree);
  auto best = best_complete_path(f.tree);
  for (const auto& n : f.tree.nodes()) {
    for (const auto& e : n.edges) {
      if (e.visits) f.set(n.id, e.action, e.visits, e.total_reward * 0.37);
    }
  }
  auto after = root_importance(f.tree);
  for (std::size_t i = 0; i < before.size(); ++i) CHECK(before[i].action == after[i].action);
  CHECK(best_complete_path(f.tree).actions == best.actions);
}

TEST_CASE("JSON round trip") {
  auto g = testing::binary(5, [](std::span<const double> x) {
    return 1.0 / (1.0 + std::exp(-(x[0] + x[1] + x[2] + x[3] + x[4] - 2.5)));
  });
  ActionSpace space = build_action_space(5, MaskConfig{});
  MaskConfig mask;
  mask.feature_tau = std::vector<double>{0, 0.1, 0, 0, -0.2};
  GameSpec spec = make_game_spec(g, GameState::root({1, 1, 1, 1, 1}), 0);
  SearchConfig cfg;
  cfg.episodes = 200;
  cfg.seed = 3;
  SearchTree t = run_episodes(spec, g, space, mask, cfg, SurrogateConfig{});

  const std::string text = export_json(t);
  SearchTree back = import_json(text);
  CHECK(export_json(back) == text);
  REQUIRE(back.size() == t.size());
  for (NodeId i = 0; i < t.size(); ++i) {
    const auto& a = t.node(i);
    const auto& b = back.node(i);
    CHECK(a.state == b.state);
    CHECK(a.terminal == b.terminal);
    CHECK(a.probs == b.probs);
    CHECK(a.stops == b.stops);
    REQUIRE(a.edges.size() == b.edges.size());
    for (std::size_t k = 0; k < a.edges.size(); ++k) {
      CHECK(a.edges[k].visits == b.edges[k].visits);
      CHECK(a.edges[k].total_reward == b.edges[k].total_reward);
      CHECK(a.edges[k].child == b.edges[k].child);
    }
  }
  CHECK(back.config().seed == 3);
  CHECK(back.surrogate_name() == "occlusion");
  CHECK(*back.mask().feature_tau == *mask.feature_tau);

  CHECK_THROWS_AS(import_json(text.substr(0, text.size() / 3)), ParseError);
  CHECK_THROWS_AS(import_json("{\"version\": 2}"), ParseError);
}

TEST_CASE("DOT export") {
  SUBCASE("one-episode tree") {
    auto g = testing::binary(2, [](std::span<const double> x) { return x[0] + x[1] > 1.5 ? 0.9 : 0.1; });
    ActionSpace space = build_action_space(2, MaskConfig{});
    GameSpec spec = make_game_spec(g, GameState::root({1, 1}), 0);
    SearchConfig cfg;
    cfg.episodes = 1;
    const std::string dot = export_dot(run_episodes(spec, g, space, {}, cfg, {}));
    CHECK(dot.rfind("digraph mcts {", 0) == 0);
    CHECK(dot.find("n0 [label=\"root\"]") != std::string::npos);
    CHECK(dot.find("n1 [label=\"x1\", shape=doublecircle]") != std::string::npos);
    std::size_t arrows = 0;
    for (std::size_t p = dot.find("->"); p != std::string::npos; p = dot.find("->", p + 1)) ++arrows;
    CHECK(arrows == 1);
  }
  SUBCASE("win rate label has four decimals") {
    Fixture f;
    f.child(0, 0);
    f.set(0, 0, 3, 1.0);
    CHECK(export_dot(f.tree).find("label=\"a0 v=3 \xce\xbc=0.3333\"") != std::string::npos);
  }
}
