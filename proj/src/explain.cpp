#include "mcxai/explain.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>

#include "mcxai/error.hpp"

namespace mcxai {
namespace {

using ojson = nlohmann::ordered_json;

constexpr int kTreeFormatVersion = 1;

ojson grouping_to_json(const Grouping& g) {
  if (std::holds_alternative<PerFeature>(g)) return {{"kind", "per-feature"}};
  const Grid& grid = std::get<Grid>(g);
  return {{"kind", "grid"},
          {"rows", grid.rows},
          {"cols", grid.cols},
          {"patch_h", grid.patch_h},
          {"patch_w", grid.patch_w}};
}

Grouping grouping_from_json(const ojson& j) {
  if (j.at("kind").get<std::string>() == "per-feature") return PerFeature{};
  return Grid{j.at("rows").get<std::size_t>(), j.at("cols").get<std::size_t>(),
              j.at("patch_h").get<std::size_t>(), j.at("patch_w").get<std::size_t>()};
}

}  // namespace

std::vector<FeatureImportance> root_importance(const SearchTree& tree) {
  std::vector<FeatureImportance> visited;
  std::vector<FeatureImportance> unvisited;
  for (const auto& e : tree.root().edges) {
    FeatureImportance fi{e.action, tree.space()[e.action].feature_indices, e.win_rate(), e.visits,
                         e.visits > 0};
    (e.visits > 0 ? visited : unvisited).push_back(std::move(fi));
  }
  std::stable_sort(visited.begin(), visited.end(),
                   [](const FeatureImportance& a, const FeatureImportance& b) {
                     if (a.win_rate != b.win_rate) return a.win_rate > b.win_rate;
                     return a.action < b.action;
                   });
  visited.insert(visited.end(), unvisited.begin(), unvisited.end());
  return visited;
}

double path_importance(const SearchTree& tree, std::span<const ActionIndex> path) {
  if (path.empty()) throw PathNotFoundError("empty path");
  NodeId cur = 0;
  const EdgeStats* last = nullptr;
  for (ActionIndex a : path) {
    const auto& edges = tree.node(cur).edges;
    auto it = std::find_if(edges.begin(), edges.end(),
                           [a](const EdgeStats& e) { return e.action == a; });
    if (it == edges.end() || !it->child || it->visits == 0) {
      throw PathNotFoundError("path step a" + std::to_string(a) + " not in the tree");
    }
    last = &*it;
    cur = *it->child;
  }
  return last->win_rate();
}

std::vector<ExplanationPath> complete_paths(const SearchTree& tree) {
  std::vector<ExplanationPath> out;
  for (const auto& n : tree.nodes()) {
    if (!n.terminal || !n.parent) continue;
    const auto& inbound = tree.node(*n.parent).edge(n.state.masked_actions().back());
    out.push_back(ExplanationPath{tree.path_to(n.id), inbound.win_rate(), true, n.id});
  }
  return out;
}

ExplanationPath best_complete_path(const SearchTree& tree) {
  auto paths = complete_paths(tree);
  if (paths.empty()) throw NoCompletePathError("the search tree contains no complete path");
  return *std::min_element(paths.begin(), paths.end(),
                           [](const ExplanationPath& a, const ExplanationPath& b) {
                             if (a.win_rate != b.win_rate) return a.win_rate > b.win_rate;
                             if (a.actions.size() != b.actions.size()) {
                               return a.actions.size() < b.actions.size();
                             }
                             return a.actions < b.actions;
                           });
}

std::string export_json(const SearchTree& tree) {
  const GameSpec& spec = tree.spec();
  const SearchConfig& cfg = tree.config();

  ojson actions = ojson::array();
  for (const auto& a : tree.space().actions()) actions.push_back(a.feature_indices);

  ojson game;
  game["kind"] = std::string(game_kind_name(spec.kind));
  game["target"] = spec.target;
  game["predicted"] = spec.predicted;
  game["root_prob"] = spec.root_prob;
  // Values before any masking; node 0 carries the masks a chained game starts from.
  game["root_instance"] = spec.instance;
  if (tree.mask().feature_tau) {
    game["tau"] = *tree.mask().feature_tau;
  } else {
    game["tau"] = tree.mask().tau;
  }
  game["grouping"] = grouping_to_json(tree.mask().grouping);
  game["actions"] = actions;

  ojson config = {{"episodes", cfg.episodes},
                  {"lambda", cfg.lambda},
                  {"eta", cfg.reward.eta},
                  {"max_depth", cfg.reward.max_depth},
                  {"seed", cfg.seed},
                  {"surrogate", tree.surrogate_name()}};

  ojson nodes = ojson::array();
  ojson edges = ojson::array();
  for (const auto& n : tree.nodes()) {
    nodes.push_back({{"id", n.id},
                     {"masked_actions", n.state.masked_actions()},
                     {"terminal", n.terminal},
                     {"pred", n.probs}});
    for (const auto& e : n.edges) {
      if (!e.child) continue;
      edges.push_back({{"from", n.id},
                       {"action", e.action},
                       {"to", *e.child},
                       {"visits", e.visits},
                       {"total_reward", e.total_reward}});
    }
  }

  ojson doc;
  doc["version"] = kTreeFormatVersion;
  doc["game"] = std::move(game);
  doc["config"] = std::move(config);
  doc["episodes_completed"] = tree.episodes_completed();
  doc["nodes"] = std::move(nodes);
  doc["edges"] = std::move(edges);
  return doc.dump(1) + "\n";
}

SearchTree import_json(const std::string& text) {
  ojson doc;
  try {
    doc = ojson::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("tree file is not valid JSON: ") + e.what());
  }
  try {
    if (doc.at("version").get<int>() != kTreeFormatVersion) {
      throw ParseError("unsupported tree file version");
    }
    const auto& game = doc.at("game");
    const auto& cfgj = doc.at("config");

    std::vector<Action> actions;
    for (const auto& a : game.at("actions")) {
      actions.push_back(Action{static_cast<ActionIndex>(actions.size()),
                               a.get<std::vector<std::size_t>>()});
    }
    auto root_values = game.at("root_instance").get<FeatureVector>();
    ActionSpace space(root_values.size(), std::move(actions));

    MaskConfig mask;
    if (game.at("tau").is_array()) {
      mask.feature_tau = game.at("tau").get<std::vector<double>>();
    } else {
      mask.tau = game.at("tau").get<double>();
    }
    mask.grouping = grouping_from_json(game.at("grouping"));

    SearchConfig cfg;
    cfg.episodes = cfgj.at("episodes").get<std::size_t>();
    cfg.lambda = cfgj.at("lambda").get<double>();
    cfg.reward.eta = cfgj.at("eta").get<double>();
    cfg.reward.max_depth = cfgj.at("max_depth").get<std::size_t>();
    cfg.seed = cfgj.at("seed").get<std::uint64_t>();

    const auto& nodes = doc.at("nodes");
    if (nodes.empty()) throw ParseError("tree file has no nodes");
    const auto root_masks = nodes.at(0).at("masked_actions").get<std::vector<ActionIndex>>();

    GameSpec spec;
    spec.kind = parse_game_kind(game.at("kind").get<std::string>());
    spec.target = game.at("target").get<int>();
    spec.predicted = game.at("predicted").get<int>();
    spec.root_prob = game.at("root_prob").get<double>();
    spec.instance = root_values;
    spec.root = replay(GameState::root(std::move(root_values)), root_masks, space, mask);

    SearchTree tree(std::move(spec), std::move(space), std::move(mask), cfg,
                    cfgj.at("surrogate").get<std::string>());

    // Parent edge of every non-root node.
    std::map<NodeId, std::pair<NodeId, ActionIndex>> parent_of;
    for (const auto& e : doc.at("edges")) {
      parent_of[e.at("to").get<NodeId>()] = {e.at("from").get<NodeId>(),
                                             e.at("action").get<ActionIndex>()};
    }
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      const auto& nj = nodes[i];
      if (nj.at("id").get<NodeId>() != i) throw ParseError("node ids must be 0..N-1 in order");
      auto probs = nj.at("pred").get<ClassDistribution>();
      NodeId id;
      if (i == 0) {
        id = tree.add_root(std::move(probs));
      } else {
        auto it = parent_of.find(i);
        if (it == parent_of.end()) throw ParseError("node " + std::to_string(i) + " has no parent");
        const auto [parent, action] = it->second;
        if (parent >= i) throw ParseError("node " + std::to_string(i) + " precedes its parent");
        GameState state =
            apply_mask(tree.node(parent).state, tree.space()[action], tree.mask());
        id = tree.add_child(parent, action, std::move(state), std::move(probs));
      }
      if (tree.node(id).terminal != nj.at("terminal").get<bool>()) {
        throw ParseError("node " + std::to_string(i) + " terminal flag disagrees with its pred");
      }
      const auto masks = nj.at("masked_actions").get<std::vector<ActionIndex>>();
      if (masks != tree.node(id).state.masked_actions()) {
        throw ParseError("node " + std::to_string(i) + " masked actions disagree with its path");
      }
    }
    for (const auto& e : doc.at("edges")) {
      EdgeStats& edge = tree.node(e.at("from").get<NodeId>()).edge(e.at("action").get<ActionIndex>());
      edge.visits = e.at("visits").get<std::uint64_t>();
      edge.total_reward = e.at("total_reward").get<double>();
    }
    // Episodes that stopped at a node are whatever its inbound edge saw beyond
    // what it passed on.
    for (NodeId id = 1; id < tree.size(); ++id) {
      TreeNode& n = tree.node(id);
      const auto in = tree.node(*n.parent).edge(n.state.masked_actions().back()).visits;
      n.stops = in - n.visits();
    }
    tree.set_episodes_completed(doc.at("episodes_completed").get<std::size_t>());
    return tree;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed tree file: ") + e.what());
  }
}

std::string export_dot(const SearchTree& tree) {
  std::ostringstream out;
  out << "digraph mcts {\n";
  out << "  node [shape=circle];\n";
  for (const auto& n : tree.nodes()) {
    out << "  n" << n.id << " [label=\"" << (n.parent ? "x" + std::to_string(n.id) : "root")
        << "\"";
    if (n.terminal) out << ", shape=doublecircle";
    out << "];\n";
  }
  char mu[32];
  for (const auto& n : tree.nodes()) {
    for (const auto& e : n.edges) {
      if (!e.child) continue;
      std::snprintf(mu, sizeof mu, "%.4f", e.win_rate());
      out << "  n" << n.id << " -> n" << *e.child << " [label=\"a" << e.action
          << " v=" << e.visits << " \xce\xbc=" << mu << "\"];\n";
    }
  }
  out << "}\n";
  return out.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
  if (!out) throw Error("failed writing " + path.string());
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace mcxai
