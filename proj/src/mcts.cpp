#include "mcxai/mcts.hpp"

#include <algorithm>
#include <limits>
#include <string>

namespace mcxai {

std::uint64_t TreeNode::visits() const {
  std::uint64_t n = 0;
  for (const auto& e : edges) n += e.visits;
  return n;
}

bool TreeNode::has_unexpanded() const {
  return std::any_of(edges.begin(), edges.end(), [](const EdgeStats& e) { return !e.child; });
}

const EdgeStats& TreeNode::edge(ActionIndex a) const {
  auto it = std::lower_bound(edges.begin(), edges.end(), a,
                             [](const EdgeStats& e, ActionIndex x) { return e.action < x; });
  if (it == edges.end() || it->action != a) {
    throw PathNotFoundError("node " + std::to_string(id) + " has no edge for action " +
                            std::to_string(a));
  }
  return *it;
}

EdgeStats& TreeNode::edge(ActionIndex a) {
  return const_cast<EdgeStats&>(std::as_const(*this).edge(a));
}

void SearchConfig::validate() const {
  if (episodes < 1) throw ConfigError("episode count I must be at least 1");
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw ConfigError("lambda must be >= 0");
  reward.validate();
}

// ---------------------------------------------------------------------------
// SearchTree

SearchTree::SearchTree(GameSpec spec, ActionSpace space, MaskConfig mask, SearchConfig config,
                       std::string surrogate_name)
    : spec_(std::move(spec)),
      space_(std::move(space)),
      mask_(std::move(mask)),
      config_(config),
      surrogate_name_(std::move(surrogate_name)) {
  if (spec_.root.values().size() != space_.n_features()) {
    throw DimensionError("root instance does not match the action space width");
  }
}

NodeId SearchTree::push_node(GameState state, std::optional<NodeId> parent,
                             ClassDistribution probs) {
  TreeNode n;
  n.id = nodes_.size();
  n.parent = parent;
  n.terminal = is_terminal(spec_, probs);
  if (!n.terminal) {
    for (ActionIndex a : available_action_indices(state, space_)) {
      n.edges.push_back(EdgeStats{a, 0, 0.0, std::nullopt});
    }
  }
  n.state = std::move(state);
  n.probs = std::move(probs);
  nodes_.push_back(std::move(n));
  return nodes_.back().id;
}

NodeId SearchTree::add_root(ClassDistribution probs) {
  if (!nodes_.empty()) throw ConfigError("tree already has a root");
  return push_node(spec_.root, std::nullopt, std::move(probs));
}

NodeId SearchTree::add_child(NodeId parent, ActionIndex action, GameState state,
                             ClassDistribution probs) {
  EdgeStats& e = node(parent).edge(action);
  if (e.child) throw ConfigError("edge already expanded");
  const NodeId id = push_node(std::move(state), parent, std::move(probs));
  // push_node may reallocate; look the edge up again.
  node(parent).edge(action).child = id;
  return id;
}

std::vector<ActionIndex> SearchTree::path_to(NodeId id) const {
  const auto& full = node(id).state.masked_actions();
  return {full.begin() + static_cast<long>(spec_.root.depth()), full.end()};
}

std::optional<NodeId> SearchTree::find(std::span<const ActionIndex> actions) const {
  if (nodes_.empty()) return std::nullopt;
  NodeId cur = 0;
  for (ActionIndex a : actions) {
    const auto& edges = node(cur).edges;
    auto it = std::find_if(edges.begin(), edges.end(),
                           [a](const EdgeStats& e) { return e.action == a; });
    if (it == edges.end() || !it->child) return std::nullopt;
    cur = *it->child;
  }
  return cur;
}

// ---------------------------------------------------------------------------
// Phases

double uct_score(const EdgeStats& e, std::uint64_t parent_visits, double lambda) {
  if (e.visits == 0) return std::numeric_limits<double>::infinity();
  const double explore =
      std::sqrt(std::log(static_cast<double>(parent_visits)) / static_cast<double>(e.visits));
  return e.win_rate() + lambda * explore;
}

ActionIndex uct_select(const TreeNode& node, double lambda) {
  if (node.edges.empty()) throw ConfigError("cannot select from a node without edges");
  const std::uint64_t n = node.visits();
  const EdgeStats* best = &node.edges.front();
  double best_score = uct_score(*best, n, lambda);
  for (const auto& e : node.edges) {
    const double s = uct_score(e, n, lambda);
    if (s > best_score || (s == best_score && e.action < best->action)) {
      best = &e;
      best_score = s;
    }
  }
  return best->action;
}

NodeId expand(SearchTree& tree, NodeId id, const Classifier& g, const Surrogate& surrogate) {
  const TreeNode& node = tree.node(id);
  if (node.terminal) throw ConfigError("cannot expand a terminal node");
  std::vector<ActionIndex> candidates;
  for (const auto& e : node.edges) {
    if (!e.child) candidates.push_back(e.action);
  }
  if (candidates.empty()) throw ConfigError("node is fully expanded");

  const SurrogateContext ctx{g, tree.spec(), tree.space(), tree.mask()};
  const auto q = surrogate.q_values(ctx, node.state, node.probs, candidates);
  std::size_t best = 0;
  for (std::size_t i = 1; i < q.size(); ++i) {
    if (q[i] > q[best]) best = i;
  }
  const ActionIndex action = candidates[best];
  GameState child = apply_mask(node.state, tree.space()[action], tree.mask());
  ClassDistribution probs = g.predict_one(child.values());
  ++tree.stats().classifier_calls;
  return tree.add_child(id, action, std::move(child), std::move(probs));
}

RolloutResult rollout(const GameState& start, std::span<const double> start_probs,
                      const GameSpec& spec, const Classifier& g, const ActionSpace& space,
                      const MaskConfig& mask, const RewardConfig& cfg, std::mt19937_64& rng) {
  RolloutResult out;
  GameState s = start;
  ClassDistribution probs(start_probs.begin(), start_probs.end());
  while (true) {
    const std::size_t depth = game_depth(spec, s);
    if (is_terminal(spec, probs)) {
      out.reward = reward(spec, probs, depth, cfg);
      out.reached_terminal = true;
      return out;
    }
    auto avail = available_action_indices(s, space);
    if (depth >= cfg.max_depth || avail.empty()) {
      out.reward = reward(spec, probs, depth, cfg);
      out.reward.r = 0.0;
      return out;
    }
    std::uniform_int_distribution<std::size_t> pick(0, avail.size() - 1);
    const ActionIndex a = avail[pick(rng)];
    s = apply_mask(s, space[a], mask);
    probs = g.predict_one(s.values());
    ++out.classifier_calls;
    out.actions.push_back(a);
  }
}

RolloutResult rollout(const GameState& start, const GameSpec& spec, const Classifier& g,
                      const ActionSpace& space, const MaskConfig& mask, const RewardConfig& cfg,
                      std::mt19937_64& rng) {
  const ClassDistribution probs = g.predict_one(start.values());
  RolloutResult out = rollout(start, probs, spec, g, space, mask, cfg, rng);
  ++out.classifier_calls;
  return out;
}

void backpropagate(SearchTree& tree, std::span<const std::pair<NodeId, ActionIndex>> path,
                   double r) {
  for (const auto& [id, action] : path) {
    EdgeStats& e = tree.node(id).edge(action);
    e.visits += 1;
    e.total_reward += r;
  }
}

// ---------------------------------------------------------------------------
// Episode loop

Search::Search(GameSpec spec, const Classifier& g, ActionSpace space, MaskConfig mask,
               SearchConfig config, std::unique_ptr<Surrogate> surrogate)
    : g_(g),
      surrogate_(std::move(surrogate)),
      tree_(std::move(spec), std::move(space), std::move(mask), config,
            std::string(surrogate_kind_name(surrogate_->kind()))),
      rng_(derive_seed(config.seed, "search")) {
  config.validate();
  tree_.add_root(g_.predict_one(tree_.spec().root.values()));
  ++tree_.stats().classifier_calls;
}

void Search::run(std::size_t episodes) {
  if (tree_.root().terminal) return;
  for (std::size_t i = 0; i < episodes; ++i) {
    try {
      run_episode();
    } catch (const SearchAbortedError&) {
      throw;
    } catch (const std::exception& e) {
      throw SearchAbortedError(std::string("search aborted: ") + e.what(),
                               std::make_shared<const SearchTree>(tree_));
    }
  }
}

void Search::run_episode() {
  if (tree_.root().terminal) return;
  const SearchConfig& cfg = tree_.config();
  std::vector<std::pair<NodeId, ActionIndex>> path;
  NodeId cur = 0;
  double r = 0.0;
  while (true) {
    const TreeNode& node = tree_.node(cur);
    if (node.terminal) {
      r = reward(tree_.spec(), node.probs, tree_.depth(cur), cfg.reward).r;
      break;
    }
    if (tree_.depth(cur) >= cfg.reward.max_depth || node.edges.empty()) {
      r = 0.0;
      break;
    }
    if (node.has_unexpanded()) {
      const NodeId child = expand(tree_, cur, g_, *surrogate_);
      path.emplace_back(cur, tree_.node(child).state.masked_actions().back());
      const TreeNode& leaf = tree_.node(child);
      auto result = rollout(leaf.state, leaf.probs, tree_.spec(), g_, tree_.space(), tree_.mask(),
                            cfg.reward, rng_);
      tree_.stats().classifier_calls += result.classifier_calls;
      r = result.reward.r;
      cur = child;
      break;
    }
    const ActionIndex a = uct_select(node, cfg.lambda);
    path.emplace_back(cur, a);
    cur = *node.edge(a).child;
  }

  backpropagate(tree_, path, r);
  ++tree_.node(cur).stops;
  tree_.set_episodes_completed(tree_.episodes_completed() + 1);
  tree_.stats().surrogate_calls = surrogate_->classifier_calls();

  if (surrogate_->kind() == SurrogateKind::Linear) {
    std::vector<QSample> samples;
    samples.reserve(path.size());
    for (const auto& [id, action] : path) {
      const TreeNode& n = tree_.node(id);
      samples.push_back(QSample{masked_indicator(n.state, tree_.space().size()), action,
                                n.edge(action).win_rate()});
    }
    surrogate_->q_update(samples);
  }
}

SearchTree run_episodes(const GameSpec& spec, const Classifier& g, const ActionSpace& space,
                        const MaskConfig& mask, const SearchConfig& config,
                        const SurrogateConfig& surrogate) {
  config.validate();
  Search search(spec, g, space, mask, config, make_surrogate(surrogate, space.size()));
  search.run(config.episodes);
  return std::move(search).release();
}

}  // namespace mcxai
