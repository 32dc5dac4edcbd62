#pragma once

#include <cmath>
#include <cstdint>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mcxai/classifier.hpp"
#include "mcxai/core.hpp"
#include "mcxai/error.hpp"
#include "mcxai/game.hpp"
#include "mcxai/surrogate.hpp"

namespace mcxai {

using NodeId = std::size_t;

struct EdgeStats {
  ActionIndex action = 0;
  std::uint64_t visits = 0;
  double total_reward = 0.0;
  std::optional<NodeId> child;

  // mu = total_reward / visits; 0 for an unvisited edge.
  double win_rate() const {
    return visits == 0 ? 0.0 : total_reward / static_cast<double>(visits);
  }
};

struct TreeNode {
  NodeId id = 0;
  GameState state;
  std::optional<NodeId> parent;
  // One edge per available action, ascending by action. Empty for terminal nodes.
  std::vector<EdgeStats> edges;
  bool terminal = false;
  ClassDistribution probs;  // cached g(state)
  // Episodes that ended at this node: rollouts departing from it, terminal
  // hits during selection, and depth-cap stops.
  std::uint64_t stops = 0;

  // n(x) = sum of n(x, a) over the edges.
  std::uint64_t visits() const;
  bool has_unexpanded() const;
  const EdgeStats& edge(ActionIndex a) const;
  EdgeStats& edge(ActionIndex a);
};

struct SearchConfig {
  std::size_t episodes = 1000;
  double lambda = std::sqrt(2.0);
  RewardConfig reward;
  std::uint64_t seed = 0;

  void validate() const;
};

// Classifier evaluations attributed to the search loop itself (node
// evaluations and rollout steps); surrogate calls are counted separately.
struct SearchStats {
  std::size_t classifier_calls = 0;
  std::size_t surrogate_calls = 0;
};

class SearchTree {
 public:
  SearchTree(GameSpec spec, ActionSpace space, MaskConfig mask, SearchConfig config,
             std::string surrogate_name);

  const GameSpec& spec() const { return spec_; }
  const ActionSpace& space() const { return space_; }
  const MaskConfig& mask() const { return mask_; }
  const SearchConfig& config() const { return config_; }
  const std::string& surrogate_name() const { return surrogate_name_; }

  const std::vector<TreeNode>& nodes() const { return nodes_; }
  const TreeNode& node(NodeId id) const { return nodes_.at(id); }
  TreeNode& node(NodeId id) { return nodes_.at(id); }
  const TreeNode& root() const { return nodes_.front(); }
  std::size_t size() const { return nodes_.size(); }

  std::size_t episodes_completed() const { return episodes_; }
  void set_episodes_completed(std::size_t n) { episodes_ = n; }
  SearchStats& stats() { return stats_; }
  const SearchStats& stats() const { return stats_; }

  // Creates the root from spec().root. Must be called exactly once.
  NodeId add_root(ClassDistribution probs);
  // Materializes the child of `parent` along `action` and links the edge.
  NodeId add_child(NodeId parent, ActionIndex action, GameState state, ClassDistribution probs);

  // Root-to-node action sequence (relative to the game's root).
  std::vector<ActionIndex> path_to(NodeId id) const;
  // Node reached by following `actions` from the root, if present.
  std::optional<NodeId> find(std::span<const ActionIndex> actions) const;

  // Depth relative to the game's root.
  std::size_t depth(NodeId id) const { return game_depth(spec_, node(id).state); }

 private:
  NodeId push_node(GameState state, std::optional<NodeId> parent, ClassDistribution probs);

  GameSpec spec_;
  ActionSpace space_;
  MaskConfig mask_;
  SearchConfig config_;
  std::string surrogate_name_;
  std::vector<TreeNode> nodes_;
  std::size_t episodes_ = 0;
  SearchStats stats_;
};

// Raised when the classifier fails mid-search. Carries the partial tree,
// which must not be used for explanations.
class SearchAbortedError : public Error {
 public:
  SearchAbortedError(const std::string& what, std::shared_ptr<const SearchTree> partial)
      : Error(what), partial_(std::move(partial)) {}
  const std::shared_ptr<const SearchTree>& partial_tree() const { return partial_; }

 private:
  std::shared_ptr<const SearchTree> partial_;
};

// argmax over edges of mu + lambda * sqrt(ln n(x) / n(x, a)). Unvisited edges
// score +inf; ties go to the lowest action index.
ActionIndex uct_select(const TreeNode& node, double lambda);
double uct_score(const EdgeStats& e, std::uint64_t parent_visits, double lambda);

// Expands the unexpanded action with the highest surrogate Q (ties to the
// lowest index) and returns the new child. Throws ConfigError if `node` has
// nothing left to expand or is terminal.
NodeId expand(SearchTree& tree, NodeId node, const Classifier& g, const Surrogate& surrogate);

// Random play from `start` until the game ends or the depth cap L is reached.
// A capped or exhausted rollout scores r = 0.
struct RolloutResult {
  RewardBreakdown reward;
  bool reached_terminal = false;
  std::vector<ActionIndex> actions;
  std::size_t classifier_calls = 0;
};

RolloutResult rollout(const GameState& start, std::span<const double> start_probs,
                      const GameSpec& spec, const Classifier& g, const ActionSpace& space,
                      const MaskConfig& mask, const RewardConfig& cfg, std::mt19937_64& rng);
RolloutResult rollout(const GameState& start, const GameSpec& spec, const Classifier& g,
                      const ActionSpace& space, const MaskConfig& mask, const RewardConfig& cfg,
                      std::mt19937_64& rng);

// Adds (1, r) to every edge on `path`, given as (node, action) pairs from the root.
void backpropagate(SearchTree& tree, std::span<const std::pair<NodeId, ActionIndex>> path,
                   double r);

// Incremental episode runner. A tree whose root is already terminal stays a
// single node and run() does nothing.
class Search {
 public:
  Search(GameSpec spec, const Classifier& g, ActionSpace space, MaskConfig mask,
         SearchConfig config, std::unique_ptr<Surrogate> surrogate);

  // Runs `episodes` more episodes (select, expand, roll out, back-propagate).
  void run(std::size_t episodes);
  void run_episode();

  const SearchTree& tree() const { return tree_; }
  SearchTree release() && { return std::move(tree_); }

 private:
  const Classifier& g_;
  std::unique_ptr<Surrogate> surrogate_;
  SearchTree tree_;
  std::mt19937_64 rng_;
};

// Builds a tree with config.episodes episodes.
SearchTree run_episodes(const GameSpec& spec, const Classifier& g, const ActionSpace& space,
                        const MaskConfig& mask, const SearchConfig& config,
                        const SurrogateConfig& surrogate);

}  // namespace mcxai
