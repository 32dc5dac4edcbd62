#include "mcxai/core.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mcxai/error.hpp"

namespace mcxai {

void validate_feature_vector(std::span<const double> x) {
  if (x.empty()) throw DimensionError("feature vector is empty");
  for (std::size_t j = 0; j < x.size(); ++j) {
    if (!std::isfinite(x[j])) {
      throw DimensionError("feature " + std::to_string(j) + " is not finite");
    }
  }
}

ActionSpace::ActionSpace(std::size_t n_features, std::vector<Action> actions)
    : n_features_(n_features), actions_(std::move(actions)) {
  if (n_features_ == 0) throw ConfigError("action space needs n > 0 features");
  if (actions_.empty()) throw ConfigError("action space needs at least one action");
  std::vector<char> covered(n_features_, 0);
  for (std::size_t i = 0; i < actions_.size(); ++i) {
    const Action& a = actions_[i];
    if (a.index != static_cast<ActionIndex>(i)) {
      throw ConfigError("action indices must be 0..|A|-1 in order");
    }
    if (a.feature_indices.empty()) {
      throw ConfigError("action " + std::to_string(i) + " masks no features");
    }
    for (std::size_t f : a.feature_indices) {
      if (f >= n_features_) {
        throw ConfigError("action " + std::to_string(i) + " masks feature " + std::to_string(f) +
                          " outside [0, " + std::to_string(n_features_) + ")");
      }
      if (covered[f]) {
        throw ConfigError("feature " + std::to_string(f) + " belongs to more than one action");
      }
      covered[f] = 1;
    }
  }
  auto gap = std::find(covered.begin(), covered.end(), 0);
  if (gap != covered.end()) {
    throw ConfigError("feature " + std::to_string(gap - covered.begin()) +
                      " is not covered by any action");
  }
}

std::vector<std::size_t> ActionSpace::features_of(std::span<const ActionIndex> actions) const {
  std::vector<std::size_t> out;
  for (ActionIndex a : actions) {
    const auto& f = (*this)[a].feature_indices;
    out.insert(out.end(), f.begin(), f.end());
  }
  return out;
}

ActionSpace build_action_space(std::size_t n, const MaskConfig& cfg) {
  if (n == 0) throw ConfigError("cannot build an action space over zero features");
  std::vector<Action> actions;
  if (std::holds_alternative<PerFeature>(cfg.grouping)) {
    actions.reserve(n);
    for (std::size_t j = 0; j < n; ++j) {
      actions.push_back(Action{static_cast<ActionIndex>(j), {j}});
    }
    return ActionSpace(n, std::move(actions));
  }

  const Grid& g = std::get<Grid>(cfg.grouping);
  if (g.rows == 0 || g.cols == 0 || g.patch_h == 0 || g.patch_w == 0) {
    throw DimensionError("grid dimensions must be positive");
  }
  if (g.rows * g.cols != n) {
    throw DimensionError("grid " + std::to_string(g.rows) + "x" + std::to_string(g.cols) +
                         " does not match " + std::to_string(n) + " features");
  }
  if (g.rows % g.patch_h != 0 || g.cols % g.patch_w != 0) {
    throw DimensionError("patch " + std::to_string(g.patch_h) + "x" + std::to_string(g.patch_w) +
                         " does not tile grid " + std::to_string(g.rows) + "x" +
                         std::to_string(g.cols));
  }
  for (std::size_t pr = 0; pr < g.rows / g.patch_h; ++pr) {
    for (std::size_t pc = 0; pc < g.cols / g.patch_w; ++pc) {
      Action a{static_cast<ActionIndex>(actions.size()), {}};
      for (std::size_t r = 0; r < g.patch_h; ++r) {
        for (std::size_t c = 0; c < g.patch_w; ++c) {
          a.feature_indices.push_back((pr * g.patch_h + r) * g.cols + pc * g.patch_w + c);
        }
      }
      actions.push_back(std::move(a));
    }
  }
  return ActionSpace(n, std::move(actions));
}

GameState GameState::root(FeatureVector values) {
  validate_feature_vector(values);
  GameState s;
  s.values_ = std::move(values);
  return s;
}

bool GameState::is_masked(ActionIndex a) const {
  return std::find(masked_.begin(), masked_.end(), a) != masked_.end();
}

GameState apply_mask(const GameState& x, const Action& a, const MaskConfig& cfg) {
  if (x.is_masked(a.index)) {
    throw DuplicateActionError("action " + std::to_string(a.index) + " is already applied");
  }
  GameState next = x;
  for (std::size_t f : a.feature_indices) {
    if (f >= next.values_.size()) throw DimensionError("action masks a feature out of range");
    next.values_[f] = cfg.tau_for(f);
  }
  next.masked_.push_back(a.index);
  return next;
}

GameState replay(const GameState& root, std::span<const ActionIndex> actions,
                 const ActionSpace& space, const MaskConfig& cfg) {
  GameState s = root;
  for (ActionIndex a : actions) s = apply_mask(s, space[a], cfg);
  return s;
}

std::vector<Action> available_actions(const GameState& x, const ActionSpace& space) {
  std::vector<Action> out;
  for (const Action& a : space.actions()) {
    if (!x.is_masked(a.index)) out.push_back(a);
  }
  return out;
}

std::vector<ActionIndex> available_action_indices(const GameState& x, const ActionSpace& space) {
  std::vector<char> used(space.size(), 0);
  for (ActionIndex a : x.masked_actions()) used[static_cast<std::size_t>(a)] = 1;
  std::vector<ActionIndex> out;
  out.reserve(space.size() - x.depth());
  for (std::size_t i = 0; i < space.size(); ++i) {
    if (!used[i]) out.push_back(static_cast<ActionIndex>(i));
  }
  return out;
}

FeatureVector mask_features(std::span<const double> x, std::span<const std::size_t> features,
                            const MaskConfig& cfg) {
  FeatureVector out(x.begin(), x.end());
  for (std::size_t f : features) {
    if (f >= out.size()) throw DimensionError("feature index out of range");
    out[f] = cfg.tau_for(f);
  }
  return out;
}

std::uint64_t derive_seed(std::uint64_t seed, std::string_view name) {
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  std::uint64_t h = mix(seed);
  for (unsigned char c : name) h = mix(h ^ c);
  return h;
}

}  // namespace mcxai
