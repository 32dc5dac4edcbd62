#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

namespace mcxai {

// An instance x in R^n. Kept as a plain vector so it can be handed straight
// to classifiers; validity (non-empty, finite) is checked at the boundaries
// that accept external data.
using FeatureVector = std::vector<double>;

using ActionIndex = int;

void validate_feature_vector(std::span<const double> x);

struct Action {
  ActionIndex index = 0;
  std::vector<std::size_t> feature_indices;
};

// Mask every feature on its own.
struct PerFeature {};

// Treat the instance as a row-major rows x cols image and mask rectangular
// patch_h x patch_w patches.
struct Grid {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::size_t patch_h = 1;
  std::size_t patch_w = 1;
};

using Grouping = std::variant<PerFeature, Grid>;

struct MaskConfig {
  double tau = 0.0;
  // Per-feature masking values (dataset-mean mode). Overrides `tau` when set.
  std::optional<std::vector<double>> feature_tau;
  Grouping grouping = PerFeature{};

  double tau_for(std::size_t feature) const {
    return feature_tau ? (*feature_tau)[feature] : tau;
  }
};

// A partition of [0, n) into actions. Immutable once built.
class ActionSpace {
 public:
  ActionSpace(std::size_t n_features, std::vector<Action> actions);

  std::size_t n_features() const { return n_features_; }
  std::size_t size() const { return actions_.size(); }
  const std::vector<Action>& actions() const { return actions_; }
  const Action& operator[](ActionIndex i) const { return actions_.at(static_cast<std::size_t>(i)); }

  // Feature indices covered by the given actions, in the given order.
  std::vector<std::size_t> features_of(std::span<const ActionIndex> actions) const;

 private:
  std::size_t n_features_;
  std::vector<Action> actions_;
};

ActionSpace build_action_space(std::size_t n, const MaskConfig& cfg);

// A masked instance plus the ordered list of actions that produced it.
class GameState {
 public:
  static GameState root(FeatureVector values);

  const FeatureVector& values() const { return values_; }
  const std::vector<ActionIndex>& masked_actions() const { return masked_; }
  std::size_t depth() const { return masked_.size(); }
  bool is_masked(ActionIndex a) const;

  friend bool operator==(const GameState&, const GameState&) = default;

 private:
  friend GameState apply_mask(const GameState&, const Action&, const MaskConfig&);
  FeatureVector values_;
  std::vector<ActionIndex> masked_;
};

// x' = x with every feature of `a` replaced by its tau. Throws
// DuplicateActionError if `a` is already applied.
GameState apply_mask(const GameState& x, const Action& a, const MaskConfig& cfg);

// Applies `actions` to `root` in order.
GameState replay(const GameState& root, std::span<const ActionIndex> actions,
                 const ActionSpace& space, const MaskConfig& cfg);

// Actions of `space` not yet applied to `x`, ascending by index.
std::vector<Action> available_actions(const GameState& x, const ActionSpace& space);
std::vector<ActionIndex> available_action_indices(const GameState& x, const ActionSpace& space);

// Sets every feature of `x` listed in `features` to its tau.
FeatureVector mask_features(std::span<const double> x, std::span<const std::size_t> features,
                            const MaskConfig& cfg);

// Named sub-seed derived from a master seed (splitmix64 over the name).
std::uint64_t derive_seed(std::uint64_t seed, std::string_view name);

}  // namespace mcxai
