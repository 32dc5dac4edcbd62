#include "mcxai/game.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mcxai/error.hpp"

namespace mcxai {

std::string_view game_kind_name(GameKind k) {
  return k == GameKind::Classification ? "classification" : "misclassification";
}

GameKind parse_game_kind(std::string_view name) {
  if (name == "classification") return GameKind::Classification;
  if (name == "misclassification") return GameKind::Misclassification;
  throw ConfigError("unknown game kind \"" + std::string(name) + "\"");
}

void RewardConfig::validate() const {
  if (!(eta >= 0.0 && eta <= 1.0)) throw ConfigError("eta must lie in [0, 1]");
  if (max_depth < 1) throw ConfigError("max depth L must be at least 1");
}

GameKind detect_game(const Classifier& g, std::span<const double> x, int y) {
  return predicted_class(g.predict_one(x)) == y ? GameKind::Classification
                                                : GameKind::Misclassification;
}

GameSpec make_game_spec(const Classifier& g, GameState root, int y,
                        std::optional<FeatureVector> instance) {
  if (y < 0 || static_cast<std::size_t>(y) >= g.n_classes()) {
    throw ConfigError("target class " + std::to_string(y) + " outside the model's classes");
  }
  const ClassDistribution probs = g.predict_one(root.values());
  GameSpec spec;
  spec.predicted = predicted_class(probs);
  spec.kind = spec.predicted == y ? GameKind::Classification : GameKind::Misclassification;
  spec.target = y;
  spec.root_prob = probs[static_cast<std::size_t>(y)];
  spec.instance = instance ? std::move(*instance) : root.values();
  if (spec.instance.size() != root.values().size()) {
    throw DimensionError("instance and root state differ in length");
  }
  spec.root = std::move(root);
  return spec;
}

bool is_terminal(const GameSpec& spec, std::span<const double> probs) {
  const bool on_target = predicted_class(probs) == spec.target;
  return spec.kind == GameKind::Classification ? !on_target : on_target;
}

bool is_terminal(const GameSpec& spec, const Classifier& g, const GameState& s) {
  return is_terminal(spec, g.predict_one(s.values()));
}

std::size_t game_depth(const GameSpec& spec, const GameState& s) {
  return s.depth() - spec.root.depth();
}

RewardBreakdown reward(const GameSpec& spec, std::span<const double> terminal_probs,
                       std::size_t depth, const RewardConfig& cfg) {
  RewardBreakdown out;
  out.depth = depth;
  const double sign = spec.predicted == spec.target ? 1.0 : -1.0;
  out.q = sign * (spec.root_prob - terminal_probs[static_cast<std::size_t>(spec.target)]);
  if (depth > cfg.max_depth) {
    out.r = 0.0;
    return out;
  }
  const double l_frac = static_cast<double>(depth) / static_cast<double>(cfg.max_depth);
  const double raw = (1.0 - cfg.eta) * (1.0 - l_frac) + cfg.eta * out.q;
  out.r = std::clamp(raw, 0.0, 1.0);
  return out;
}

RewardBreakdown reward(const GameSpec& spec, const Classifier& g, const GameState& terminal,
                       const RewardConfig& cfg) {
  return reward(spec, g.predict_one(terminal.values()), game_depth(spec, terminal), cfg);
}

}  // namespace mcxai
