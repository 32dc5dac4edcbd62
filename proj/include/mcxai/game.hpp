#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string_view>

#include "mcxai/classifier.hpp"
#include "mcxai/core.hpp"

namespace mcxai {

enum class GameKind {
  // x is correctly classified; mask until the prediction leaves the target.
  Classification,
  // x is misclassified; mask until the prediction returns to the target.
  Misclassification,
};

std::string_view game_kind_name(GameKind k);
GameKind parse_game_kind(std::string_view name);

struct GameSpec {
  GameKind kind = GameKind::Classification;
  GameState root;
  // The unmasked instance; differs from root.values() when the game is
  // chained after another one.
  FeatureVector instance;
  int target = 0;
  double root_prob = 0.0;  // g(x0)[target]
  int predicted = 0;       // argmax g(x0)
};

struct RewardConfig {
  double eta = 0.5;
  std::size_t max_depth = 10;

  void validate() const;
};

struct RewardBreakdown {
  std::size_t depth = 0;  // l, counted from the game's own root
  double q = 0.0;
  double r = 0.0;
};

GameKind detect_game(const Classifier& g, std::span<const double> x, int y);

// Evaluates g at `root` once and fills in the probabilities; the kind follows
// from whether the root is correctly classified.
// `instance` defaults to the root's values.
GameSpec make_game_spec(const Classifier& g, GameState root, int y,
                        std::optional<FeatureVector> instance = std::nullopt);

bool is_terminal(const GameSpec& spec, std::span<const double> probs);
bool is_terminal(const GameSpec& spec, const Classifier& g, const GameState& s);

// Depth of `s` relative to the game's root.
std::size_t game_depth(const GameSpec& spec, const GameState& s);

// r = clamp01((1 - eta)(1 - l/L) + eta q) for l <= L, else 0, with
// q = (2*[p == y] - 1)(g(x0)[y] - g(x_t)[y]).
RewardBreakdown reward(const GameSpec& spec, std::span<const double> terminal_probs,
                       std::size_t depth, const RewardConfig& cfg);
RewardBreakdown reward(const GameSpec& spec, const Classifier& g, const GameState& terminal,
                       const RewardConfig& cfg);

}  // namespace mcxai
