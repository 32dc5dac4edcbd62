#pragma once

#include <memory>
#include <optional>
#include <span>

#include "mcxai/explain.hpp"
#include "mcxai/mcts.hpp"

namespace mcxai {

// Everything needed to explain one instance.
struct EngineConfig {
  MaskConfig mask;
  SearchConfig search;
  SurrogateConfig surrogate;
};

// Plays the game matching how g classifies x: a classification game for a
// correctly classified instance, a misclassification game otherwise.
SearchTree explain_instance(const Classifier& g, std::span<const double> x, int y,
                            const ActionSpace& space, const EngineConfig& cfg);

struct ChainResult {
  std::optional<SearchTree> classification;  // absent when x starts misclassified
  SearchTree misclassification;
  // Actions on the classification game's best complete path (empty when skipped).
  std::vector<ActionIndex> classification_path;
};

// Raised when the classification game finds no complete path, so no
// misclassification game can start. Carries the classification tree.
class ChainError : public NoCompletePathError {
 public:
  ChainError(const std::string& what, std::shared_ptr<const SearchTree> partial)
      : NoCompletePathError(what), partial_(std::move(partial)) {}
  const std::shared_ptr<const SearchTree>& classification_tree() const { return partial_; }

 private:
  std::shared_ptr<const SearchTree> partial_;
};

// Runs the classification game, then a misclassification game rooted at the
// terminal state of its best complete path. Misclassified instances go
// straight to the misclassification game.
ChainResult chain_games(const Classifier& g, std::span<const double> x, int y,
                        const ActionSpace& space, const EngineConfig& cfg);

}  // namespace mcxai
