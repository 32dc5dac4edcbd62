#include "mcxai/chain.hpp"

namespace mcxai {

SearchTree explain_instance(const Classifier& g, std::span<const double> x, int y,
                            const ActionSpace& space, const EngineConfig& cfg) {
  GameSpec spec = make_game_spec(g, GameState::root(FeatureVector(x.begin(), x.end())), y);
  return run_episodes(spec, g, space, cfg.mask, cfg.search, cfg.surrogate);
}

ChainResult chain_games(const Classifier& g, std::span<const double> x, int y,
                        const ActionSpace& space, const EngineConfig& cfg) {
  const FeatureVector instance(x.begin(), x.end());
  GameSpec first = make_game_spec(g, GameState::root(instance), y);
  if (first.kind == GameKind::Misclassification) {
    return ChainResult{std::nullopt, run_episodes(first, g, space, cfg.mask, cfg.search,
                                                  cfg.surrogate),
                       {}};
  }

  SearchTree clf = run_episodes(first, g, space, cfg.mask, cfg.search, cfg.surrogate);
  ExplanationPath best;
  try {
    best = best_complete_path(clf);
  } catch (const NoCompletePathError&) {
    throw ChainError("classification game found no complete path within " +
                         std::to_string(cfg.search.episodes) + " episodes",
                     std::make_shared<const SearchTree>(std::move(clf)));
  }

  SearchConfig second_cfg = cfg.search;
  second_cfg.seed = derive_seed(cfg.search.seed, "misclassification");
  GameSpec second = make_game_spec(g, clf.node(best.end).state, y, instance);
  SearchTree mis = run_episodes(second, g, space, cfg.mask, second_cfg, cfg.surrogate);
  return ChainResult{std::move(clf), std::move(mis), std::move(best.actions)};
}

}  // namespace mcxai
