#include "mcxai/surrogate.hpp"

#include <algorithm>
#include <string>

#include "mcxai/error.hpp"

namespace mcxai {

std::string_view surrogate_kind_name(SurrogateKind k) {
  switch (k) {
    case SurrogateKind::Uniform:
      return "uniform";
    case SurrogateKind::Occlusion:
      return "occlusion";
    case SurrogateKind::Linear:
      return "linear";
  }
  return "unknown";
}

SurrogateKind parse_surrogate_kind(std::string_view name) {
  if (name == "uniform") return SurrogateKind::Uniform;
  if (name == "occlusion") return SurrogateKind::Occlusion;
  if (name == "linear") return SurrogateKind::Linear;
  throw ConfigError("unknown surrogate \"" + std::string(name) + "\"");
}

std::vector<double> masked_indicator(const GameState& s, std::size_t n_actions) {
  std::vector<double> ind(n_actions, 0.0);
  for (ActionIndex a : s.masked_actions()) ind.at(static_cast<std::size_t>(a)) = 1.0;
  return ind;
}

double Surrogate::q_predict(const SurrogateContext& ctx, const GameState& state,
                            std::span<const double> state_probs, ActionIndex action) const {
  const ActionIndex one[] = {action};
  return q_values(ctx, state, state_probs, one).front();
}

std::vector<double> UniformSurrogate::q_values(const SurrogateContext&, const GameState&,
                                               std::span<const double>,
                                               std::span<const ActionIndex> candidates) const {
  return std::vector<double>(candidates.size(), 0.5);
}

std::vector<double> OcclusionSurrogate::q_values(const SurrogateContext& ctx,
                                                 const GameState& state,
                                                 std::span<const double> state_probs,
                                                 std::span<const ActionIndex> candidates) const {
  std::vector<FeatureVector> masked;
  masked.reserve(candidates.size());
  for (ActionIndex a : candidates) {
    masked.push_back(apply_mask(state, ctx.space[a], ctx.mask).values());
  }
  calls_ += masked.size();
  const auto probs = ctx.g.predict_proba(masked);

  const auto y = static_cast<std::size_t>(ctx.spec.target);
  const double sign = ctx.spec.kind == GameKind::Classification ? 1.0 : -1.0;
  std::vector<double> q;
  q.reserve(candidates.size());
  for (const auto& p : probs) {
    const double v = sign * (state_probs[y] - p[y]);
    q.push_back(std::clamp((v + 1.0) / 2.0, 0.0, 1.0));
  }
  return q;
}

LinearSurrogate::LinearSurrogate(std::size_t n_actions, double step)
    : n_actions_(n_actions), step_(step), weights_(2 * n_actions, 0.0) {
  if (n_actions == 0) throw ConfigError("linear surrogate needs at least one action");
  if (!(step > 0.0 && step < 2.0)) throw ConfigError("linear surrogate step must lie in (0, 2)");
}

double LinearSurrogate::raw(std::span<const double> state, ActionIndex action) const {
  double z = weights_[n_actions_ + static_cast<std::size_t>(action)];
  for (std::size_t i = 0; i < n_actions_; ++i) z += weights_[i] * state[i];
  return (z + 1.0) / 2.0;
}

double LinearSurrogate::predict_sample(const QSample& s) const {
  return std::clamp(raw(s.state, s.action), 0.0, 1.0);
}

std::vector<double> LinearSurrogate::q_values(const SurrogateContext&, const GameState& state,
                                              std::span<const double>,
                                              std::span<const ActionIndex> candidates) const {
  const auto ind = masked_indicator(state, n_actions_);
  std::vector<double> q;
  q.reserve(candidates.size());
  for (ActionIndex a : candidates) q.push_back(std::clamp(raw(ind, a), 0.0, 1.0));
  return q;
}

double LinearSurrogate::loss(std::span<const QSample> samples) const {
  if (samples.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& s : samples) {
    const double e = raw(s.state, s.action) - s.win_rate;
    sum += e * e;
  }
  return sum / static_cast<double>(samples.size());
}

void LinearSurrogate::q_update(std::span<const QSample> samples) {
  if (samples.empty()) return;
  // Gradient of mean squared error; the step is scaled by the trace of the
  // Hessian so any step in (0, 2) is a descent step.
  std::vector<double> grad(weights_.size(), 0.0);
  double trace = 0.0;
  for (const auto& s : samples) {
    const double e = raw(s.state, s.action) - s.win_rate;
    double norm2 = 1.0;
    for (std::size_t i = 0; i < n_actions_; ++i) {
      grad[i] += e * s.state[i];
      norm2 += s.state[i] * s.state[i];
    }
    grad[n_actions_ + static_cast<std::size_t>(s.action)] += e;
    trace += norm2;
  }
  const auto m = static_cast<double>(samples.size());
  // d/dw of (raw - mu)^2 is (raw - mu) * phi (the 1/2 from raw cancels the 2).
  trace /= 2.0 * m;
  const double lr = step_ / trace;
  for (std::size_t k = 0; k < weights_.size(); ++k) weights_[k] -= lr * grad[k] / m;
}

std::unique_ptr<Surrogate> make_surrogate(const SurrogateConfig& cfg, std::size_t n_actions) {
  switch (cfg.kind) {
    case SurrogateKind::Uniform:
      return std::make_unique<UniformSurrogate>();
    case SurrogateKind::Occlusion:
      return std::make_unique<OcclusionSurrogate>();
    case SurrogateKind::Linear:
      return std::make_unique<LinearSurrogate>(n_actions, cfg.linear_step);
  }
  throw ConfigError("unknown surrogate kind");
}

}  // namespace mcxai
