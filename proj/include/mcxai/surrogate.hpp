#pragma once

#include <atomic>
#include <memory>
#include <span>
#include <string_view>
#include <vector>

#include "mcxai/classifier.hpp"
#include "mcxai/core.hpp"
#include "mcxai/game.hpp"

namespace mcxai {

enum class SurrogateKind { Uniform, Occlusion, Linear };

std::string_view surrogate_kind_name(SurrogateKind k);
SurrogateKind parse_surrogate_kind(std::string_view name);

struct SurrogateConfig {
  SurrogateKind kind = SurrogateKind::Occlusion;
  double linear_step = 0.5;  // relative step size of the linear least-squares update
};

// Everything a surrogate may consult when scoring candidate actions.
struct SurrogateContext {
  const Classifier& g;
  const GameSpec& spec;
  const ActionSpace& space;
  const MaskConfig& mask;
};

// One training example: the masked-set indicator of the parent state (length
// |A|), the action taken there, and the edge's observed win rate.
struct QSample {
  std::vector<double> state;
  ActionIndex action = 0;
  double win_rate = 0.0;
};

std::vector<double> masked_indicator(const GameState& s, std::size_t n_actions);

// Q(x, a): an estimate of the win rate of taking `a` at `x`, in [0, 1].
class Surrogate {
 public:
  virtual ~Surrogate() = default;

  virtual SurrogateKind kind() const = 0;

  // Scores every candidate. `state_probs` is g(state), already known to the caller.
  virtual std::vector<double> q_values(const SurrogateContext& ctx, const GameState& state,
                                       std::span<const double> state_probs,
                                       std::span<const ActionIndex> candidates) const = 0;

  double q_predict(const SurrogateContext& ctx, const GameState& state,
                   std::span<const double> state_probs, ActionIndex action) const;

  // Online update after back-propagation. No-op unless the surrogate learns.
  virtual void q_update(std::span<const QSample> samples) { (void)samples; }

  // Classifier evaluations made by this surrogate so far.
  virtual std::size_t classifier_calls() const { return 0; }
};

class UniformSurrogate final : public Surrogate {
 public:
  SurrogateKind kind() const override { return SurrogateKind::Uniform; }
  std::vector<double> q_values(const SurrogateContext& ctx, const GameState& state,
                               std::span<const double> state_probs,
                               std::span<const ActionIndex> candidates) const override;
};

// One-step probability change of the target class, signed so that progress
// towards ending the game is positive, mapped to [0, 1] via (v + 1) / 2.
class OcclusionSurrogate final : public Surrogate {
 public:
  SurrogateKind kind() const override { return SurrogateKind::Occlusion; }
  std::vector<double> q_values(const SurrogateContext& ctx, const GameState& state,
                               std::span<const double> state_probs,
                               std::span<const ActionIndex> candidates) const override;
  std::size_t classifier_calls() const override { return calls_.load(); }

 private:
  mutable std::atomic<std::size_t> calls_{0};
};

// Q = clamp01((w . [state indicator, action one-hot] + 1) / 2), fitted online by
// least-squares gradient steps on the edge win rates.
class LinearSurrogate final : public Surrogate {
 public:
  LinearSurrogate(std::size_t n_actions, double step);

  SurrogateKind kind() const override { return SurrogateKind::Linear; }
  std::vector<double> q_values(const SurrogateContext& ctx, const GameState& state,
                               std::span<const double> state_probs,
                               std::span<const ActionIndex> candidates) const override;
  void q_update(std::span<const QSample> samples) override;

  double predict_sample(const QSample& s) const;
  // Mean squared error of the unclamped prediction over `samples`.
  double loss(std::span<const QSample> samples) const;
  const std::vector<double>& weights() const { return weights_; }

 private:
  double raw(std::span<const double> state, ActionIndex action) const;

  std::size_t n_actions_;
  double step_;
  std::vector<double> weights_;
};

std::unique_ptr<Surrogate> make_surrogate(const SurrogateConfig& cfg, std::size_t n_actions);

}  // namespace mcxai
