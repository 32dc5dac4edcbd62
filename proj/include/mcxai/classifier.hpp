#pragma once

#include <atomic>
#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "mcxai/core.hpp"

namespace mcxai {

// g(x): one probability per class, summing to 1.
using ClassDistribution = std::vector<double>;

enum class Backend { SoftmaxRegression, Mlp, External };

std::string_view backend_name(Backend b);

// Any black box mapping instances to class distributions. predict_proba is
// treated as a pure function by the engine.
class Classifier {
 public:
  virtual ~Classifier() = default;

  virtual std::size_t n_features() const = 0;
  virtual std::size_t n_classes() const = 0;
  virtual Backend backend() const = 0;

  // Throws DimensionError if any instance has length != n_features().
  virtual std::vector<ClassDistribution> predict_proba(std::span<const FeatureVector> xs) const = 0;

  ClassDistribution predict_one(std::span<const double> x) const;

 protected:
  void check_dimensions(std::span<const FeatureVector> xs) const;
};

// argmax with ties broken towards the lowest class index.
int predicted_class(std::span<const double> probs);

// Throws ModelError unless every entry is in [0, 1] and the sum is 1 within `tolerance`.
void validate_distribution(std::span<const double> probs, double tolerance = 1e-9);

// Forwards to another classifier and counts how many instances were evaluated.
class CountingClassifier final : public Classifier {
 public:
  explicit CountingClassifier(const Classifier& inner) : inner_(inner) {}

  std::size_t n_features() const override { return inner_.n_features(); }
  std::size_t n_classes() const override { return inner_.n_classes(); }
  Backend backend() const override { return inner_.backend(); }
  std::vector<ClassDistribution> predict_proba(std::span<const FeatureVector> xs) const override;

  std::size_t calls() const { return calls_.load(); }
  void reset() { calls_ = 0; }

 private:
  const Classifier& inner_;
  mutable std::atomic<std::size_t> calls_{0};
};

}  // namespace mcxai
