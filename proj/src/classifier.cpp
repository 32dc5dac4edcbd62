#include "mcxai/classifier.hpp"

#include <cmath>
#include <string>

#include "mcxai/error.hpp"

namespace mcxai {

std::string_view backend_name(Backend b) {
  switch (b) {
    case Backend::SoftmaxRegression:
      return "softmax-regression";
    case Backend::Mlp:
      return "mlp";
    case Backend::External:
      return "external";
  }
  return "unknown";
}

ClassDistribution Classifier::predict_one(std::span<const double> x) const {
  std::vector<FeatureVector> batch{FeatureVector(x.begin(), x.end())};
  return std::move(predict_proba(batch).front());
}

void Classifier::check_dimensions(std::span<const FeatureVector> xs) const {
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (xs[i].size() != n_features()) {
      throw DimensionError("instance " + std::to_string(i) + " has " +
                           std::to_string(xs[i].size()) + " features, model expects " +
                           std::to_string(n_features()));
    }
  }
}

int predicted_class(std::span<const double> probs) {
  int best = 0;
  for (std::size_t i = 1; i < probs.size(); ++i) {
    if (probs[i] > probs[static_cast<std::size_t>(best)]) best = static_cast<int>(i);
  }
  return best;
}

void validate_distribution(std::span<const double> probs, double tolerance) {
  if (probs.empty()) throw ModelError("empty class distribution");
  double sum = 0.0;
  for (double p : probs) {
    if (!(p >= 0.0 && p <= 1.0)) {
      throw ModelError("class probability " + std::to_string(p) + " outside [0, 1]");
    }
    sum += p;
  }
  if (std::abs(sum - 1.0) > tolerance) {
    throw ModelError("class probabilities sum to " + std::to_string(sum));
  }
}

std::vector<ClassDistribution> CountingClassifier::predict_proba(
    std::span<const FeatureVector> xs) const {
  calls_ += xs.size();
  return inner_.predict_proba(xs);
}

}  // namespace mcxai
