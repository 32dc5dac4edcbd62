#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <utility>
#include <vector>

#include "mcxai/classifier.hpp"
#include "mcxai/dataset.hpp"

namespace mcxai {

struct TrainParams {
  double learning_rate = 0.1;
  int epochs = 500;
  std::uint64_t seed = 0;
  std::size_t hidden_size = 16;  // MLP only
  std::size_t batch_size = 0;    // 0 = full batch
};

// Dense row-major layer: out = W * in + b.
struct DenseLayer {
  std::size_t rows = 0;  // outputs
  std::size_t cols = 0;  // inputs
  std::vector<double> weights;
  std::vector<double> bias;
};

// Common surface of the in-repo models: flat parameter access plus the
// mean cross-entropy loss and its analytic gradient.
class ReferenceModel : public Classifier {
 public:
  virtual std::vector<double> parameters() const = 0;
  virtual void set_parameters(std::span<const double> theta) = 0;
  // Mean cross-entropy over `rows` of `d` and its gradient w.r.t. parameters().
  virtual std::pair<double, std::vector<double>> loss_and_gradient(
      const Dataset& d, std::span<const std::size_t> rows) const = 0;
  std::pair<double, std::vector<double>> loss_and_gradient(const Dataset& d) const;
  double loss(const Dataset& d) const { return loss_and_gradient(d).first; }

  virtual const std::vector<DenseLayer>& layers() const = 0;
  virtual std::unique_ptr<ReferenceModel> clone() const = 0;

  const TrainParams& train_params() const { return params_; }
  void set_train_params(const TrainParams& p) { params_ = p; }

 private:
  TrainParams params_;
};

class SoftmaxRegression final : public ReferenceModel {
 public:
  // Zero weights.
  SoftmaxRegression(std::size_t n_features, std::size_t n_classes);
  // weights: n_classes rows of n_features each.
  SoftmaxRegression(std::vector<std::vector<double>> weights, std::vector<double> bias);
  explicit SoftmaxRegression(DenseLayer layer);

  std::size_t n_features() const override { return layer_[0].cols; }
  std::size_t n_classes() const override { return layer_[0].rows; }
  Backend backend() const override { return Backend::SoftmaxRegression; }
  std::vector<ClassDistribution> predict_proba(std::span<const FeatureVector> xs) const override;

  std::vector<double> parameters() const override;
  void set_parameters(std::span<const double> theta) override;
  using ReferenceModel::loss_and_gradient;
  std::pair<double, std::vector<double>> loss_and_gradient(
      const Dataset& d, std::span<const std::size_t> rows) const override;
  const std::vector<DenseLayer>& layers() const override { return layer_; }
  std::unique_ptr<ReferenceModel> clone() const override;

 private:
  std::vector<DenseLayer> layer_;
};

// One tanh hidden layer followed by softmax.
class Mlp final : public ReferenceModel {
 public:
  Mlp(std::size_t n_features, std::size_t hidden, std::size_t n_classes);
  Mlp(DenseLayer hidden, DenseLayer output);

  std::size_t n_features() const override { return layers_[0].cols; }
  std::size_t n_classes() const override { return layers_[1].rows; }
  std::size_t hidden_size() const { return layers_[0].rows; }
  Backend backend() const override { return Backend::Mlp; }
  std::vector<ClassDistribution> predict_proba(std::span<const FeatureVector> xs) const override;

  std::vector<double> parameters() const override;
  void set_parameters(std::span<const double> theta) override;
  using ReferenceModel::loss_and_gradient;
  std::pair<double, std::vector<double>> loss_and_gradient(
      const Dataset& d, std::span<const std::size_t> rows) const override;
  const std::vector<DenseLayer>& layers() const override { return layers_; }
  std::unique_ptr<ReferenceModel> clone() const override;

 private:
  std::vector<DenseLayer> layers_;
};

// Seeded initial parameters, exactly what training with epochs = 0 returns.
SoftmaxRegression init_softmax_regression(std::size_t n_features, std::size_t n_classes,
                                          std::uint64_t seed);
Mlp init_mlp(std::size_t n_features, std::size_t hidden, std::size_t n_classes,
             std::uint64_t seed);

// Gradient descent on mean cross-entropy. Throws TrainingDivergedError on a
// non-finite loss and ConfigError for invalid hyperparameters.
SoftmaxRegression train_softmax_regression(const Dataset& d, const TrainParams& hp);
Mlp train_mlp(const Dataset& d, const TrainParams& hp);

// Dispatches on backend (softmax regression or MLP).
std::unique_ptr<ReferenceModel> train_reference(Backend backend, const Dataset& d,
                                                const TrainParams& hp);

double accuracy(const Classifier& g, const Dataset& d);

// Versioned JSON model files.
std::string model_to_json(const ReferenceModel& m);
std::unique_ptr<ReferenceModel> model_from_json(const std::string& text);
void save_model(const ReferenceModel& m, const std::filesystem::path& path);
std::unique_ptr<ReferenceModel> load_model(const std::filesystem::path& path);

}  // namespace mcxai
