#include "mcxai/reference_models.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include <nlohmann/json.hpp>

#include "mcxai/error.hpp"

namespace mcxai {
namespace {

constexpr int kModelFormatVersion = 1;

DenseLayer zero_layer(std::size_t rows, std::size_t cols) {
  return DenseLayer{rows, cols, std::vector<double>(rows * cols, 0.0),
                    std::vector<double>(rows, 0.0)};
}

void check_layer(const DenseLayer& l) {
  if (l.rows == 0 || l.cols == 0) throw ConfigError("layer dimensions must be positive");
  if (l.weights.size() != l.rows * l.cols || l.bias.size() != l.rows) {
    throw ModelError("layer parameter arrays do not match its shape");
  }
}

void affine(const DenseLayer& l, std::span<const double> in, std::span<double> out) {
  for (std::size_t r = 0; r < l.rows; ++r) {
    const double* w = l.weights.data() + r * l.cols;
    double z = l.bias[r];
    for (std::size_t c = 0; c < l.cols; ++c) z += w[c] * in[c];
    out[r] = z;
  }
}

// In-place softmax; returns log(sum(exp(z - max))) + max for log-probabilities.
double softmax_inplace(std::span<double> z) {
  const double zmax = *std::max_element(z.begin(), z.end());
  double sum = 0.0;
  for (double& v : z) {
    v = std::exp(v - zmax);
    sum += v;
  }
  for (double& v : z) v /= sum;
  return std::log(sum) + zmax;
}

std::size_t param_count(const std::vector<DenseLayer>& layers) {
  std::size_t n = 0;
  for (const auto& l : layers) n += l.weights.size() + l.bias.size();
  return n;
}

std::vector<double> flatten(const std::vector<DenseLayer>& layers) {
  std::vector<double> theta;
  theta.reserve(param_count(layers));
  for (const auto& l : layers) {
    theta.insert(theta.end(), l.weights.begin(), l.weights.end());
    theta.insert(theta.end(), l.bias.begin(), l.bias.end());
  }
  return theta;
}

void unflatten(std::vector<DenseLayer>& layers, std::span<const double> theta) {
  if (theta.size() != param_count(layers)) {
    throw DimensionError("parameter vector has " + std::to_string(theta.size()) +
                         " entries, model has " + std::to_string(param_count(layers)));
  }
  auto it = theta.begin();
  for (auto& l : layers) {
    std::copy_n(it, l.weights.size(), l.weights.begin());
    it += static_cast<long>(l.weights.size());
    std::copy_n(it, l.bias.size(), l.bias.begin());
    it += static_cast<long>(l.bias.size());
  }
}

void check_training_data(const Dataset& d, std::size_t n_features) {
  if (d.size() == 0) throw ConfigError("cannot train on an empty dataset");
  d.validate();
  if (d.n_features != n_features) throw DimensionError("dataset does not match model width");
}

void fill_normal(std::vector<double>& v, double stddev, std::mt19937_64& rng) {
  std::normal_distribution<double> dist(0.0, stddev);
  for (double& x : v) x = dist(rng);
}

template <class Model>
void gradient_descent(Model& model, const Dataset& d, const TrainParams& hp) {
  if (hp.epochs < 0) throw ConfigError("epochs must be >= 0");
  if (!(hp.learning_rate > 0.0) || !std::isfinite(hp.learning_rate)) {
    throw ConfigError("learning rate must be positive and finite");
  }
  std::vector<std::size_t> order(d.size());
  std::iota(order.begin(), order.end(), 0);
  const std::size_t batch =
      hp.batch_size == 0 ? d.size() : std::min(hp.batch_size, d.size());
  std::mt19937_64 rng(derive_seed(hp.seed, "batches"));

  std::vector<double> theta = model.parameters();
  for (int epoch = 0; epoch < hp.epochs; ++epoch) {
    if (batch < d.size()) std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < d.size(); start += batch) {
      std::span<const std::size_t> rows(order.data() + start, std::min(batch, d.size() - start));
      auto [loss, grad] = model.loss_and_gradient(d, rows);
      if (!std::isfinite(loss)) {
        throw TrainingDivergedError("non-finite training loss at epoch " + std::to_string(epoch));
      }
      for (std::size_t k = 0; k < theta.size(); ++k) theta[k] -= hp.learning_rate * grad[k];
      model.set_parameters(theta);
    }
  }
  model.set_train_params(hp);
}

nlohmann::json layer_to_json(const DenseLayer& l) {
  return {{"rows", l.rows}, {"cols", l.cols}, {"weights", l.weights}, {"bias", l.bias}};
}

DenseLayer layer_from_json(const nlohmann::json& j) {
  DenseLayer l;
  l.rows = j.at("rows").get<std::size_t>();
  l.cols = j.at("cols").get<std::size_t>();
  l.weights = j.at("weights").get<std::vector<double>>();
  l.bias = j.at("bias").get<std::vector<double>>();
  check_layer(l);
  return l;
}

}  // namespace

std::pair<double, std::vector<double>> ReferenceModel::loss_and_gradient(const Dataset& d) const {
  std::vector<std::size_t> rows(d.size());
  std::iota(rows.begin(), rows.end(), 0);
  return loss_and_gradient(d, rows);
}

// ---------------------------------------------------------------------------
// Softmax regression

SoftmaxRegression::SoftmaxRegression(std::size_t n_features, std::size_t n_classes)
    : SoftmaxRegression(zero_layer(n_classes, n_features)) {}

SoftmaxRegression::SoftmaxRegression(std::vector<std::vector<double>> weights,
                                     std::vector<double> bias) {
  if (weights.empty()) throw ConfigError("softmax regression needs at least one class");
  DenseLayer l{weights.size(), weights.front().size(), {}, std::move(bias)};
  for (const auto& row : weights) {
    if (row.size() != l.cols) throw DimensionError("ragged weight matrix");
    l.weights.insert(l.weights.end(), row.begin(), row.end());
  }
  check_layer(l);
  layer_.push_back(std::move(l));
}

SoftmaxRegression::SoftmaxRegression(DenseLayer layer) {
  check_layer(layer);
  layer_.push_back(std::move(layer));
}

std::vector<ClassDistribution> SoftmaxRegression::predict_proba(
    std::span<const FeatureVector> xs) const {
  check_dimensions(xs);
  std::vector<ClassDistribution> out;
  out.reserve(xs.size());
  for (const auto& x : xs) {
    ClassDistribution z(n_classes());
    affine(layer_[0], x, z);
    softmax_inplace(z);
    out.push_back(std::move(z));
  }
  return out;
}

std::vector<double> SoftmaxRegression::parameters() const { return flatten(layer_); }

void SoftmaxRegression::set_parameters(std::span<const double> theta) { unflatten(layer_, theta); }

std::pair<double, std::vector<double>> SoftmaxRegression::loss_and_gradient(
    const Dataset& d, std::span<const std::size_t> rows) const {
  const DenseLayer& l = layer_[0];
  std::vector<double> grad(param_count(layer_), 0.0);
  double* gw = grad.data();
  double* gb = grad.data() + l.weights.size();
  double loss = 0.0;
  std::vector<double> z(l.rows);
  for (std::size_t i : rows) {
    const auto& x = d.instances[i];
    const auto y = static_cast<std::size_t>(d.labels[i]);
    if (y >= l.rows) throw DimensionError("label exceeds model class count");
    affine(l, x, z);
    const double zy = z[y];
    loss += softmax_inplace(z) - zy;
    z[y] -= 1.0;
    for (std::size_t r = 0; r < l.rows; ++r) {
      for (std::size_t c = 0; c < l.cols; ++c) gw[r * l.cols + c] += z[r] * x[c];
      gb[r] += z[r];
    }
  }
  const double inv = rows.empty() ? 0.0 : 1.0 / static_cast<double>(rows.size());
  for (double& g : grad) g *= inv;
  return {loss * inv, std::move(grad)};
}

std::unique_ptr<ReferenceModel> SoftmaxRegression::clone() const {
  return std::make_unique<SoftmaxRegression>(*this);
}

// ---------------------------------------------------------------------------
// MLP

Mlp::Mlp(std::size_t n_features, std::size_t hidden, std::size_t n_classes) {
  if (hidden == 0) throw ConfigError("MLP hidden size must be at least 1");
  layers_.push_back(zero_layer(hidden, n_features));
  layers_.push_back(zero_layer(n_classes, hidden));
  check_layer(layers_[0]);
  check_layer(layers_[1]);
}

Mlp::Mlp(DenseLayer hidden, DenseLayer output) {
  check_layer(hidden);
  check_layer(output);
  if (output.cols != hidden.rows) throw ModelError("MLP layer shapes do not chain");
  layers_.push_back(std::move(hidden));
  layers_.push_back(std::move(output));
}

std::vector<ClassDistribution> Mlp::predict_proba(std::span<const FeatureVector> xs) const {
  check_dimensions(xs);
  std::vector<ClassDistribution> out;
  out.reserve(xs.size());
  std::vector<double> h(hidden_size());
  for (const auto& x : xs) {
    affine(layers_[0], x, h);
    for (double& v : h) v = std::tanh(v);
    ClassDistribution z(n_classes());
    affine(layers_[1], h, z);
    softmax_inplace(z);
    out.push_back(std::move(z));
  }
  return out;
}

std::vector<double> Mlp::parameters() const { return flatten(layers_); }

void Mlp::set_parameters(std::span<const double> theta) { unflatten(layers_, theta); }

std::pair<double, std::vector<double>> Mlp::loss_and_gradient(
    const Dataset& d, std::span<const std::size_t> rows) const {
  const DenseLayer& l1 = layers_[0];
  const DenseLayer& l2 = layers_[1];
  std::vector<double> grad(param_count(layers_), 0.0);
  double* gw1 = grad.data();
  double* gb1 = gw1 + l1.weights.size();
  double* gw2 = gb1 + l1.bias.size();
  double* gb2 = gw2 + l2.weights.size();

  double loss = 0.0;
  std::vector<double> h(l1.rows), z(l2.rows), dh(l1.rows);
  for (std::size_t i : rows) {
    const auto& x = d.instances[i];
    const auto y = static_cast<std::size_t>(d.labels[i]);
    if (y >= l2.rows) throw DimensionError("label exceeds model class count");
    affine(l1, x, h);
    for (double& v : h) v = std::tanh(v);
    affine(l2, h, z);
    const double zy = z[y];
    loss += softmax_inplace(z) - zy;
    z[y] -= 1.0;  // dL/dlogits

    std::fill(dh.begin(), dh.end(), 0.0);
    for (std::size_t r = 0; r < l2.rows; ++r) {
      for (std::size_t c = 0; c < l2.cols; ++c) {
        gw2[r * l2.cols + c] += z[r] * h[c];
        dh[c] += l2.weights[r * l2.cols + c] * z[r];
      }
      gb2[r] += z[r];
    }
    for (std::size_t r = 0; r < l1.rows; ++r) {
      const double da = dh[r] * (1.0 - h[r] * h[r]);
      for (std::size_t c = 0; c < l1.cols; ++c) gw1[r * l1.cols + c] += da * x[c];
      gb1[r] += da;
    }
  }
  const double inv = rows.empty() ? 0.0 : 1.0 / static_cast<double>(rows.size());
  for (double& g : grad) g *= inv;
  return {loss * inv, std::move(grad)};
}

std::unique_ptr<ReferenceModel> Mlp::clone() const { return std::make_unique<Mlp>(*this); }

// ---------------------------------------------------------------------------
// Training

SoftmaxRegression init_softmax_regression(std::size_t n_features, std::size_t n_classes,
                                          std::uint64_t seed) {
  SoftmaxRegression m(n_features, n_classes);
  std::mt19937_64 rng(derive_seed(seed, "init"));
  std::vector<double> theta = m.parameters();
  std::vector<double> w(n_features * n_classes);
  fill_normal(w, 0.01, rng);
  std::copy(w.begin(), w.end(), theta.begin());
  m.set_parameters(theta);
  return m;
}

Mlp init_mlp(std::size_t n_features, std::size_t hidden, std::size_t n_classes,
             std::uint64_t seed) {
  Mlp m(n_features, hidden, n_classes);
  std::mt19937_64 rng(derive_seed(seed, "init"));
  DenseLayer l1 = m.layers()[0];
  DenseLayer l2 = m.layers()[1];
  fill_normal(l1.weights, 1.0 / std::sqrt(static_cast<double>(n_features)), rng);
  fill_normal(l2.weights, 1.0 / std::sqrt(static_cast<double>(hidden)), rng);
  return Mlp(std::move(l1), std::move(l2));
}

SoftmaxRegression train_softmax_regression(const Dataset& d, const TrainParams& hp) {
  check_training_data(d, d.n_features);
  SoftmaxRegression m = init_softmax_regression(d.n_features, d.n_classes, hp.seed);
  gradient_descent(m, d, hp);
  return m;
}

Mlp train_mlp(const Dataset& d, const TrainParams& hp) {
  if (hp.hidden_size == 0) throw ConfigError("MLP hidden size must be at least 1");
  check_training_data(d, d.n_features);
  Mlp m = init_mlp(d.n_features, hp.hidden_size, d.n_classes, hp.seed);
  gradient_descent(m, d, hp);
  return m;
}

std::unique_ptr<ReferenceModel> train_reference(Backend backend, const Dataset& d,
                                                const TrainParams& hp) {
  switch (backend) {
    case Backend::SoftmaxRegression:
      return std::make_unique<SoftmaxRegression>(train_softmax_regression(d, hp));
    case Backend::Mlp:
      return std::make_unique<Mlp>(train_mlp(d, hp));
    case Backend::External:
      break;
  }
  throw ConfigError("only reference backends can be trained");
}

double accuracy(const Classifier& g, const Dataset& d) {
  if (d.size() == 0) return 0.0;
  auto probs = g.predict_proba(d.instances);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (predicted_class(probs[i]) == d.labels[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(d.size());
}

// ---------------------------------------------------------------------------
// Persistence

std::string model_to_json(const ReferenceModel& m) {
  nlohmann::json layers = nlohmann::json::array();
  for (const auto& l : m.layers()) layers.push_back(layer_to_json(l));
  const TrainParams& hp = m.train_params();
  nlohmann::json j = {
      {"format", "mcxai-model"},
      {"version", kModelFormatVersion},
      {"backend", std::string(backend_name(m.backend()))},
      {"n_features", m.n_features()},
      {"n_classes", m.n_classes()},
      {"layers", layers},
      {"training",
       {{"learning_rate", hp.learning_rate},
        {"epochs", hp.epochs},
        {"seed", hp.seed},
        {"batch_size", hp.batch_size}}},
  };
  if (m.backend() == Backend::Mlp) j["hidden_size"] = m.layers()[0].rows;
  return j.dump(1);
}

std::unique_ptr<ReferenceModel> model_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ModelError(std::string("model file is not valid JSON: ") + e.what());
  }
  try {
    if (j.at("format").get<std::string>() != "mcxai-model") {
      throw ModelError("not a model file");
    }
    const int version = j.at("version").get<int>();
    if (version != kModelFormatVersion) {
      throw ModelError("unsupported model file version " + std::to_string(version));
    }
    const auto backend = j.at("backend").get<std::string>();
    const auto n = j.at("n_features").get<std::size_t>();
    const auto c = j.at("n_classes").get<std::size_t>();
    std::vector<DenseLayer> layers;
    for (const auto& lj : j.at("layers")) layers.push_back(layer_from_json(lj));

    std::unique_ptr<ReferenceModel> model;
    if (backend == backend_name(Backend::SoftmaxRegression)) {
      if (layers.size() != 1) throw ModelError("softmax regression expects one layer");
      model = std::make_unique<SoftmaxRegression>(std::move(layers[0]));
    } else if (backend == backend_name(Backend::Mlp)) {
      if (layers.size() != 2) throw ModelError("MLP expects two layers");
      model = std::make_unique<Mlp>(std::move(layers[0]), std::move(layers[1]));
    } else {
      throw ModelError("unknown model backend \"" + backend + "\"");
    }
    if (model->n_features() != n || model->n_classes() != c) {
      throw ModelError("model shape metadata disagrees with its weights");
    }
    if (j.contains("training")) {
      const auto& t = j["training"];
      TrainParams hp;
      hp.learning_rate = t.value("learning_rate", hp.learning_rate);
      hp.epochs = t.value("epochs", hp.epochs);
      hp.seed = t.value("seed", hp.seed);
      hp.batch_size = t.value("batch_size", hp.batch_size);
      if (model->backend() == Backend::Mlp) hp.hidden_size = model->layers()[0].rows;
      model->set_train_params(hp);
    }
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw ModelError(std::string("malformed model file: ") + e.what());
  }
}

void save_model(const ReferenceModel& m, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write model " + path.string());
  out << model_to_json(m) << '\n';
  if (!out) throw Error("failed writing model " + path.string());
}

std::unique_ptr<ReferenceModel> load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ModelError("cannot open model " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return model_from_json(buf.str());
}

}  // namespace mcxai
