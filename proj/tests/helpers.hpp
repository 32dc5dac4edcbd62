#pragma once

#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "mcxai/classifier.hpp"
#include "mcxai/error.hpp"

namespace mcxai::testing {

// Classifier backed by a plain function; handy for hand-built games.
class FnClassifier final : public Classifier {
 public:
  using Fn = std::function<ClassDistribution(std::span<const double>)>;
  FnClassifier(std::size_t n, std::size_t c, Fn fn) : n_(n), c_(c), fn_(std::move(fn)) {}

  std::size_t n_features() const override { return n_; }
  std::size_t n_classes() const override { return c_; }
  Backend backend() const override { return Backend::External; }
  std::vector<ClassDistribution> predict_proba(std::span<const FeatureVector> xs) const override {
    check_dimensions(xs);
    std::vector<ClassDistribution> out;
    for (const auto& x : xs) out.push_back(fn_(x));
    return out;
  }

 private:
  std::size_t n_;
  std::size_t c_;
  Fn fn_;
};

// Classifier whose class-0 probability is `p0(x)`.
inline FnClassifier binary(std::size_t n, std::function<double(std::span<const double>)> p0) {
  return FnClassifier(n, 2, [p0 = std::move(p0)](std::span<const double> x) {
    const double p = p0(x);
    return ClassDistribution{p, 1.0 - p};
  });
}

inline std::filesystem::path temp_path(const std::string& name) {
  static std::mt19937_64 rng(std::random_device{}());
  auto dir = std::filesystem::temp_directory_path() /
             ("mcxai_test_" + std::to_string(rng() % 1000000000));
  std::filesystem::create_directories(dir);
  return dir / name;
}

}  // namespace mcxai::testing
