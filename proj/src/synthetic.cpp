#include "mcxai/synthetic.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "mcxai/error.hpp"

namespace mcxai {
namespace {

// 5 x 7 glyphs, one string per row.
constexpr std::array<std::array<const char*, 7>, 10> kGlyphs = {{
    {".###.", "#...#", "#..##", "#.#.#", "##..#", "#...#", ".###."},
    {"..#..", ".##..", "..#..", "..#..", "..#..", "..#..", ".###."},
    {".###.", "#...#", "....#", "...#.", "..#..", ".#...", "#####"},
    {"####.", "....#", "....#", ".###.", "....#", "....#", "####."},
    {"...#.", "..##.", ".#.#.", "#..#.", "#####", "...#.", "...#."},
    {"#####", "#....", "####.", "....#", "....#", "#...#", ".###."},
    {"..##.", ".#...", "#....", "####.", "#...#", "#...#", ".###."},
    {"#####", "....#", "...#.", "..#..", ".#...", ".#...", ".#..."},
    {".###.", "#...#", "#...#", ".###.", "#...#", "#...#", ".###."},
    {".###.", "#...#", "#...#", ".####", "....#", "...#.", ".##.."},
}};

}  // namespace

Ranking oracle_ranking(std::span<const double> w, std::span<const double> x, double tau) {
  if (w.size() != x.size()) throw DimensionError("weights and instance differ in length");
  std::vector<std::size_t> order(w.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> mag(w.size());
  for (std::size_t j = 0; j < w.size(); ++j) mag[j] = std::abs(w[j] * (x[j] - tau));
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return mag[a] > mag[b]; });
  Ranking r;
  r.provenance = "oracle";
  for (std::size_t j : order) r.sets.push_back({j});
  return r;
}

SoftmaxRegression oracle_classifier(std::span<const double> w, double sharpness) {
  std::vector<double> neg(w.size()), pos(w.size());
  for (std::size_t j = 0; j < w.size(); ++j) {
    pos[j] = 0.5 * sharpness * w[j];
    neg[j] = -pos[j];
  }
  return SoftmaxRegression({neg, pos}, {0.0, 0.0});
}

SyntheticOracle synthetic_oracle(std::uint64_t seed, const SyntheticOracleOptions& opt) {
  std::mt19937_64 rng(derive_seed(seed, "synthetic-oracle"));
  SyntheticOracle out;
  if (!opt.weights.empty()) {
    out.w = opt.weights;
  } else {
    if (opt.features == 0) throw ConfigError("synthetic oracle needs at least one feature");
    // Log-normal magnitudes with random signs give a clear but not trivial order.
    std::normal_distribution<double> log_mag(0.0, 1.0);
    std::bernoulli_distribution flip(0.5);
    out.w.resize(opt.features);
    for (double& wj : out.w) wj = std::exp(log_mag(rng)) * (flip(rng) ? -1.0 : 1.0);
  }

  const std::size_t n = out.w.size();
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Dataset& d = out.data;
  d.n_features = n;
  d.n_classes = 2;
  for (std::size_t j = 0; j < n; ++j) d.feature_names.push_back("x" + std::to_string(j));
  for (std::size_t i = 0; i < opt.instances; ++i) {
    FeatureVector x(n);
    for (double& v : x) v = u(rng);
    double margin = 0.0;
    for (std::size_t j = 0; j < n; ++j) margin += out.w[j] * x[j];
    d.labels.push_back(margin > 0.0 ? 1 : 0);
    out.rankings.push_back(oracle_ranking(out.w, x, 0.0));
    d.instances.push_back(std::move(x));
  }
  return out;
}

Dataset make_digits(std::uint64_t seed, std::size_t count) {
  constexpr std::size_t kSide = 8;
  std::mt19937_64 rng(derive_seed(seed, "digits"));
  std::uniform_int_distribution<int> digit(0, 9);
  std::uniform_int_distribution<int> dx(0, kSide - 5);
  std::uniform_int_distribution<int> dy(0, kSide - 7);
  std::uniform_real_distribution<double> ink(0.6, 1.0);
  std::normal_distribution<double> noise(0.0, 0.08);
  std::bernoulli_distribution dropout(0.08);

  Dataset d;
  d.n_features = kSide * kSide;
  d.n_classes = 10;
  for (std::size_t r = 0; r < kSide; ++r) {
    for (std::size_t c = 0; c < kSide; ++c) {
      d.feature_names.push_back("p" + std::to_string(r) + "_" + std::to_string(c));
    }
  }
  for (std::size_t i = 0; i < count; ++i) {
    const int label = digit(rng);
    const int ox = dx(rng);
    const int oy = dy(rng);
    const double stroke = ink(rng);
    FeatureVector img(kSide * kSide, 0.0);
    for (int r = 0; r < 7; ++r) {
      for (int c = 0; c < 5; ++c) {
        if (kGlyphs[static_cast<std::size_t>(label)][static_cast<std::size_t>(r)][c] != '#') {
          continue;
        }
        if (dropout(rng)) continue;
        img[static_cast<std::size_t>((r + oy) * static_cast<int>(kSide) + c + ox)] = stroke;
      }
    }
    for (double& v : img) v = std::clamp(v + noise(rng), 0.0, 1.0);
    d.instances.push_back(std::move(img));
    d.labels.push_back(label);
  }
  return d;
}

}  // namespace mcxai
