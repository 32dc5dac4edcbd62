#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "mcxai/dataset.hpp"
#include "mcxai/eval.hpp"
#include "mcxai/reference_models.hpp"

namespace mcxai {

// Two-class data labelled by sign(w . x) with a known weight vector, so the
// true per-instance importance order is available.
struct SyntheticOracle {
  Dataset data;
  std::vector<double> w;
  std::vector<Ranking> rankings;  // oracle ranking per instance, tau = 0
};

struct SyntheticOracleOptions {
  std::size_t instances = 200;
  std::size_t features = 6;
  // When set, used instead of drawing w from the seed.
  std::vector<double> weights;
};

SyntheticOracle synthetic_oracle(std::uint64_t seed, const SyntheticOracleOptions& opt = {});

// Features by descending |w_j (x_j - tau)|, ties by ascending index.
Ranking oracle_ranking(std::span<const double> w, std::span<const double> x, double tau);

// The labelling rule itself as a classifier: logits (-s w.x / 2, +s w.x / 2).
SoftmaxRegression oracle_classifier(std::span<const double> w, double sharpness = 4.0);

// 8x8 images of the digits 0-9 (row-major, intensities in [0, 1]) drawn from
// a fixed glyph set with random shifts, stroke intensity and pixel noise.
Dataset make_digits(std::uint64_t seed, std::size_t count);

}  // namespace mcxai
