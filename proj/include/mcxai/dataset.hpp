#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "mcxai/core.hpp"

namespace mcxai {

struct Dataset {
  std::vector<FeatureVector> instances;
  std::vector<int> labels;
  std::size_t n_features = 0;
  std::size_t n_classes = 0;
  std::vector<std::string> feature_names;

  std::size_t size() const { return instances.size(); }

  // Throws ConfigError if the shape invariants do not hold.
  void validate() const;
};

// Reads the CSV format: header row, one integer label column, numeric
// features. n_classes = 1 + max(label).
Dataset load_dataset(const std::filesystem::path& path, const std::string& label_column = "label");
Dataset parse_dataset(const std::string& text, const std::string& label_column = "label");

// Writes features with round-trip precision and the label as the last column.
void save_dataset(const Dataset& d, const std::filesystem::path& path,
                  const std::string& label_column = "label");
std::string format_dataset(const Dataset& d, const std::string& label_column = "label");

// Per-feature column means, for the dataset-mean masking mode.
std::vector<double> column_means(const Dataset& d);

// Subset by row indices, preserving the given order.
Dataset select_rows(const Dataset& d, const std::vector<std::size_t>& rows);

// Deterministic shuffled split; `test_fraction` of rows go to the second set.
std::pair<Dataset, Dataset> train_test_split(const Dataset& d, double test_fraction,
                                             std::uint64_t seed);

}  // namespace mcxai
