#include "mcxai/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include "mcxai/error.hpp"

namespace mcxai {
namespace {

std::vector<std::string_view> split_row(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  while (true) {
    std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      cells.push_back(line.substr(start));
      break;
    }
    cells.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  return cells;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::string location(std::size_t row, std::size_t col, std::string_view header) {
  return "row " + std::to_string(row) + ", column " + std::to_string(col + 1) + " (\"" +
         std::string(header) + "\")";
}

bool parse_double(std::string_view cell, double& out) {
  if (!cell.empty() && cell.front() == '+') cell.remove_prefix(1);
  if (cell.empty()) return false;
  auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), out);
  return ec == std::errc() && ptr == cell.data() + cell.size() && std::isfinite(out);
}

}  // namespace

void Dataset::validate() const {
  if (instances.size() != labels.size()) {
    throw ConfigError("dataset has " + std::to_string(instances.size()) + " instances but " +
                      std::to_string(labels.size()) + " labels");
  }
  for (const auto& x : instances) {
    if (x.size() != n_features) throw DimensionError("dataset instance has wrong length");
  }
  for (int y : labels) {
    if (y < 0 || static_cast<std::size_t>(y) >= n_classes) {
      throw ConfigError("label " + std::to_string(y) + " outside [0, " +
                        std::to_string(n_classes) + ")");
    }
  }
}

Dataset parse_dataset(const std::string& text, const std::string& label_column) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw ParseError("dataset is empty (no header row)");
  auto header = split_row(trim(line));
  std::vector<std::string> names;
  for (auto h : header) names.emplace_back(trim(h));

  auto label_it = std::find(names.begin(), names.end(), label_column);
  if (label_it == names.end()) {
    throw ParseError("label column \"" + label_column + "\" not found in header");
  }
  const std::size_t label_col = static_cast<std::size_t>(label_it - names.begin());
  if (names.size() < 2) throw ParseError("dataset needs at least one feature column");

  Dataset d;
  d.n_features = names.size() - 1;
  for (std::size_t c = 0; c < names.size(); ++c) {
    if (c != label_col) d.feature_names.push_back(names[c]);
  }

  std::size_t row = 1;
  int max_label = -1;
  while (std::getline(in, line)) {
    ++row;
    std::string_view view = trim(line);
    if (view.empty()) continue;
    auto cells = split_row(view);
    if (cells.size() != names.size()) {
      throw ParseError("row " + std::to_string(row) + ": expected " +
                       std::to_string(names.size()) + " cells, found " +
                       std::to_string(cells.size()));
    }
    FeatureVector x;
    x.reserve(d.n_features);
    for (std::size_t c = 0; c < cells.size(); ++c) {
      std::string_view cell = trim(cells[c]);
      if (c == label_col) {
        int y = 0;
        auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), y);
        if (ec != std::errc() || ptr != cell.data() + cell.size() || y < 0) {
          throw ParseError(location(row, c, names[c]) + ": label \"" + std::string(cell) +
                           "\" is not a non-negative integer");
        }
        d.labels.push_back(y);
        max_label = std::max(max_label, y);
      } else {
        double v = 0.0;
        if (!parse_double(cell, v)) {
          throw ParseError(location(row, c, names[c]) + ": \"" + std::string(cell) +
                           "\" is not a finite number");
        }
        x.push_back(v);
      }
    }
    d.instances.push_back(std::move(x));
  }
  d.n_classes = static_cast<std::size_t>(max_label + 1);
  return d;
}

Dataset load_dataset(const std::filesystem::path& path, const std::string& label_column) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open dataset " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return parse_dataset(buf.str(), label_column);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

std::string format_dataset(const Dataset& d, const std::string& label_column) {
  std::string out;
  for (std::size_t j = 0; j < d.n_features; ++j) {
    out += j < d.feature_names.size() ? d.feature_names[j] : "f" + std::to_string(j);
    out += ',';
  }
  out += label_column;
  out += '\n';
  char buf[32];
  for (std::size_t i = 0; i < d.size(); ++i) {
    for (double v : d.instances[i]) {
      std::snprintf(buf, sizeof buf, "%.17g,", v);
      out += buf;
    }
    out += std::to_string(d.labels[i]);
    out += '\n';
  }
  return out;
}

void save_dataset(const Dataset& d, const std::filesystem::path& path,
                  const std::string& label_column) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write dataset " + path.string());
  out << format_dataset(d, label_column);
  if (!out) throw Error("failed writing dataset " + path.string());
}

std::vector<double> column_means(const Dataset& d) {
  std::vector<double> mean(d.n_features, 0.0);
  if (d.size() == 0) return mean;
  for (const auto& x : d.instances) {
    for (std::size_t j = 0; j < d.n_features; ++j) mean[j] += x[j];
  }
  for (double& m : mean) m /= static_cast<double>(d.size());
  return mean;
}

Dataset select_rows(const Dataset& d, const std::vector<std::size_t>& rows) {
  Dataset out;
  out.n_features = d.n_features;
  out.n_classes = d.n_classes;
  out.feature_names = d.feature_names;
  for (std::size_t r : rows) {
    out.instances.push_back(d.instances.at(r));
    out.labels.push_back(d.labels.at(r));
  }
  return out;
}

std::pair<Dataset, Dataset> train_test_split(const Dataset& d, double test_fraction,
                                             std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw ConfigError("test fraction must lie in (0, 1)");
  }
  std::vector<std::size_t> order(d.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  auto n_test = static_cast<std::size_t>(std::round(test_fraction * static_cast<double>(d.size())));
  std::vector<std::size_t> test(order.begin(), order.begin() + static_cast<long>(n_test));
  std::vector<std::size_t> train(order.begin() + static_cast<long>(n_test), order.end());
  return {select_rows(d, train), select_rows(d, test)};
}

}  // namespace mcxai
