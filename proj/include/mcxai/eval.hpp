#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "mcxai/chain.hpp"
#include "mcxai/classifier.hpp"
#include "mcxai/dataset.hpp"
#include "mcxai/reference_models.hpp"

namespace mcxai {

// Feature sets in order of decreasing importance.
struct Ranking {
  std::vector<std::vector<std::size_t>> sets;
  std::string provenance;  // mcxai | occlusion | random | imported:<name>

  void validate(std::size_t n_features) const;
};

// Number of ranked sets that must be masked, in order, before argmax g moves
// away from y. nullopt if the ranking runs out first. Throws ConfigError if x
// is not classified as y to begin with.
std::optional<std::size_t> nos(const Ranking& r, const Classifier& g, std::span<const double> x,
                               int y, const MaskConfig& mask);

// Actions by one-step drop g(x)[y] - g(x masked by a)[y], descending, ties by index.
Ranking occlusion_ranking(const Classifier& g, std::span<const double> x, int y,
                          const MaskConfig& mask, const ActionSpace& space);
Ranking random_ranking(const ActionSpace& space, std::mt19937_64& rng);
// Root-importance order of a classification-game tree.
Ranking mcxai_ranking(const SearchTree& tree);

struct NosResult {
  std::string method;
  std::vector<std::size_t> instances;             // dataset rows evaluated
  std::vector<std::optional<std::size_t>> steps;  // nullopt = never flipped
  double mean = 0.0;                              // over successes only
  double stddev = 0.0;                            // population std over successes
  std::size_t failures = 0;
};

struct BenchConfig {
  std::vector<std::string> methods{"mcxai", "occlusion", "random"};
  std::size_t k = 50;
  std::uint64_t seed = 0;
  EngineConfig engine;
  // Externally produced rankings per dataset row, benchmarked as "imported:<name>".
  std::map<std::size_t, Ranking> imported;
  std::string imported_name;
};

// Samples k correctly classified rows with cfg.seed and computes NoS for each
// method on the same rows.
std::vector<NosResult> bench_nos(const Dataset& d, const Classifier& g, const ActionSpace& space,
                                 const BenchConfig& cfg);

std::string nos_report_csv(const std::vector<NosResult>& results);
std::string nos_report_table(const std::vector<NosResult>& results);

// JSON lines: {"instance": <row>, "order": [[feature...]...]}.
std::map<std::size_t, Ranking> load_rankings(const std::filesystem::path& path,
                                             const std::string& name, std::size_t n_features);

// Features found by each game for one instance.
struct InstanceExplanation {
  std::vector<std::size_t> classification_features;
  std::vector<std::size_t> misclassification_features;
  bool classification_played = false;
  bool misclassification_played = false;
  // Set when a game ran without finding a complete path.
  bool incomplete = false;
};

// Chains both games on every row (misclassification only for misclassified rows).
std::vector<InstanceExplanation> explain_dataset(const Dataset& d, const Classifier& g,
                                                 const ActionSpace& space,
                                                 const EngineConfig& cfg);

// Copies of d with the misclassification-game features (D_mis) or the
// features of both games (D_both) set to tau. Labels and order are kept.
Dataset build_d_mis(const Dataset& d, std::span<const InstanceExplanation> ex,
                    const MaskConfig& mask);
Dataset build_d_both(const Dataset& d, std::span<const InstanceExplanation> ex,
                     const MaskConfig& mask);

Dataset concat(const Dataset& a, const Dataset& b);

enum class RetrainVariant { Base, Mis, Both };
std::string_view retrain_variant_name(RetrainVariant v);
RetrainVariant parse_retrain_variant(std::string_view name);

struct RetrainRow {
  RetrainVariant variant = RetrainVariant::Base;
  std::vector<double> accuracies;  // percent, one per non-diverged repetition
  double mean = 0.0;
  double stddev = 0.0;
  std::size_t diverged = 0;
};

struct RetrainReport {
  std::vector<RetrainRow> rows;
  std::size_t repetitions = 0;
  std::size_t incomplete_explanations = 0;
};

struct RetrainConfig {
  std::vector<RetrainVariant> variants{RetrainVariant::Base, RetrainVariant::Mis,
                                       RetrainVariant::Both};
  std::size_t repetitions = 5;
  Backend backend = Backend::Mlp;
  TrainParams train;  // epochs, learning rate, hidden size, batch size
  std::uint64_t seed = 0;
};

// Trains on train (base), train + d_mis (mis) and train + d_both (both) with
// the same per-repetition seeds and reports test accuracy mean +- std.
RetrainReport retrain_compare(const Dataset& train, const Dataset& test, const Dataset& d_mis,
                              const Dataset& d_both, const RetrainConfig& cfg);

std::string retrain_report_csv(const RetrainReport& report);

// Mean and population standard deviation.
std::pair<double, double> mean_std(std::span<const double> v);

}  // namespace mcxai
