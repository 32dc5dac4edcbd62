#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace mcxai {

enum ExitCode : int {
  kExitOk = 0,
  kExitError = 1,        // config, data, model or adapter failure
  kExitUsage = 2,        // bad command line
  kExitNoComplete = 3,   // a game found no complete path
};

struct RunConfig {
  std::string command;

  std::filesystem::path data;
  std::string label = "label";
  std::filesystem::path test_data;  // retrain: held-out set; split from data when empty
  double test_fraction = 0.3;

  std::filesystem::path model;  // reference model file
  std::string adapter;          // external adapter command line

  std::optional<std::size_t> instance;
  std::string game = "auto";  // auto | classification | misclassification | chain

  std::optional<std::size_t> episodes;   // explain/bench 1000, retrain 200
  double eta = 0.5;
  std::optional<std::size_t> max_depth;  // 10, retrain 20
  double tau = 0.0;
  std::string tau_mode = "constant";  // constant | mean
  double lambda = std::sqrt(2.0);
  std::string surrogate = "occlusion";
  std::uint64_t seed = 0;
  std::string grid;  // "rows,cols,patch_h,patch_w"; per-feature when empty

  std::filesystem::path out;
  std::filesystem::path dot;
  std::size_t top = 10;

  std::vector<std::string> methods{"mcxai", "occlusion", "random"};
  std::size_t k = 50;
  std::filesystem::path import_path;
  std::string import_name = "external";

  std::vector<std::string> variants{"base", "mis", "both"};
  std::size_t repetitions = 5;
  std::optional<std::size_t> epochs;  // train 500, retrain 20
  double learning_rate = 0.1;
  std::string backend = "logreg";     // logreg | mlp; retrain defaults to mlp
  bool backend_set = false;
  std::size_t hidden = 16;
  std::optional<std::size_t> batch_size;  // train full batch, retrain 32

  std::string kind = "digits";  // datagen: digits | oracle
  std::size_t count = 500;
  std::size_t features = 6;
};

int cmd_explain(const RunConfig& cfg, std::ostream& out, std::ostream& err);
int cmd_bench(const RunConfig& cfg, std::ostream& out, std::ostream& err);
int cmd_retrain(const RunConfig& cfg, std::ostream& out, std::ostream& err);
int cmd_train(const RunConfig& cfg, std::ostream& out, std::ostream& err);
int cmd_datagen(const RunConfig& cfg, std::ostream& out, std::ostream& err);

// Parses argv[1..] and dispatches. argv[0] is the program name.
int run_cli(const std::vector<std::string>& argv, std::ostream& out, std::ostream& err);

}  // namespace mcxai
