#include "mcxai/cli.hpp"

#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <memory>
#include <sstream>
#include <string_view>

#include <CLI11.hpp>

#include "mcxai/chain.hpp"
#include "mcxai/error.hpp"
#include "mcxai/eval.hpp"
#include "mcxai/external.hpp"
#include "mcxai/reference_models.hpp"
#include "mcxai/synthetic.hpp"

namespace mcxai {
namespace {

enum class LogLevel { Error = 0, Info = 1, Debug = 2 };

LogLevel log_level() {
  const char* v = std::getenv("MCXAI_LOG");
  if (!v) return LogLevel::Info;
  const std::string_view s(v);
  if (s == "error") return LogLevel::Error;
  if (s == "debug") return LogLevel::Debug;
  return LogLevel::Info;
}

void log(std::ostream& err, LogLevel level, const std::string& msg) {
  if (level > log_level()) return;
  static constexpr const char* kTag[] = {"error", "info", "debug"};
  err << "mcxai: " << kTag[static_cast<int>(level)] << ": " << msg << "\n";
}

struct LoadedModel {
  std::unique_ptr<ReferenceModel> reference;
  std::unique_ptr<ExternalClassifier> external;
  const Classifier& get() const {
    return reference ? static_cast<const Classifier&>(*reference) : *external;
  }
};

LoadedModel load_classifier(const RunConfig& cfg) {
  if (cfg.model.empty() == cfg.adapter.empty()) {
    throw ConfigError("give exactly one of --model and --adapter");
  }
  LoadedModel m;
  if (!cfg.model.empty()) {
    m.reference = load_model(cfg.model);
  } else {
    m.external = std::make_unique<ExternalClassifier>(cfg.adapter);
  }
  return m;
}

Grouping parse_grid(const std::string& spec) {
  if (spec.empty()) return PerFeature{};
  std::vector<std::size_t> v;
  std::stringstream ss(spec);
  std::string part;
  while (std::getline(ss, part, ',')) {
    try {
      std::size_t used = 0;
      const long long x = std::stoll(part, &used);
      if (used != part.size() || x <= 0) throw std::invalid_argument(part);
      v.push_back(static_cast<std::size_t>(x));
    } catch (const std::exception&) {
      throw ConfigError("--grid expects four positive integers rows,cols,patch_h,patch_w");
    }
  }
  if (v.size() != 4) throw ConfigError("--grid expects four positive integers rows,cols,patch_h,patch_w");
  return Grid{v[0], v[1], v[2], v[3]};
}

MaskConfig mask_config(const RunConfig& cfg, const Dataset& d) {
  MaskConfig mask;
  if (!std::isfinite(cfg.tau)) throw ConfigError("--tau must be finite");
  mask.tau = cfg.tau;
  if (cfg.tau_mode == "mean") {
    mask.feature_tau = column_means(d);
  } else if (cfg.tau_mode != "constant") {
    throw ConfigError("--tau-mode must be constant or mean");
  }
  mask.grouping = parse_grid(cfg.grid);
  return mask;
}

EngineConfig engine_config(const RunConfig& cfg, const Dataset& d, std::size_t default_episodes,
                           std::size_t default_depth) {
  EngineConfig e;
  e.mask = mask_config(cfg, d);
  e.search.episodes = cfg.episodes.value_or(default_episodes);
  e.search.lambda = cfg.lambda;
  e.search.reward.eta = cfg.eta;
  e.search.reward.max_depth = cfg.max_depth.value_or(default_depth);
  e.search.seed = cfg.seed;
  e.surrogate.kind = parse_surrogate_kind(cfg.surrogate);
  e.search.validate();
  return e;
}

void check_model_fits(const Classifier& g, const Dataset& d) {
  if (g.n_features() != d.n_features) {
    throw DimensionError("model expects " + std::to_string(g.n_features()) +
                         " features, dataset has " + std::to_string(d.n_features));
  }
  if (static_cast<std::size_t>(d.n_classes) > g.n_classes()) {
    throw DimensionError("dataset labels reach class " + std::to_string(d.n_classes - 1) +
                         " but the model has " + std::to_string(g.n_classes()) + " classes");
  }
}

// Writes every file or none.
void write_all(const std::vector<std::pair<std::filesystem::path, std::string>>& files) {
  std::vector<std::filesystem::path> written;
  try {
    for (const auto& [path, text] : files) {
      write_text_file(path, text);
      written.push_back(path);
    }
  } catch (...) {
    std::error_code ec;
    for (const auto& p : written) std::filesystem::remove(p, ec);
    throw;
  }
}

std::filesystem::path with_suffix(const std::filesystem::path& p, const std::string& tag) {
  std::filesystem::path out = p;
  const std::string ext = p.extension().string();
  out.replace_extension(tag + ext);
  return out;
}

std::string format_ids(const std::vector<std::size_t>& v) {
  std::string s = "{";
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s + "}";
}

std::string format_actions(const std::vector<ActionIndex>& v) {
  std::string s = "[";
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? " " : "") + std::string("a") + std::to_string(v[i]);
  return s + "]";
}

// Prints a tree summary. Returns false when the tree has no complete path.
bool report_tree(const SearchTree& tree, std::size_t top, std::ostream& out) {
  const GameSpec& spec = tree.spec();
  char buf[256];
  std::snprintf(buf, sizeof buf, "%s game: target %d, predicted %d, g(x0)[y] = %.4f, %zu episodes, %zu nodes\n",
                std::string(game_kind_name(spec.kind)).c_str(), spec.target, spec.predicted,
                spec.root_prob, tree.episodes_completed(), tree.size());
  out << buf;
  if (tree.root().terminal) {
    out << "  root is already terminal\n";
    return false;
  }
  out << "  rank  action  win_rate  visits  features\n";
  const auto ranking = root_importance(tree);
  for (std::size_t i = 0; i < ranking.size() && i < top; ++i) {
    const auto& fi = ranking[i];
    if (fi.explored) {
      std::snprintf(buf, sizeof buf, "  %4zu  a%-5d  %8.4f  %6llu  %s\n", i + 1, fi.action,
                    fi.win_rate, static_cast<unsigned long long>(fi.visits),
                    format_ids(fi.feature_indices).c_str());
    } else {
      std::snprintf(buf, sizeof buf, "  %4zu  a%-5d  %8s  %6d  %s\n", i + 1, fi.action,
                    "-", 0, format_ids(fi.feature_indices).c_str());
    }
    out << buf;
  }
  try {
    const auto best = best_complete_path(tree);
    std::snprintf(buf, sizeof buf, "  best complete path: %s win_rate %.4f\n",
                  format_actions(best.actions).c_str(), best.win_rate);
    out << buf;
    return true;
  } catch (const NoCompletePathError&) {
    out << "  no complete path found\n";
    return false;
  }
}

std::vector<std::string> split_list(const std::vector<std::string>& in) {
  std::vector<std::string> out;
  for (const auto& item : in) {
    std::stringstream ss(item);
    std::string part;
    while (std::getline(ss, part, ',')) {
      if (!part.empty()) out.push_back(part);
    }
  }
  return out;
}

Backend parse_backend(const std::string& name) {
  if (name == "logreg" || name == "softmax-regression") return Backend::SoftmaxRegression;
  if (name == "mlp") return Backend::Mlp;
  throw ConfigError("unknown backend \"" + name + "\" (expected logreg or mlp)");
}

TrainParams train_params(const RunConfig& cfg, int default_epochs, std::size_t default_batch) {
  TrainParams hp;
  hp.learning_rate = cfg.learning_rate;
  hp.epochs = static_cast<int>(cfg.epochs.value_or(static_cast<std::size_t>(default_epochs)));
  hp.hidden_size = cfg.hidden;
  hp.batch_size = cfg.batch_size.value_or(default_batch);
  hp.seed = cfg.seed;
  if (!(hp.learning_rate > 0.0) || !std::isfinite(hp.learning_rate)) {
    throw ConfigError("--lr must be positive");
  }
  return hp;
}

template <typename F>
int guarded(std::ostream& err, F&& body) {
  try {
    return body();
  } catch (const NoCompletePathError& e) {
    log(err, LogLevel::Error, e.what());
    return kExitNoComplete;
  } catch (const std::exception& e) {
    log(err, LogLevel::Error, e.what());
    return kExitError;
  }
}

}  // namespace

int cmd_explain(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  return guarded(err, [&]() -> int {
    if (!cfg.instance) throw ConfigError("--instance is required");
    const Dataset d = load_dataset(cfg.data, cfg.label);
    if (*cfg.instance >= d.size()) {
      throw ConfigError("instance " + std::to_string(*cfg.instance) + " out of range (dataset has " +
                        std::to_string(d.size()) + " rows)");
    }
    LoadedModel model = load_classifier(cfg);
    const Classifier& g = model.get();
    check_model_fits(g, d);
    const EngineConfig engine = engine_config(cfg, d, 1000, 10);
    const ActionSpace space = build_action_space(d.n_features, engine.mask);
    const auto& x = d.instances[*cfg.instance];
    const int y = d.labels[*cfg.instance];
    log(err, LogLevel::Debug,
        "instance " + std::to_string(*cfg.instance) + ", label " + std::to_string(y) + ", " +
            std::to_string(space.size()) + " actions");

    std::vector<std::pair<std::filesystem::path, std::string>> files;
    bool complete = true;

    if (cfg.game == "chain") {
      std::optional<SearchTree> clf;
      std::optional<SearchTree> mis;
      try {
        ChainResult chain = chain_games(g, x, y, space, engine);
        clf = std::move(chain.classification);
        mis = std::move(chain.misclassification);
      } catch (const ChainError& e) {
        log(err, LogLevel::Error, e.what());
        clf = *e.classification_tree();
        complete = false;
      }
      if (clf) complete = report_tree(*clf, cfg.top, out) && complete;
      if (mis) complete = report_tree(*mis, cfg.top, out) && complete;
      if (!cfg.out.empty()) {
        if (clf) files.emplace_back(with_suffix(cfg.out, ".clf"), export_json(*clf));
        if (mis) files.emplace_back(with_suffix(cfg.out, ".mis"), export_json(*mis));
      }
      if (!cfg.dot.empty()) {
        if (clf) files.emplace_back(with_suffix(cfg.dot, ".clf"), export_dot(*clf));
        if (mis) files.emplace_back(with_suffix(cfg.dot, ".mis"), export_dot(*mis));
      }
    } else {
      if (cfg.game != "auto") {
        const GameKind want = parse_game_kind(cfg.game);
        const GameKind have = detect_game(g, x, y);
        if (want != have) {
          throw ConfigError("instance " + std::to_string(*cfg.instance) + " calls for the " +
                            std::string(game_kind_name(have)) + " game, not " + cfg.game);
        }
      }
      const SearchTree tree = explain_instance(g, x, y, space, engine);
      complete = report_tree(tree, cfg.top, out);
      if (!cfg.out.empty()) files.emplace_back(cfg.out, export_json(tree));
      if (!cfg.dot.empty()) files.emplace_back(cfg.dot, export_dot(tree));
    }
    write_all(files);
    for (const auto& f : files) log(err, LogLevel::Info, "wrote " + f.first.string());
    return complete ? kExitOk : kExitNoComplete;
  });
}

int cmd_bench(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  return guarded(err, [&]() -> int {
    const Dataset d = load_dataset(cfg.data, cfg.label);
    LoadedModel model = load_classifier(cfg);
    const Classifier& g = model.get();
    check_model_fits(g, d);

    BenchConfig bench;
    bench.methods = split_list(cfg.methods);
    bench.k = cfg.k;
    bench.seed = cfg.seed;
    bench.engine = engine_config(cfg, d, 1000, 10);
    const ActionSpace space = build_action_space(d.n_features, bench.engine.mask);
    if (!cfg.import_path.empty()) {
      bench.imported = load_rankings(cfg.import_path, cfg.import_name, d.n_features);
      bench.imported_name = cfg.import_name;
    }
    const auto results = bench_nos(d, g, space, bench);
    out << nos_report_table(results);
    if (!cfg.out.empty()) {
      write_all({{cfg.out, nos_report_csv(results)}});
      log(err, LogLevel::Info, "wrote " + cfg.out.string());
    } else {
      out << "\n" << nos_report_csv(results);
    }
    return kExitOk;
  });
}

int cmd_retrain(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  return guarded(err, [&]() -> int {
    const Dataset all = load_dataset(cfg.data, cfg.label);
    Dataset train;
    Dataset test;
    if (cfg.test_data.empty()) {
      std::tie(train, test) = train_test_split(all, cfg.test_fraction, derive_seed(cfg.seed, "split"));
    } else {
      train = all;
      test = load_dataset(cfg.test_data, cfg.label);
      if (test.n_features != train.n_features) {
        throw DimensionError("test set width differs from the training set");
      }
    }
    const int n_classes = std::max(train.n_classes, test.n_classes);
    train.n_classes = test.n_classes = n_classes;

    RetrainConfig rc;
    rc.variants.clear();
    for (const auto& v : split_list(cfg.variants)) rc.variants.push_back(parse_retrain_variant(v));
    rc.repetitions = cfg.repetitions;
    rc.backend = parse_backend(cfg.backend_set ? cfg.backend : "mlp");
    rc.train = train_params(cfg, 20, 32);
    rc.seed = cfg.seed;

    // The black box to explain, trained on the training split only.
    TrainParams black_box = rc.train;
    black_box.seed = derive_seed(cfg.seed, "black-box");
    const auto g = train_reference(rc.backend, train, black_box);
    log(err, LogLevel::Info, "black-box test accuracy " + std::to_string(100.0 * accuracy(*g, test)) + "%");

    const EngineConfig engine = engine_config(cfg, train, 200, 20);
    const ActionSpace space = build_action_space(train.n_features, engine.mask);
    const auto ex = explain_dataset(train, *g, space, engine);
    const Dataset d_mis = build_d_mis(train, ex, engine.mask);
    const Dataset d_both = build_d_both(train, ex, engine.mask);

    RetrainReport report = retrain_compare(train, test, d_mis, d_both, rc);
    for (const auto& e : ex) report.incomplete_explanations += e.incomplete ? 1 : 0;
    if (report.incomplete_explanations > 0) {
      log(err, LogLevel::Info,
          std::to_string(report.incomplete_explanations) +
              " training instances had no complete path; copied unchanged");
    }

    char buf[160];
    out << "variant  accuracy (%)        diverged\n";
    for (const auto& row : report.rows) {
      std::snprintf(buf, sizeof buf, "%-7s  %7.2f +- %-6.2f   %zu\n",
                    std::string(retrain_variant_name(row.variant)).c_str(), row.mean, row.stddev,
                    row.diverged);
      out << buf;
      if (row.diverged > 0) {
        log(err, LogLevel::Error,
            std::string("warning: ") + std::to_string(row.diverged) + " repetition(s) of " +
                std::string(retrain_variant_name(row.variant)) + " diverged");
      }
    }
    if (!cfg.out.empty()) {
      write_all({{cfg.out, retrain_report_csv(report)}});
      log(err, LogLevel::Info, "wrote " + cfg.out.string());
    } else {
      out << "\n" << retrain_report_csv(report);
    }
    return kExitOk;
  });
}

int cmd_train(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  return guarded(err, [&]() -> int {
    if (cfg.out.empty()) throw ConfigError("--out is required");
    const Backend backend = parse_backend(cfg.backend);
    const Dataset d = load_dataset(cfg.data, cfg.label);
    const auto model = train_reference(backend, d, train_params(cfg, 500, 0));
    char buf[128];
    std::snprintf(buf, sizeof buf, "%s: train accuracy %.2f%%, loss %.6f\n",
                  std::string(backend_name(backend)).c_str(), 100.0 * accuracy(*model, d),
                  model->loss(d));
    out << buf;
    write_all({{cfg.out, model_to_json(*model)}});
    log(err, LogLevel::Info, "wrote " + cfg.out.string());
    return kExitOk;
  });
}

int cmd_datagen(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  return guarded(err, [&]() -> int {
    if (cfg.out.empty()) throw ConfigError("--out is required");
    Dataset d;
    if (cfg.kind == "digits") {
      d = make_digits(cfg.seed, cfg.count);
    } else if (cfg.kind == "oracle") {
      SyntheticOracleOptions opt;
      opt.instances = cfg.count;
      opt.features = cfg.features;
      d = synthetic_oracle(cfg.seed, opt).data;
    } else {
      throw ConfigError("--kind must be digits or oracle");
    }
    write_all({{cfg.out, format_dataset(d, cfg.label)}});
    out << d.size() << " rows, " << d.n_features << " features, " << d.n_classes << " classes\n";
    return kExitOk;
  });
}

int run_cli(const std::vector<std::string>& argv, std::ostream& out, std::ostream& err) {
  RunConfig cfg;
  CLI::App app{"Explains black-box classifiers by playing feature-masking games with MCTS."};
  app.name(argv.empty() ? "mcxai" : argv[0]);
  app.require_subcommand(1);

  std::size_t episodes = 0;
  std::size_t max_depth = 0;
  std::size_t epochs = 0;
  std::size_t batch_size = 0;
  std::size_t instance = 0;

  auto add_data = [&](CLI::App* sub) {
    sub->add_option("--data", cfg.data, "Dataset CSV")->required();
    sub->add_option("--label", cfg.label, "Label column name")->capture_default_str();
  };
  auto add_model = [&](CLI::App* sub) {
    sub->add_option("--model", cfg.model, "Reference model file");
    sub->add_option("--adapter", cfg.adapter, "External adapter command line");
  };
  auto add_search = [&](CLI::App* sub) {
    sub->add_option("--episodes", episodes, "Episodes I per game");
    sub->add_option("--eta", cfg.eta, "Reward weight eta in [0,1]")->capture_default_str();
    sub->add_option("--max-depth", max_depth, "Maximal depth L");
    sub->add_option("--tau", cfg.tau, "Masking constant")->capture_default_str();
    sub->add_option("--tau-mode", cfg.tau_mode, "constant | mean")
        ->check(CLI::IsMember({"constant", "mean"}))
        ->capture_default_str();
    sub->add_option("--lambda", cfg.lambda, "UCT exploration constant")->capture_default_str();
    sub->add_option("--surrogate", cfg.surrogate, "uniform | occlusion | linear")
        ->check(CLI::IsMember({"uniform", "occlusion", "linear"}))
        ->capture_default_str();
    sub->add_option("--grid", cfg.grid, "Patch grouping rows,cols,patch_h,patch_w");
  };
  auto add_seed = [&](CLI::App* sub) {
    sub->add_option("--seed", cfg.seed, "Random seed")->capture_default_str();
  };
  auto add_training = [&](CLI::App* sub) {
    sub->add_option("--backend", cfg.backend, "logreg | mlp")
        ->check(CLI::IsMember({"logreg", "mlp"}))
        ->each([&](const std::string&) { cfg.backend_set = true; });
    sub->add_option("--epochs", epochs, "Training epochs");
    sub->add_option("--lr", cfg.learning_rate, "Learning rate")->capture_default_str();
    sub->add_option("--hidden", cfg.hidden, "MLP hidden units")->capture_default_str();
    sub->add_option("--batch-size", batch_size, "Mini-batch size, 0 for full batch");
  };

  auto* explain = app.add_subcommand("explain", "Explain one instance");
  add_data(explain);
  add_model(explain);
  add_search(explain);
  add_seed(explain);
  explain->add_option("--instance", instance, "Row index in the dataset")->required();
  explain->add_option("--game", cfg.game, "auto | classification | misclassification | chain")
      ->check(CLI::IsMember({"auto", "classification", "misclassification", "chain"}))
      ->capture_default_str();
  explain->add_option("--out", cfg.out, "Tree JSON output");
  explain->add_option("--dot", cfg.dot, "Graphviz DOT output");
  explain->add_option("--top", cfg.top, "Root importances to print")->capture_default_str();

  auto* bench = app.add_subcommand("bench", "NoS benchmark over k correctly classified rows");
  add_data(bench);
  add_model(bench);
  add_search(bench);
  add_seed(bench);
  bench->add_option("--methods", cfg.methods, "Comma-separated: mcxai,occlusion,random")
      ->delimiter(',');
  bench->add_option("--k", cfg.k, "Instances to sample")->capture_default_str();
  bench->add_option("--import", cfg.import_path, "Ranking file (JSON lines)");
  bench->add_option("--import-name", cfg.import_name, "Name for the imported rankings")
      ->capture_default_str();
  bench->add_option("--out", cfg.out, "CSV report");

  auto* retrain = app.add_subcommand("retrain", "Retrain with D_mis / D_both and compare");
  add_data(retrain);
  add_search(retrain);
  add_seed(retrain);
  add_training(retrain);
  retrain->add_option("--test", cfg.test_data, "Held-out CSV (default: split from --data)");
  retrain->add_option("--test-fraction", cfg.test_fraction, "Held-out fraction when splitting")
      ->capture_default_str();
  retrain->add_option("--variants", cfg.variants, "Comma-separated: base,mis,both")->delimiter(',');
  retrain->add_option("--repetitions", cfg.repetitions, "Training repetitions")->capture_default_str();
  retrain->add_option("--out", cfg.out, "CSV report");

  auto* train = app.add_subcommand("train", "Train a reference model");
  add_data(train);
  add_seed(train);
  add_training(train);
  train->add_option("--out", cfg.out, "Model file")->required();

  auto* datagen = app.add_subcommand("datagen", "Write a synthetic dataset");
  add_seed(datagen);
  datagen->add_option("--kind", cfg.kind, "digits | oracle")
      ->check(CLI::IsMember({"digits", "oracle"}))
      ->capture_default_str();
  datagen->add_option("--count", cfg.count, "Rows")->capture_default_str();
  datagen->add_option("--features", cfg.features, "Features (oracle only)")->capture_default_str();
  datagen->add_option("--label", cfg.label, "Label column name")->capture_default_str();
  datagen->add_option("--out", cfg.out, "CSV output")->required();

  std::vector<std::string> args(argv.size() > 1 ? argv.begin() + 1 : argv.end(), argv.end());
  std::reverse(args.begin(), args.end());
  try {
    app.parse(args);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "mcxai: " << e.what() << "\n";
    return kExitUsage;
  }

  for (const auto* sub : {explain, bench, retrain}) {
    if (sub->parsed()) {
      if (sub->count("--episodes")) cfg.episodes = episodes;
      if (sub->count("--max-depth")) cfg.max_depth = max_depth;
    }
  }
  for (const auto* sub : {retrain, train}) {
    if (sub->parsed()) {
      if (sub->count("--epochs")) cfg.epochs = epochs;
      if (sub->count("--batch-size")) cfg.batch_size = batch_size;
    }
  }
  if (explain->parsed()) cfg.instance = instance;

  if (explain->parsed()) return cmd_explain(cfg, out, err);
  if (bench->parsed()) return cmd_bench(cfg, out, err);
  if (retrain->parsed()) return cmd_retrain(cfg, out, err);
  if (train->parsed()) return cmd_train(cfg, out, err);
  return cmd_datagen(cfg, out, err);
}

}  // namespace mcxai
