#include "mcxai/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "mcxai/error.hpp"

namespace mcxai {

void Ranking::validate(std::size_t n_features) const {
  std::vector<char> seen(n_features, 0);
  for (const auto& set : sets) {
    if (set.empty()) throw ConfigError("ranking contains an empty feature set");
    for (std::size_t f : set) {
      if (f >= n_features) {
        throw ConfigError("ranking feature " + std::to_string(f) + " outside [0, " +
                          std::to_string(n_features) + ")");
      }
      if (seen[f]) throw ConfigError("ranking lists feature " + std::to_string(f) + " twice");
      seen[f] = 1;
    }
  }
}

std::optional<std::size_t> nos(const Ranking& r, const Classifier& g, std::span<const double> x,
                               int y, const MaskConfig& mask) {
  if (predicted_class(g.predict_one(x)) != y) {
    throw ConfigError("NoS needs an instance that g classifies as its label");
  }
  FeatureVector cur(x.begin(), x.end());
  for (std::size_t step = 0; step < r.sets.size(); ++step) {
    for (std::size_t f : r.sets[step]) cur.at(f) = mask.tau_for(f);
    if (predicted_class(g.predict_one(cur)) != y) return step + 1;
  }
  return std::nullopt;
}

Ranking occlusion_ranking(const Classifier& g, std::span<const double> x, int y,
                          const MaskConfig& mask, const ActionSpace& space) {
  const auto yi = static_cast<std::size_t>(y);
  const double base = g.predict_one(x)[yi];
  std::vector<FeatureVector> masked;
  masked.reserve(space.size());
  for (const auto& a : space.actions()) masked.push_back(mask_features(x, a.feature_indices, mask));
  const auto probs = g.predict_proba(masked);

  std::vector<ActionIndex> order(space.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> drop(space.size());
  for (std::size_t i = 0; i < space.size(); ++i) drop[i] = base - probs[i][yi];
  std::stable_sort(order.begin(), order.end(), [&](ActionIndex a, ActionIndex b) {
    return drop[static_cast<std::size_t>(a)] > drop[static_cast<std::size_t>(b)];
  });

  Ranking r;
  r.provenance = "occlusion";
  for (ActionIndex a : order) r.sets.push_back(space[a].feature_indices);
  return r;
}

Ranking random_ranking(const ActionSpace& space, std::mt19937_64& rng) {
  std::vector<ActionIndex> order(space.size());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  Ranking r;
  r.provenance = "random";
  for (ActionIndex a : order) r.sets.push_back(space[a].feature_indices);
  return r;
}

Ranking mcxai_ranking(const SearchTree& tree) {
  Ranking r;
  r.provenance = "mcxai";
  for (const auto& fi : root_importance(tree)) r.sets.push_back(fi.feature_indices);
  return r;
}

std::pair<double, double> mean_std(std::span<const double> v) {
  if (v.empty()) return {0.0, 0.0};
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / static_cast<double>(v.size()))};
}

std::vector<NosResult> bench_nos(const Dataset& d, const Classifier& g, const ActionSpace& space,
                                 const BenchConfig& cfg) {
  if (cfg.k == 0) throw ConfigError("k must be at least 1");
  if (cfg.methods.empty() && cfg.imported.empty()) throw ConfigError("no methods to benchmark");
  d.validate();

  const auto probs = g.predict_proba(d.instances);
  std::vector<std::size_t> correct;
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (predicted_class(probs[i]) == d.labels[i]) correct.push_back(i);
  }
  if (correct.size() < cfg.k) {
    throw ConfigError("only " + std::to_string(correct.size()) +
                      " correctly classified instances, k = " + std::to_string(cfg.k));
  }
  std::mt19937_64 sampler(derive_seed(cfg.seed, "bench-sample"));
  std::shuffle(correct.begin(), correct.end(), sampler);
  correct.resize(cfg.k);

  std::vector<std::string> methods = cfg.methods;
  if (!cfg.imported.empty()) methods.push_back("imported:" + cfg.imported_name);

  std::vector<NosResult> results;
  for (const auto& method : methods) {
    NosResult res;
    res.method = method;
    res.instances = correct;
    for (std::size_t row : correct) {
      const auto& x = d.instances[row];
      const int y = d.labels[row];
      Ranking ranking;
      if (method == "mcxai") {
        EngineConfig engine = cfg.engine;
        engine.search.seed = derive_seed(cfg.seed, "mcxai/" + std::to_string(row));
        ranking = mcxai_ranking(explain_instance(g, x, y, space, engine));
      } else if (method == "occlusion") {
        ranking = occlusion_ranking(g, x, y, cfg.engine.mask, space);
      } else if (method == "random") {
        std::mt19937_64 rng(derive_seed(cfg.seed, "random/" + std::to_string(row)));
        ranking = random_ranking(space, rng);
      } else if (method.rfind("imported:", 0) == 0) {
        auto it = cfg.imported.find(row);
        if (it == cfg.imported.end()) {
          throw ConfigError("imported rankings have no entry for instance " + std::to_string(row));
        }
        ranking = it->second;
      } else {
        throw ConfigError("unknown NoS method \"" + method + "\"");
      }
      res.steps.push_back(nos(ranking, g, x, y, cfg.engine.mask));
    }
    std::vector<double> ok;
    for (const auto& s : res.steps) {
      if (s) {
        ok.push_back(static_cast<double>(*s));
      } else {
        ++res.failures;
      }
    }
    std::tie(res.mean, res.stddev) = mean_std(ok);
    results.push_back(std::move(res));
  }
  return results;
}

std::string nos_report_csv(const std::vector<NosResult>& results) {
  std::string out = "method,k,mean,std,failures\n";
  char buf[256];
  for (const auto& r : results) {
    std::snprintf(buf, sizeof buf, "%s,%zu,%.4f,%.4f,%zu\n", r.method.c_str(), r.instances.size(),
                  r.mean, r.stddev, r.failures);
    out += buf;
  }
  return out;
}

std::string nos_report_table(const std::vector<NosResult>& results) {
  std::string out;
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-24s %5s %18s %9s\n", "method", "k", "NoS (mean +- std)",
                "failures");
  out += buf;
  for (const auto& r : results) {
    std::snprintf(buf, sizeof buf, "%-24s %5zu %8.2f +- %-6.2f %9zu\n", r.method.c_str(),
                  r.instances.size(), r.mean, r.stddev, r.failures);
    out += buf;
  }
  return out;
}

std::map<std::size_t, Ranking> load_rankings(const std::filesystem::path& path,
                                             const std::string& name, std::size_t n_features) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open rankings " + path.string());
  std::map<std::size_t, Ranking> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      auto j = nlohmann::json::parse(line);
      Ranking r;
      r.provenance = "imported:" + name;
      const auto row = j.at("instance").get<std::size_t>();
      r.sets = j.at("order").get<std::vector<std::vector<std::size_t>>>();
      r.validate(n_features);
      if (!out.emplace(row, std::move(r)).second) {
        throw ParseError("instance " + std::to_string(row) + " listed twice");
      }
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    } catch (const Error& e) {
      throw ParseError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

std::vector<InstanceExplanation> explain_dataset(const Dataset& d, const Classifier& g,
                                                 const ActionSpace& space,
                                                 const EngineConfig& cfg) {
  std::vector<InstanceExplanation> out;
  out.reserve(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) {
    EngineConfig engine = cfg;
    engine.search.seed = derive_seed(cfg.search.seed, "explain/" + std::to_string(i));
    InstanceExplanation ex;
    try {
      ChainResult chain = chain_games(g, d.instances[i], d.labels[i], space, engine);
      if (chain.classification) {
        ex.classification_played = true;
        ex.classification_features = space.features_of(chain.classification_path);
      }
      ex.misclassification_played = true;
      try {
        const auto best = best_complete_path(chain.misclassification);
        ex.misclassification_features = space.features_of(best.actions);
      } catch (const NoCompletePathError&) {
        ex.incomplete = true;
      }
    } catch (const ChainError&) {
      ex.classification_played = true;
      ex.incomplete = true;
    }
    out.push_back(std::move(ex));
  }
  return out;
}

namespace {

Dataset mask_each(const Dataset& d, std::span<const InstanceExplanation> ex,
                  const MaskConfig& mask, bool include_classification) {
  if (ex.size() != d.size()) {
    throw ConfigError("got " + std::to_string(ex.size()) + " explanations for " +
                      std::to_string(d.size()) + " instances");
  }
  Dataset out = d;
  for (std::size_t i = 0; i < d.size(); ++i) {
    std::vector<std::size_t> features = ex[i].misclassification_features;
    if (include_classification) {
      features.insert(features.end(), ex[i].classification_features.begin(),
                      ex[i].classification_features.end());
    }
    out.instances[i] = mask_features(d.instances[i], features, mask);
  }
  return out;
}

}  // namespace

Dataset build_d_mis(const Dataset& d, std::span<const InstanceExplanation> ex,
                    const MaskConfig& mask) {
  return mask_each(d, ex, mask, false);
}

Dataset build_d_both(const Dataset& d, std::span<const InstanceExplanation> ex,
                     const MaskConfig& mask) {
  return mask_each(d, ex, mask, true);
}

Dataset concat(const Dataset& a, const Dataset& b) {
  if (a.n_features != b.n_features) throw DimensionError("datasets differ in feature count");
  Dataset out = a;
  out.n_classes = std::max(a.n_classes, b.n_classes);
  out.instances.insert(out.instances.end(), b.instances.begin(), b.instances.end());
  out.labels.insert(out.labels.end(), b.labels.begin(), b.labels.end());
  return out;
}

std::string_view retrain_variant_name(RetrainVariant v) {
  switch (v) {
    case RetrainVariant::Base:
      return "base";
    case RetrainVariant::Mis:
      return "mis";
    case RetrainVariant::Both:
      return "both";
  }
  return "unknown";
}

RetrainVariant parse_retrain_variant(std::string_view name) {
  if (name == "base") return RetrainVariant::Base;
  if (name == "mis") return RetrainVariant::Mis;
  if (name == "both") return RetrainVariant::Both;
  throw ConfigError("unknown retrain variant \"" + std::string(name) + "\"");
}

RetrainReport retrain_compare(const Dataset& train, const Dataset& test, const Dataset& d_mis,
                              const Dataset& d_both, const RetrainConfig& cfg) {
  if (cfg.repetitions < 1) throw ConfigError("repetitions must be at least 1");
  if (cfg.variants.empty()) throw ConfigError("no retrain variants requested");
  std::set<RetrainVariant> seen;
  for (auto v : cfg.variants) {
    if (!seen.insert(v).second) throw ConfigError("retrain variant listed twice");
  }

  RetrainReport report;
  report.repetitions = cfg.repetitions;
  for (RetrainVariant v : cfg.variants) {
    Dataset data = train;
    if (v == RetrainVariant::Mis) data = concat(train, d_mis);
    if (v == RetrainVariant::Both) data = concat(train, d_both);
    data.n_classes = std::max(data.n_classes, test.n_classes);

    RetrainRow row;
    row.variant = v;
    for (std::size_t rep = 0; rep < cfg.repetitions; ++rep) {
      TrainParams hp = cfg.train;
      // Same seed for every variant within a repetition.
      hp.seed = derive_seed(cfg.seed, "retrain/" + std::to_string(rep));
      try {
        auto model = train_reference(cfg.backend, data, hp);
        row.accuracies.push_back(100.0 * accuracy(*model, test));
      } catch (const TrainingDivergedError&) {
        ++row.diverged;
      }
    }
    std::tie(row.mean, row.stddev) = mean_std(row.accuracies);
    report.rows.push_back(std::move(row));
  }
  return report;
}

std::string retrain_report_csv(const RetrainReport& report) {
  std::string out = "variant,repetitions,mean,std,diverged\n";
  char buf[128];
  for (const auto& r : report.rows) {
    std::snprintf(buf, sizeof buf, "%s,%zu,%.4f,%.4f,%zu\n",
                  std::string(retrain_variant_name(r.variant)).c_str(), report.repetitions, r.mean,
                  r.stddev, r.diverged);
    out += buf;
  }
  return out;
}

}  // namespace mcxai
