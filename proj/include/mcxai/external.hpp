#pragma once

#include <cstdint>
#include <memory>
#include <string>

#include "mcxai/classifier.hpp"

namespace mcxai {

// Child process speaking newline-delimited JSON over its stdin/stdout.
class AdapterProcess;

// Classifier backed by an external adapter process. The constructor launches
// `command` through /bin/sh and performs the info handshake; the announced
// shape is enforced on every later request. One request is in flight at a
// time, so concurrent callers need separate instances.
class ExternalClassifier final : public Classifier {
 public:
  explicit ExternalClassifier(const std::string& command);
  ~ExternalClassifier() override;

  ExternalClassifier(const ExternalClassifier&) = delete;
  ExternalClassifier& operator=(const ExternalClassifier&) = delete;

  std::size_t n_features() const override { return n_features_; }
  std::size_t n_classes() const override { return n_classes_; }
  Backend backend() const override { return Backend::External; }
  std::vector<ClassDistribution> predict_proba(std::span<const FeatureVector> xs) const override;

  // Sends shutdown and reaps the child. Called by the destructor if needed.
  void shutdown();

 private:
  std::unique_ptr<AdapterProcess> proc_;
  std::size_t n_features_ = 0;
  std::size_t n_classes_ = 0;
  mutable std::uint64_t next_id_ = 1;
};

// Repairs small drift (|sum - 1| <= 1e-3) by renormalizing; rejects anything
// further off, or entries outside [0, 1], with ProtocolError.
ClassDistribution normalize_external_distribution(std::vector<double> probs);

}  // namespace mcxai
