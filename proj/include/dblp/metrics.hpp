#pragma once

// Confusion matrix and support-weighted precision, recall and F-beta.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

namespace dblp {

/// m×m counts; entry (t, p) is the number of samples with true label t
/// predicted as p.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(std::size_t num_labels = 0);

  std::size_t num_labels() const { return m_; }
  std::uint64_t at(std::size_t truth, std::size_t predicted) const;
  void add(std::size_t truth, std::size_t predicted, std::uint64_t count = 1);

  std::uint64_t total() const;
  std::uint64_t true_positives(std::size_t label) const { return at(label, label); }
  /// Row sum: samples whose true label is `label`.
  std::uint64_t support(std::size_t label) const;
  /// Column sum: samples predicted as `label`.
  std::uint64_t predicted(std::size_t label) const;

  bool operator==(const ConfusionMatrix&) const = default;

 private:
  std::size_t m_;
  std::vector<std::uint64_t> counts_;
};

ConfusionMatrix confusion(std::span<const std::size_t> y_true, std::span<const std::size_t> y_pred,
                          std::size_t num_labels);

struct ClassPR {
  double precision = 0.0;
  double recall = 0.0;
};

/// P_l = TP_l / predicted_l and R_l = TP_l / support_l, each 0 when its
/// denominator is 0.
std::vector<ClassPR> per_class_pr(const ConfusionMatrix& cm);

/// (1 + β²)·P·R / (β²·P + R); 0 when the denominator vanishes.
double f_beta(double precision, double recall, double beta = 1.0);

struct ClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f = 0.0;
  std::uint64_t support = 0;

  bool operator==(const ClassMetrics&) const = default;
};

struct MetricsReport {
  std::vector<ClassMetrics> per_class;
  double precision_weighted = 0.0;
  double recall_weighted = 0.0;
  double f_weighted = 0.0;
  double accuracy = 0.0;
  std::uint64_t samples = 0;

  /// Keys: precision_weighted, recall_weighted, f1_weighted, accuracy,
  /// samples, per_class.<id>.{p, r, f, support}.
  nlohmann::json to_json() const;
  static MetricsReport from_json(const nlohmann::json& j);
  /// Flat "key=value" lines using the same key names, dotted.
  std::string to_key_value() const;

  bool operator==(const MetricsReport&) const = default;
};

/// Support-weighted averages of per-class precision, recall and F-beta,
/// plus accuracy. Throws DataError on an empty matrix.
MetricsReport weighted_metrics(const ConfusionMatrix& cm, double beta = 1.0);

}  // namespace dblp
