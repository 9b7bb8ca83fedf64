#include "dblp/metrics.hpp"

#include <charconv>

#include "dblp/errors.hpp"

namespace dblp {
namespace {

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

}  // namespace

ConfusionMatrix::ConfusionMatrix(std::size_t num_labels)
    : m_(num_labels), counts_(num_labels * num_labels, 0) {}

std::uint64_t ConfusionMatrix::at(std::size_t truth, std::size_t predicted) const {
  if (truth >= m_ || predicted >= m_) throw LookupError("confusion matrix index out of range");
  return counts_[truth * m_ + predicted];
}

void ConfusionMatrix::add(std::size_t truth, std::size_t predicted, std::uint64_t count) {
  if (truth >= m_ || predicted >= m_) {
    throw LookupError("label out of range: (" + std::to_string(truth) + ", " +
                      std::to_string(predicted) + ") with " + std::to_string(m_) + " labels");
  }
  counts_[truth * m_ + predicted] += count;
}

std::uint64_t ConfusionMatrix::total() const {
  std::uint64_t t = 0;
  for (auto c : counts_) t += c;
  return t;
}

std::uint64_t ConfusionMatrix::support(std::size_t label) const {
  std::uint64_t s = 0;
  for (std::size_t p = 0; p < m_; ++p) s += at(label, p);
  return s;
}

std::uint64_t ConfusionMatrix::predicted(std::size_t label) const {
  std::uint64_t s = 0;
  for (std::size_t t = 0; t < m_; ++t) s += at(t, label);
  return s;
}

ConfusionMatrix confusion(std::span<const std::size_t> y_true, std::span<const std::size_t> y_pred,
                          std::size_t num_labels) {
  if (y_true.size() != y_pred.size()) {
    throw DimensionError("confusion: " + std::to_string(y_true.size()) + " true labels vs " +
                         std::to_string(y_pred.size()) + " predictions");
  }
  ConfusionMatrix cm(num_labels);
  for (std::size_t i = 0; i < y_true.size(); ++i) cm.add(y_true[i], y_pred[i]);
  return cm;
}

std::vector<ClassPR> per_class_pr(const ConfusionMatrix& cm) {
  std::vector<ClassPR> out(cm.num_labels());
  for (std::size_t l = 0; l < cm.num_labels(); ++l) {
    const double tp = static_cast<double>(cm.true_positives(l));
    const auto predicted = cm.predicted(l);
    const auto support = cm.support(l);
    out[l].precision = predicted == 0 ? 0.0 : tp / static_cast<double>(predicted);
    out[l].recall = support == 0 ? 0.0 : tp / static_cast<double>(support);
  }
  return out;
}

double f_beta(double precision, double recall, double beta) {
  if (!(beta > 0.0)) throw ContractError("f_beta: beta must be positive");
  const double b2 = beta * beta;
  const double denom = b2 * precision + recall;
  if (denom == 0.0) return 0.0;
  return (1.0 + b2) * precision * recall / denom;
}

MetricsReport weighted_metrics(const ConfusionMatrix& cm, double beta) {
  const std::uint64_t total = cm.total();
  if (total == 0) throw DataError("weighted_metrics: no samples");
  MetricsReport report;
  report.samples = total;
  const auto pr = per_class_pr(cm);
  std::uint64_t correct = 0;
  double wp = 0.0, wr = 0.0, wf = 0.0;
  for (std::size_t l = 0; l < cm.num_labels(); ++l) {
    ClassMetrics c;
    c.precision = pr[l].precision;
    c.recall = pr[l].recall;
    c.f = f_beta(c.precision, c.recall, beta);
    c.support = cm.support(l);
    const double w = static_cast<double>(c.support);
    wp += w * c.precision;
    wr += w * c.recall;
    wf += w * c.f;
    correct += cm.true_positives(l);
    report.per_class.push_back(c);
  }
  const double n = static_cast<double>(total);
  report.precision_weighted = wp / n;
  report.recall_weighted = wr / n;
  report.f_weighted = wf / n;
  report.accuracy = static_cast<double>(correct) / n;
  return report;
}

nlohmann::json MetricsReport::to_json() const {
  nlohmann::json j;
  j["precision_weighted"] = precision_weighted;
  j["recall_weighted"] = recall_weighted;
  j["f1_weighted"] = f_weighted;
  j["accuracy"] = accuracy;
  j["samples"] = samples;
  nlohmann::json classes = nlohmann::json::object();
  for (std::size_t l = 0; l < per_class.size(); ++l) {
    classes[std::to_string(l)] = {{"p", per_class[l].precision},
                                  {"r", per_class[l].recall},
                                  {"f", per_class[l].f},
                                  {"support", per_class[l].support}};
  }
  j["per_class"] = std::move(classes);
  return j;
}

MetricsReport MetricsReport::from_json(const nlohmann::json& j) {
  try {
    MetricsReport r;
    r.precision_weighted = j.at("precision_weighted").get<double>();
    r.recall_weighted = j.at("recall_weighted").get<double>();
    r.f_weighted = j.at("f1_weighted").get<double>();
    r.accuracy = j.at("accuracy").get<double>();
    r.samples = j.at("samples").get<std::uint64_t>();
    const auto& classes = j.at("per_class");
    r.per_class.resize(classes.size());
    for (std::size_t l = 0; l < classes.size(); ++l) {
      const auto& c = classes.at(std::to_string(l));
      r.per_class[l] = ClassMetrics{c.at("p").get<double>(), c.at("r").get<double>(),
                                    c.at("f").get<double>(), c.at("support").get<std::uint64_t>()};
    }
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("metrics report: ") + e.what());
  }
}

std::string MetricsReport::to_key_value() const {
  std::string out;
  auto line = [&](const std::string& key, const std::string& value) {
    out += key + "=" + value + "\n";
  };
  line("precision_weighted", format_double(precision_weighted));
  line("recall_weighted", format_double(recall_weighted));
  line("f1_weighted", format_double(f_weighted));
  line("accuracy", format_double(accuracy));
  line("samples", std::to_string(samples));
  for (std::size_t l = 0; l < per_class.size(); ++l) {
    const std::string pre = "per_class." + std::to_string(l) + ".";
    line(pre + "p", format_double(per_class[l].precision));
    line(pre + "r", format_double(per_class[l].recall));
    line(pre + "f", format_double(per_class[l].f));
    line(pre + "support", std::to_string(per_class[l].support));
  }
  return out;
}

}  // namespace dblp
