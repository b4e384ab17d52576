#include "daud/metrics.hpp"

#include "daud/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace daud {
namespace {

double safe_div(double num, double den) { return den > 0 ? num / den : 0.0; }

// Midrank-based Mann-Whitney statistic; equal scores share the average of the
// ranks they occupy, which charges tied positive-negative pairs one half.
double rank_auc(const std::vector<int>& y_true, const std::vector<double>& scores, size_t n_pos,
                size_t n_neg) {
  size_t n = scores.size();
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](size_t a, size_t b) { return scores[a] < scores[b]; });
  std::vector<double> rank(n);
  size_t i = 0;
  while (i < n) {
    size_t j = i;
    while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
    double mid = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
    for (size_t k = i; k <= j; ++k) rank[order[k]] = mid;
    i = j + 1;
  }
  double pos_rank_sum = 0;
  for (size_t k = 0; k < n; ++k)
    if (y_true[k] == 1) pos_rank_sum += rank[k];
  double np = static_cast<double>(n_pos);
  double nn = static_cast<double>(n_neg);
  return (pos_rank_sum - np * (np + 1) / 2.0) / (np * nn);
}

}  // namespace

Metrics compute_metrics(const std::vector<int>& y_true, const std::vector<double>& scores,
                        double threshold) {
  if (y_true.empty()) throw_data("EmptyInput", "no labels to score");
  if (y_true.size() != scores.size())
    throw_data("LengthMismatch", std::to_string(y_true.size()) + " labels vs " +
                                     std::to_string(scores.size()) + " scores");
  size_t tp = 0, fp = 0, tn = 0, fn = 0;
  for (size_t i = 0; i < y_true.size(); ++i) {
    bool predicted = scores[i] >= threshold;
    bool actual = y_true[i] == 1;
    if (predicted && actual) ++tp;
    else if (predicted && !actual) ++fp;
    else if (!predicted && actual) ++fn;
    else ++tn;
  }
  Metrics m;
  m.threshold = threshold;
  m.n_pos = tp + fn;
  m.n_neg = fp + tn;
  m.precision = safe_div(static_cast<double>(tp), static_cast<double>(tp + fp));
  m.recall = safe_div(static_cast<double>(tp), static_cast<double>(tp + fn));
  m.f1 = (m.precision + m.recall) > 0
             ? 2.0 * m.precision * m.recall / (m.precision + m.recall)
             : 0.0;
  m.accuracy = static_cast<double>(tp + tn) / static_cast<double>(y_true.size());
  if (m.n_pos > 0 && m.n_neg > 0) m.auc = rank_auc(y_true, scores, m.n_pos, m.n_neg);
  return m;
}

MetricsSummary aggregate_runs(const std::vector<Metrics>& runs) {
  if (runs.empty()) throw_data("EmptyInput", "no runs to aggregate");
  auto mean_std = [&](auto getter) -> std::pair<double, double> {
    double mean = 0;
    for (const auto& r : runs) mean += getter(r);
    mean /= static_cast<double>(runs.size());
    double var = 0;
    for (const auto& r : runs) {
      double d = getter(r) - mean;
      var += d * d;
    }
    double std_dev = runs.size() > 1 ? std::sqrt(var / static_cast<double>(runs.size() - 1)) : 0.0;
    return {mean, std_dev};
  };

  MetricsSummary s;
  s.runs = runs.size();
  std::tie(s.mean.precision, s.std.precision) =
      mean_std([](const Metrics& m) { return m.precision; });
  std::tie(s.mean.recall, s.std.recall) = mean_std([](const Metrics& m) { return m.recall; });
  std::tie(s.mean.f1, s.std.f1) = mean_std([](const Metrics& m) { return m.f1; });
  std::tie(s.mean.accuracy, s.std.accuracy) =
      mean_std([](const Metrics& m) { return m.accuracy; });
  s.mean.threshold = runs.front().threshold;
  s.std.threshold = 0;

  std::vector<double> aucs;
  for (const auto& r : runs)
    if (r.auc) aucs.push_back(*r.auc);
  if (!aucs.empty()) {
    double mean = 0;
    for (double a : aucs) mean += a;
    mean /= static_cast<double>(aucs.size());
    double var = 0;
    for (double a : aucs) var += (a - mean) * (a - mean);
    s.mean.auc = mean;
    s.std.auc = aucs.size() > 1 ? std::sqrt(var / static_cast<double>(aucs.size() - 1)) : 0.0;
  }
  return s;
}

json metrics_to_json(const Metrics& m) {
  json j{{"precision", m.precision}, {"recall", m.recall},     {"f1", m.f1},
         {"accuracy", m.accuracy},   {"n_pos", m.n_pos},       {"n_neg", m.n_neg},
         {"threshold", m.threshold}};
  j["auc"] = m.auc ? json(*m.auc) : json(nullptr);
  return j;
}

Metrics metrics_from_json(const json& j) {
  Metrics m;
  m.precision = j.at("precision").get<double>();
  m.recall = j.at("recall").get<double>();
  m.f1 = j.at("f1").get<double>();
  m.accuracy = j.at("accuracy").get<double>();
  if (!j.at("auc").is_null()) m.auc = j.at("auc").get<double>();
  m.n_pos = j.at("n_pos").get<size_t>();
  m.n_neg = j.at("n_neg").get<size_t>();
  m.threshold = j.at("threshold").get<double>();
  return m;
}

}  // namespace daud
