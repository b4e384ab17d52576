#pragma once

#include "daud/jsonl.hpp"

#include <optional>
#include <vector>

namespace daud {

struct Metrics {
  double precision = 0;
  double recall = 0;
  double f1 = 0;
  double accuracy = 0;
  std::optional<double> auc;  // absent when the fold has a single class
  size_t n_pos = 0;
  size_t n_neg = 0;
  double threshold = 0.5;
};

// Positive class is Fake (label 1); predictions are score >= threshold. AUC is
// the rank-based probability that a random positive outscores a random
// negative, ties counted one half.
Metrics compute_metrics(const std::vector<int>& y_true, const std::vector<double>& scores,
                        double threshold = 0.5);

struct MetricsSummary {
  Metrics mean;
  Metrics std;  // sample standard deviation, 0 for a single run
  size_t runs = 0;
};

// Mean and sample std per field. AUC aggregates over the runs where it is
// defined and stays absent only when undefined for all of them.
MetricsSummary aggregate_runs(const std::vector<Metrics>& runs);

json metrics_to_json(const Metrics& m);
Metrics metrics_from_json(const json& j);

}  // namespace daud
