#pragma once

#include "daud/dsra.hpp"
#include "daud/metrics.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

namespace daud {

struct TrainConfig {
  double learning_rate = 1e-4;
  double warmup_fraction = 0.10;  // linear ramp over this share of total steps
  int batch_size = 32;
  int epochs = 100;
  double dropout = 0.1;
  double weight_decay = 0.01;
  int early_stop_patience = 10;   // epochs without val improvement
  bool class_weighting = false;   // per-class detection-loss weights
  std::vector<uint64_t> seeds = {1, 2, 3, 4, 5};

  void validate() const;
  json to_json() const;
  static TrainConfig from_json(const json& j);
};

// Standalone head arithmetic for fixtures: sigmoid(concat(z_n, z_u) * w + b).
double predict_proba(const Tensor& z_n, const Tensor& z_u, const Tensor& w, double b);

// Single-sample binary cross-entropy, probability clamped 1e-12 from both
// boundaries; batch loss is the mean.
double detection_loss(double y_hat, double y);
double mean_detection_loss(const std::vector<std::pair<double, double>>& yhat_y);

// Detection mean plus lambda_dom times the mean cross-entropy of the domain
// logit rows against their labels (the trainer's objective, tape-free).
double total_loss_value(const std::vector<std::pair<double, double>>& yhat_y,
                        const Tensor& domain_logits, const std::vector<int>& domain_labels,
                        double lambda_dom);

struct EpochRecord {
  int epoch = 0;  // 1-based
  double train_loss = 0;
  double learning_rate = 0;  // last step's rate this epoch
  Metrics val;
};

json epoch_record_to_json(const EpochRecord& r);

struct TrainResult {
  std::vector<EpochRecord> history;
  int best_epoch = 0;
  double best_score = 0;  // val AUC, or val accuracy when AUC is undefined
  json best_checkpoint;
};

// Full loop: shuffled minibatches, linear warmup then constant rate, AdamW,
// early stop on val AUC (accuracy fallback for a single-class val fold),
// best-checkpoint restore into the model. Deterministic for a fixed seed.
// Throws NonFiniteLoss, dumping the state into dump_dir when provided.
TrainResult train_model(DsraModel& model, const std::vector<NewsBundle>& train,
                        const std::vector<NewsBundle>& val, const TrainConfig& config,
                        uint64_t seed,
                        const std::optional<std::filesystem::path>& dump_dir = std::nullopt);

// Eval-mode fake probabilities, one per bundle.
std::vector<double> predict_batch(DsraModel& model, const std::vector<NewsBundle>& bundles);

// Max relative error between analytic gradients and central finite
// differences over every parameter value, on the training objective with
// dropout off and the gradient-reversal factor set to +1 (reversal makes the
// analytic gradient differ from the loss gradient by construction).
double gradient_check(DsraModel& model, const std::vector<NewsBundle>& batch, double eps);

}  // namespace daud
