#include "daud/detector.hpp"

#include "daud/jsonl.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace daud {
namespace {

constexpr double kClamp = 1e-12;

double clamp_prob(double p) { return std::min(std::max(p, kClamp), 1.0 - kClamp); }

// Objective for one instance, shared by training, FD checks, and fixtures:
// bce + lambda_dom * mean domain cross-entropy, later scaled by 1/batch.
Var instance_loss(Tape& tape, DsraModel& model, const ForwardResult& fwd,
                  const NewsBundle& bundle, double bce_weight) {
  Tensor target(1, 1);
  target.at(0, 0) = bundle.label;
  Var loss = tape.bce_mean(fwd.prob, target);
  if (bce_weight != 1.0) loss = tape.scale(loss, bce_weight);
  double lambda = model.config().lambda_dom;
  if (!fwd.domain_logits.empty() && lambda > 0) {
    Var logits = fwd.domain_logits.size() == 1 ? fwd.domain_logits[0]
                                               : tape.concat_rows(fwd.domain_logits);
    std::vector<int> labels(fwd.domain_logits.size(), bundle.domain_index);
    Var dom = tape.softmax_ce_mean(logits, labels);
    loss = tape.add(loss, tape.scale(dom, lambda));
  }
  return loss;
}

double batch_loss_value(DsraModel& model, const std::vector<NewsBundle>& batch,
                        double grl_factor) {
  double total = 0;
  for (const auto& bundle : batch) {
    Tape tape(0);
    ForwardResult fwd = model.forward(tape, bundle, /*training=*/false, grl_factor);
    Var loss = instance_loss(tape, model, fwd, bundle, 1.0);
    total += tape.value(loss).scalar();
  }
  return total / static_cast<double>(batch.size());
}

}  // namespace

void TrainConfig::validate() const {
  if (learning_rate <= 0) throw_config("InvalidTrainConfig", "learning_rate must be > 0");
  if (warmup_fraction < 0 || warmup_fraction >= 1)
    throw_config("InvalidTrainConfig", "warmup_fraction must be in [0, 1)");
  if (batch_size <= 0) throw_config("InvalidTrainConfig", "batch_size must be > 0");
  if (epochs <= 0) throw_config("InvalidTrainConfig", "epochs must be > 0");
  if (dropout < 0 || dropout >= 1) throw_config("InvalidTrainConfig", "dropout must be in [0, 1)");
  if (weight_decay < 0) throw_config("InvalidTrainConfig", "weight_decay must be >= 0");
  if (early_stop_patience <= 0)
    throw_config("InvalidTrainConfig", "early_stop_patience must be > 0");
  if (seeds.empty()) throw_config("InvalidTrainConfig", "seed list must not be empty");
}

json TrainConfig::to_json() const {
  return json{{"learning_rate", learning_rate},
              {"warmup_fraction", warmup_fraction},
              {"batch_size", batch_size},
              {"epochs", epochs},
              {"dropout", dropout},
              {"weight_decay", weight_decay},
              {"early_stop_patience", early_stop_patience},
              {"class_weighting", class_weighting},
              {"seeds", seeds}};
}

TrainConfig TrainConfig::from_json(const json& j) {
  TrainConfig c;
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.warmup_fraction = j.value("warmup_fraction", c.warmup_fraction);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.epochs = j.value("epochs", c.epochs);
  c.dropout = j.value("dropout", c.dropout);
  c.weight_decay = j.value("weight_decay", c.weight_decay);
  c.early_stop_patience = j.value("early_stop_patience", c.early_stop_patience);
  c.class_weighting = j.value("class_weighting", c.class_weighting);
  c.seeds = j.value("seeds", c.seeds);
  return c;
}

double predict_proba(const Tensor& z_n, const Tensor& z_u, const Tensor& w, double b) {
  if (z_n.rows() != 1 || z_u.rows() != 1 || w.cols() != 1 ||
      w.rows() != z_n.cols() + z_u.cols())
    throw_invariant("DimensionMismatch", "head expects 1x" + std::to_string(w.rows()) +
                                             " input, got " + z_n.shape_string() + " and " +
                                             z_u.shape_string());
  double acc = b;
  for (size_t j = 0; j < z_n.cols(); ++j) acc += z_n.at(0, j) * w.at(j, 0);
  for (size_t j = 0; j < z_u.cols(); ++j) acc += z_u.at(0, j) * w.at(z_n.cols() + j, 0);
  return 1.0 / (1.0 + std::exp(-acc));
}

double detection_loss(double y_hat, double y) {
  double p = clamp_prob(y_hat);
  return -(y * std::log(p) + (1.0 - y) * std::log(1.0 - p));
}

double mean_detection_loss(const std::vector<std::pair<double, double>>& yhat_y) {
  if (yhat_y.empty()) throw_data("EmptyInput", "no samples for the detection loss");
  double total = 0;
  for (const auto& [y_hat, y] : yhat_y) total += detection_loss(y_hat, y);
  return total / static_cast<double>(yhat_y.size());
}

double total_loss_value(const std::vector<std::pair<double, double>>& yhat_y,
                        const Tensor& domain_logits, const std::vector<int>& domain_labels,
                        double lambda_dom) {
  double total = mean_detection_loss(yhat_y);
  if (domain_logits.rows() == 0 || lambda_dom == 0) return total;
  if (domain_logits.rows() != domain_labels.size())
    throw_data("LengthMismatch", std::to_string(domain_labels.size()) + " domain labels for " +
                                     domain_logits.shape_string() + " logits");
  double ce = 0;
  for (size_t i = 0; i < domain_logits.rows(); ++i) {
    double mx = domain_logits.at(i, 0);
    for (size_t j = 1; j < domain_logits.cols(); ++j) mx = std::max(mx, domain_logits.at(i, j));
    double sum = 0;
    for (size_t j = 0; j < domain_logits.cols(); ++j)
      sum += std::exp(domain_logits.at(i, j) - mx);
    int label = domain_labels[i];
    if (label < 0 || static_cast<size_t>(label) >= domain_logits.cols())
      throw_data("LabelOutOfRange", "domain label " + std::to_string(label));
    ce += -(domain_logits.at(i, static_cast<size_t>(label)) - mx - std::log(sum));
  }
  return total + lambda_dom * ce / static_cast<double>(domain_logits.rows());
}

json epoch_record_to_json(const EpochRecord& r) {
  return json{{"epoch", r.epoch},
              {"train_loss", r.train_loss},
              {"learning_rate", r.learning_rate},
              {"val", metrics_to_json(r.val)}};
}

TrainResult train_model(DsraModel& model, const std::vector<NewsBundle>& train,
                        const std::vector<NewsBundle>& val, const TrainConfig& config,
                        uint64_t seed, const std::optional<std::filesystem::path>& dump_dir) {
  config.validate();
  if (train.empty()) throw_data("EmptyInput", "no training bundles");
  if (val.empty()) throw_data("EmptyInput", "no validation bundles");

  double pos_weight = 1.0, neg_weight = 1.0;
  if (config.class_weighting) {
    double n_pos = 0;
    for (const auto& b : train) n_pos += b.label;
    double n_neg = static_cast<double>(train.size()) - n_pos;
    if (n_pos > 0 && n_neg > 0) {
      pos_weight = static_cast<double>(train.size()) / (2.0 * n_pos);
      neg_weight = static_cast<double>(train.size()) / (2.0 * n_neg);
    }
  }

  size_t n = train.size();
  size_t batch_size = static_cast<size_t>(config.batch_size);
  size_t steps_per_epoch = (n + batch_size - 1) / batch_size;
  size_t total_steps = steps_per_epoch * static_cast<size_t>(config.epochs);
  size_t warmup_steps =
      static_cast<size_t>(std::floor(config.warmup_fraction * static_cast<double>(total_steps)));
  auto rate_at = [&](size_t step) {
    if (warmup_steps == 0 || step >= warmup_steps) return config.learning_rate;
    return config.learning_rate * static_cast<double>(step + 1) /
           static_cast<double>(warmup_steps);
  };

  std::mt19937_64 rng(seed);
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), 0);

  TrainResult result;
  result.best_score = -1.0;
  int stale_epochs = 0;
  size_t step = 0;

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    for (size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng() % i]);

    double epoch_loss = 0;
    double last_rate = rate_at(step > 0 ? step - 1 : 0);
    for (size_t begin = 0; begin < n; begin += batch_size) {
      size_t end = std::min(begin + batch_size, n);
      double inv_batch = 1.0 / static_cast<double>(end - begin);
      model.params().zero_grads();
      for (size_t i = begin; i < end; ++i) {
        const NewsBundle& bundle = train[order[i]];
        Tape tape(rng());
        ForwardResult fwd = model.forward(tape, bundle, /*training=*/true, -1.0);
        double weight = bundle.label > 0.5 ? pos_weight : neg_weight;
        Var loss = instance_loss(tape, model, fwd, bundle, weight);
        double loss_value = tape.value(loss).scalar();
        if (!std::isfinite(loss_value)) {
          if (dump_dir) {
            std::filesystem::create_directories(*dump_dir);
            write_file(*dump_dir / "nonfinite_state.json", model.checkpoint_json().dump(2));
          }
          throw_invariant("NonFiniteLoss", "loss is not finite at epoch " +
                                               std::to_string(epoch) + ", step " +
                                               std::to_string(step) + ", news " + bundle.news_id);
        }
        epoch_loss += loss_value;
        tape.backward(tape.scale(loss, inv_batch));
      }
      last_rate = rate_at(step);
      AdamWConfig opt;
      opt.lr = last_rate;
      opt.weight_decay = config.weight_decay;
      model.params().adamw_step(opt);
      ++step;
    }

    EpochRecord record;
    record.epoch = epoch;
    record.train_loss = epoch_loss / static_cast<double>(n);
    record.learning_rate = last_rate;

    std::vector<int> val_labels;
    std::vector<double> val_scores = predict_batch(model, val);
    for (const auto& b : val) val_labels.push_back(b.label > 0.5 ? 1 : 0);
    record.val = compute_metrics(val_labels, val_scores);
    result.history.push_back(record);

    double score = record.val.auc ? *record.val.auc : record.val.accuracy;
    if (score > result.best_score) {
      result.best_score = score;
      result.best_epoch = epoch;
      result.best_checkpoint = model.checkpoint_json();
      stale_epochs = 0;
    } else {
      stale_epochs += 1;
      if (stale_epochs >= config.early_stop_patience) break;
    }
  }

  model.load_checkpoint(result.best_checkpoint);
  return result;
}

std::vector<double> predict_batch(DsraModel& model, const std::vector<NewsBundle>& bundles) {
  std::vector<double> probs;
  probs.reserve(bundles.size());
  for (const auto& bundle : bundles) {
    Tape tape(0);
    ForwardResult fwd = model.forward(tape, bundle, /*training=*/false);
    probs.push_back(tape.value(fwd.prob).scalar());
  }
  return probs;
}

double gradient_check(DsraModel& model, const std::vector<NewsBundle>& batch, double eps) {
  if (eps <= 0) throw_config("InvalidEpsilon", "finite-difference epsilon must be > 0");
  if (batch.empty()) throw_data("EmptyInput", "no bundles to check against");

  double inv_batch = 1.0 / static_cast<double>(batch.size());
  model.params().zero_grads();
  for (const auto& bundle : batch) {
    Tape tape(0);
    ForwardResult fwd = model.forward(tape, bundle, /*training=*/false, /*grl_factor=*/1.0);
    Var loss = instance_loss(tape, model, fwd, bundle, 1.0);
    tape.backward(tape.scale(loss, inv_batch));
  }

  double max_rel = 0;
  for (auto& param : model.params().all()) {
    for (size_t i = 0; i < param.value.size(); ++i) {
      double saved = param.value.raw()[i];
      param.value.raw()[i] = saved + eps;
      double up = batch_loss_value(model, batch, 1.0);
      param.value.raw()[i] = saved - eps;
      double down = batch_loss_value(model, batch, 1.0);
      param.value.raw()[i] = saved;
      double fd = (up - down) / (2.0 * eps);
      double analytic = param.grad.raw()[i];
      double rel = std::fabs(analytic - fd) /
                   std::max(std::fabs(analytic) + std::fabs(fd), 1e-6);
      max_rel = std::max(max_rel, rel);
    }
  }
  return max_rel;
}

}  // namespace daud
