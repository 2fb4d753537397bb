#include "ntua/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <string>

#include "json.hpp"
#include "ntua/cache.hpp"
#include "ntua/rng.hpp"

namespace ntua {

void TrainConfig::validate() const {
  if (epochs < 1) throw ValidationError("epochs must be at least 1");
  if (batch_size < 1) throw ValidationError("batch size must be at least 1");
  if (!(base_lr >= 0.0)) throw ValidationError("learning rate must be nonnegative");
  if (!(beta1 >= 0.0 && beta1 < 1.0)) throw ValidationError("beta1 must lie in [0, 1)");
  if (!(beta2 >= 0.0 && beta2 < 1.0)) throw ValidationError("beta2 must lie in [0, 1)");
  if (!(eps > 0.0)) throw ValidationError("eps must be positive");
  if (!(weight_decay >= 0.0)) throw ValidationError("weight decay must be nonnegative");
  if (!(logit_scale > 0.0)) throw ValidationError("logit scale must be positive");
}

double weighted_ce_loss(const MatrixD& logits, std::span<const std::uint32_t> labels,
                        std::span<const double> omega) {
  if (labels.size() != logits.rows || omega.size() != logits.rows) {
    throw ValidationError("loss inputs disagree on row count");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < logits.rows; ++i) {
    const auto row = logits.row(i);
    double hi = -std::numeric_limits<double>::infinity();
    for (double v : row) {
      if (!std::isfinite(v)) throw ValidationError("non-finite logit in loss input");
      hi = std::max(hi, v);
    }
    double sum = 0.0;
    for (double v : row) sum += std::exp(v - hi);
    const double log_prob = row[labels[i]] - hi - std::log(sum);
    total += omega[i] * (-log_prob);
  }
  return total / static_cast<double>(logits.rows);
}

MatrixD training_logits(const WeightedCache& cache, const MatrixD& queries,
                        const ClassifierWeights& w, bool use_weights, double logit_scale) {
  MatrixD logits(queries.rows, cache.num_classes);
  for (std::size_t i = 0; i < queries.rows; ++i) {
    const auto z = adapter_logits(queries.row(i), cache, w, use_weights);
    auto out = logits.row(i);
    for (std::size_t c = 0; c < cache.num_classes; ++c) out[c] = logit_scale * z[c];
  }
  return logits;
}

MatrixD loss_grad_keys(const WeightedCache& cache, const MatrixD& queries,
                       std::span<const std::uint32_t> targets, std::span<const double> omega,
                       const ClassifierWeights& w, bool use_weights, double logit_scale) {
  const std::size_t b = queries.rows;
  if (targets.size() != b || omega.size() != b) {
    throw ValidationError("gradient inputs disagree on batch size");
  }
  const MatrixD logits = training_logits(cache, queries, w, use_weights, logit_scale);

  MatrixD grad(cache.rows(), cache.dim);
  std::vector<double> probs(cache.num_classes);
  for (std::size_t i = 0; i < b; ++i) {
    const auto row = logits.row(i);
    double hi = -std::numeric_limits<double>::infinity();
    for (double v : row) hi = std::max(hi, v);
    double sum = 0.0;
    for (std::size_t c = 0; c < cache.num_classes; ++c) {
      probs[c] = std::exp(row[c] - hi);
      sum += probs[c];
    }
    for (auto& p : probs) p /= sum;

    const auto q = queries.row(i);
    // d loss_i / d key_j = (p[v_j] - [v_j == target]) * scale * alpha
    //                      * weight_j * beta * phi(q . key_j) * q
    for (std::size_t j = 0; j < cache.rows(); ++j) {
      const auto key = cache.keys.row(j);
      double sim = 0.0;
      for (std::size_t d = 0; d < cache.dim; ++d) sim += q[d] * key[d];
      double coef = probs[cache.values[j]] - (cache.values[j] == targets[i] ? 1.0 : 0.0);
      coef *= omega[i] * logit_scale * cache.alpha * cache.beta * phi(sim, cache.beta);
      if (use_weights) coef *= static_cast<double>(cache.weights[j]);
      coef /= static_cast<double>(b);
      auto g = grad.row(j);
      for (std::size_t d = 0; d < cache.dim; ++d) g[d] += coef * q[d];
    }
  }
  return grad;
}

double cosine_lr(std::size_t step, std::size_t total_steps, double base_lr) {
  if (total_steps < 1) throw ValidationError("total steps must be at least 1");
  if (step > total_steps) throw ValidationError("schedule step beyond total");
  const double frac = static_cast<double>(step) / static_cast<double>(total_steps);
  return base_lr * 0.5 * (1.0 + std::cos(std::numbers::pi * frac));
}

void adamw_step(MatrixD& params, const MatrixD& grads, AdamWState& state, double lr,
                double beta1, double beta2, double eps, double weight_decay) {
  if (grads.rows != params.rows || grads.cols != params.cols) {
    throw ValidationError("gradient shape does not match parameters");
  }
  if (state.step == 0) {
    state.m = MatrixD(params.rows, params.cols);
    state.v = MatrixD(params.rows, params.cols);
  }
  state.step += 1;
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.data.size(); ++i) {
    const double g = grads.data[i];
    state.m.data[i] = beta1 * state.m.data[i] + (1.0 - beta1) * g;
    state.v.data[i] = beta2 * state.v.data[i] + (1.0 - beta2) * g * g;
    const double m_hat = state.m.data[i] / bc1;
    const double v_hat = state.v.data[i] / bc2;
    params.data[i] -= lr * weight_decay * params.data[i];
    params.data[i] -= lr * m_hat / (std::sqrt(v_hat) + eps);
  }
}

std::pair<WeightedCache, TrainReport> train_keys(const WeightedCache& cache,
                                                 const EmbeddingSet& train_features,
                                                 std::span<const std::uint32_t> targets,
                                                 const AffinityWeights& omega,
                                                 const ClassifierWeights& w,
                                                 const TrainConfig& cfg) {
  cfg.validate();
  const std::size_t n = cache.rows();
  if (targets.size() != n) {
    throw ValidationError("expected one target label per cache row");
  }
  if (cfg.include_omega && omega.rows() != n) {
    throw ValidationError("expected one omega weight per cache row");
  }
  for (std::uint32_t t : targets) {
    if (t >= cache.num_classes) throw ValidationError("target label out of range");
  }

  // Queries are fixed for the whole run: the sample feature behind each row,
  // or the classifier row for fallback entries (their original key, which
  // stays valid even if the stored key has already been trained).
  MatrixD queries(n, cache.dim);
  for (std::size_t r = 0; r < n; ++r) {
    std::span<const float> src;
    if (cache.is_fallback(r)) {
      src = w.matrix.row(cache.values[r]);
    } else {
      const auto idx = static_cast<std::uint64_t>(cache.sources[r]);
      if (idx >= train_features.rows()) {
        throw ValidationError("cache row " + std::to_string(r) + " points at train row " +
                              std::to_string(idx) + ", beyond the feature set");
      }
      src = train_features.features.row(idx);
    }
    auto q = queries.row(r);
    for (std::size_t d = 0; d < cache.dim; ++d) q[d] = static_cast<double>(src[d]);
  }

  std::vector<double> row_omega(n, 1.0);
  if (cfg.include_omega) {
    row_omega.assign(omega.omega.begin(), omega.omega.end());
  }

  WeightedCache trained = cache;
  AdamWState opt;
  Rng rng(cfg.seed);
  const std::size_t batches = (n + cfg.batch_size - 1) / cfg.batch_size;
  const std::size_t total_steps = cfg.epochs * batches;

  TrainReport report;
  report.seed = cfg.seed;
  report.config = cfg;
  report.epoch_losses.reserve(cfg.epochs);

  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;

  const auto start = std::chrono::steady_clock::now();
  std::size_t step = 0;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(order);
    double epoch_loss = 0.0;
    for (std::size_t batch = 0; batch < batches; ++batch) {
      const std::size_t lo = batch * cfg.batch_size;
      const std::size_t hi = std::min(lo + cfg.batch_size, n);
      const std::size_t b = hi - lo;

      MatrixD batch_q(b, cache.dim);
      std::vector<std::uint32_t> batch_t(b);
      std::vector<double> batch_w(b);
      for (std::size_t i = 0; i < b; ++i) {
        const std::size_t r = order[lo + i];
        const auto q = queries.row(r);
        std::copy(q.begin(), q.end(), batch_q.row(i).begin());
        batch_t[i] = targets[r];
        batch_w[i] = row_omega[r];
      }

      const MatrixD logits =
          training_logits(trained, batch_q, w, cfg.use_weights_in_loss, cfg.logit_scale);
      double max_abs = 0.0;
      bool finite = true;
      for (double v : logits.data) {
        if (!std::isfinite(v)) finite = false;
        max_abs = std::max(max_abs, std::abs(v));
      }
      double loss = std::numeric_limits<double>::quiet_NaN();
      if (finite) loss = weighted_ce_loss(logits, batch_t, batch_w);
      if (!std::isfinite(loss)) {
        throw TrainingError("non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                            std::to_string(batch) +
                            ", max |logit| = " + std::to_string(max_abs));
      }
      epoch_loss += loss * static_cast<double>(b);

      const MatrixD grad = loss_grad_keys(trained, batch_q, batch_t, batch_w, w,
                                          cfg.use_weights_in_loss, cfg.logit_scale);
      const double lr = cosine_lr(step, total_steps, cfg.base_lr);
      adamw_step(trained.keys, grad, opt, lr, cfg.beta1, cfg.beta2, cfg.eps,
                 cfg.weight_decay);
      ++step;
    }
    report.epoch_losses.push_back(epoch_loss / static_cast<double>(n));
  }
  const auto end = std::chrono::steady_clock::now();
  report.wall_seconds = std::chrono::duration<double>(end - start).count();
  report.final_loss = report.epoch_losses.back();
  return {std::move(trained), std::move(report)};
}

void write_train_report(const TrainReport& report, const std::filesystem::path& path) {
  nlohmann::ordered_json j;
  j["seed"] = report.seed;
  j["epochs"] = report.config.epochs;
  j["batch_size"] = report.config.batch_size;
  j["base_lr"] = report.config.base_lr;
  j["beta1"] = report.config.beta1;
  j["beta2"] = report.config.beta2;
  j["eps"] = report.config.eps;
  j["weight_decay"] = report.config.weight_decay;
  j["use_weights_in_loss"] = report.config.use_weights_in_loss;
  j["include_omega"] = report.config.include_omega;
  j["logit_scale"] = report.config.logit_scale;
  j["epoch_losses"] = report.epoch_losses;
  j["final_loss"] = report.final_loss;
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << j.dump(2) << '\n';
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

}  // namespace ntua
