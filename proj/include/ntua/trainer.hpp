#ifndef NTUA_TRAINER_HPP
#define NTUA_TRAINER_HPP

#include <filesystem>
#include <utility>

#include "ntua/types.hpp"

namespace ntua {

struct TrainConfig {
  std::size_t epochs = 20;
  std::size_t batch_size = 16;
  // Zero is tolerated (keys provably stay put); useful as a no-op baseline.
  double base_lr = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.01;
  std::uint64_t seed = 0;
  // Confidence weights participate in the forward logits during training.
  bool use_weights_in_loss = true;
  // Per-row prototype-affinity weights scale the per-sample loss.
  bool include_omega = true;
  // Extra multiplier on the training logits before softmax. 1 = raw logits.
  double logit_scale = 1.0;

  void validate() const;
};

struct TrainReport {
  std::vector<double> epoch_losses;  // sample-weighted mean loss per epoch
  double final_loss = 0.0;
  double wall_seconds = 0.0;  // informational; excluded from the serialized report
  std::uint64_t seed = 0;
  TrainConfig config;
};

// Mean of omega_i * cross_entropy(softmax(logits_i), labels_i) over rows,
// stabilized via log-sum-exp.
double weighted_ce_loss(const MatrixD& logits, std::span<const std::uint32_t> labels,
                        std::span<const double> omega);

// Adapter logits for a batch of queries against the full cache, times
// logit_scale: the training-time forward pass.
MatrixD training_logits(const WeightedCache& cache, const MatrixD& queries,
                        const ClassifierWeights& w, bool use_weights, double logit_scale);

// Analytic gradient of the batch loss with respect to the cache keys. Only
// the affinity path carries gradient; values, weights, and W are constants.
MatrixD loss_grad_keys(const WeightedCache& cache, const MatrixD& queries,
                       std::span<const std::uint32_t> targets, std::span<const double> omega,
                       const ClassifierWeights& w, bool use_weights, double logit_scale);

// base_lr * 0.5 * (1 + cos(pi * step / total_steps)).
double cosine_lr(std::size_t step, std::size_t total_steps, double base_lr);

struct AdamWState {
  MatrixD m;
  MatrixD v;
  std::size_t step = 0;
};

// One decoupled-weight-decay Adam update in place. Decay multiplies the
// parameters directly; it never enters the moment estimates.
void adamw_step(MatrixD& params, const MatrixD& grads, AdamWState& state, double lr,
                double beta1, double beta2, double eps, double weight_decay);

// Fine-tune the cache keys: every cache row is a training sample (queries
// are the cached samples' own features, fallback rows query with their
// classifier row), targets are the per-row labels, mini-batches reshuffled
// each epoch. Only the keys change.
std::pair<WeightedCache, TrainReport> train_keys(const WeightedCache& cache,
                                                 const EmbeddingSet& train_features,
                                                 std::span<const std::uint32_t> targets,
                                                 const AffinityWeights& omega,
                                                 const ClassifierWeights& w,
                                                 const TrainConfig& cfg);

// Report as stable-key JSON. Wall time is deliberately left out so that
// equal-seed runs serialize identically.
void write_train_report(const TrainReport& report, const std::filesystem::path& path);

}  // namespace ntua

#endif  // NTUA_TRAINER_HPP
