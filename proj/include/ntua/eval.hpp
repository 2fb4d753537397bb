#ifndef NTUA_EVAL_HPP
#define NTUA_EVAL_HPP

#include <filesystem>
#include <string>

#include "ntua/trainer.hpp"
#include "ntua/types.hpp"

namespace ntua {

struct EvalReport {
  std::string split;
  std::size_t rows = 0;
  // Primary inference path: affinities scaled by confidence weights or not.
  bool used_weights = false;
  double top1 = 0.0;
  // Same cache evaluated with the opposite weighting, for comparison.
  double top1_other_mode = 0.0;
  std::vector<std::uint64_t> per_class_total;
  std::vector<std::uint64_t> per_class_correct;
  Matrix<std::uint64_t> confusion;  // [true][predicted]

  double per_class_accuracy(std::size_t c) const {
    return per_class_total[c] == 0
               ? 0.0
               : static_cast<double>(per_class_correct[c]) /
                     static_cast<double>(per_class_total[c]);
  }
};

// Argmax of adapter_logits per test row, tallied against ground truth.
EvalReport evaluate(const WeightedCache& cache, const EmbeddingSet& test_features,
                    const GroundTruthLabels& test_labels, const ClassifierWeights& w,
                    bool use_weights, const std::string& split_name = "test");

void write_eval_report(const EvalReport& report, const std::filesystem::path& path);

// Settings shared by the four ablation variants. The train seed is the only
// stochastic input; every variant consumes it identically.
struct AblationSettings {
  std::size_t shots = 16;
  double alpha = 1.0;
  double beta = 5.5;
  TrainConfig train;
  std::string descriptor;  // free-form note on the data source
};

struct AblationResult {
  // Accuracies after training, one pipeline per field:
  double kc = 0.0;         // student cache, no refinement, no weighting
  double kcr = 0.0;        // + teacher-refined values and confidences
  double kcr_ckc = 0.0;    // + confidence weighting in training and inference
  double kcr_ckc_w = 0.0;  // + prototype-affinity loss weights
  std::uint64_t seed = 0;
  std::string descriptor;
};

// Runs the four cache variants on identical data. All variants start from
// bitwise-identical cache keys and use the same training seed.
AblationResult run_ablation(const EmbeddingSet& student_train, const PseudoLabelSet& student_pl,
                            const EmbeddingSet& teacher_train, const PseudoLabelSet& teacher_pl,
                            const EmbeddingSet& test_features,
                            const GroundTruthLabels& test_labels, const ClassifierWeights& w,
                            const AblationSettings& settings);

void write_ablation_report(const std::vector<AblationResult>& results,
                           const std::filesystem::path& path);

}  // namespace ntua

#endif  // NTUA_EVAL_HPP
