#ifndef NTUA_SYNTHETIC_HPP
#define NTUA_SYNTHETIC_HPP

#include "ntua/types.hpp"

namespace ntua {

// Desk-scale classification problems with controllable pseudo-label noise.
// Classes live on orthonormal unit directions; samples scatter around their
// direction; pseudo-labels flip to a wrong class at a set rate; confidences
// correlate with correctness as strongly as rho demands.
struct SynthSpec {
  std::size_t num_classes = 10;
  std::size_t shots = 16;  // train samples per class
  std::size_t dim = 64;
  std::size_t test_per_class = 20;
  // Concentration: samples are normalize(direction + gaussian / kappa).
  double kappa = 8.0;
  double eta_s = 0.0;  // student wrong-label rate
  double eta_t = 0.0;  // teacher wrong-label rate
  double rho = 0.0;    // confidence-correctness correlation strength
  // Teacher errors drawn as a subset of student errors (one shared flip
  // draw per sample), so eta_t <= eta_s makes the teacher strictly better
  // on every seed.
  bool nested_noise = true;
  std::uint64_t seed = 0;

  void validate() const;
};

struct SynthBundle {
  ClassifierWeights classifier;  // the class directions
  EmbeddingSet train;            // student-space features
  EmbeddingSet teacher_train;    // teacher-space features, row-aligned
  GroundTruthLabels train_truth;
  PseudoLabelSet student_pl;
  PseudoLabelSet teacher_pl;
  EmbeddingSet test;
  GroundTruthLabels test_labels;
};

// Deterministic per (spec, seed): same spec, same bytes.
SynthBundle generate(const SynthSpec& spec);

// Mean confidence over rows the noisy labels got right vs wrong.
struct ConfidenceSplitStats {
  std::uint64_t correct_count = 0;
  std::uint64_t incorrect_count = 0;
  double mean_correct = 0.0;    // meaningless when correct_count == 0
  double mean_incorrect = 0.0;  // meaningless when incorrect_count == 0
  bool gap_defined = false;     // both subsets nonempty
  double gap = 0.0;             // mean_correct - mean_incorrect
};

ConfidenceSplitStats confidence_split_stats(const PseudoLabelSet& pl,
                                            const GroundTruthLabels& truth);

}  // namespace ntua

#endif  // NTUA_SYNTHETIC_HPP
