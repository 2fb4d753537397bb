#ifndef NTUA_PSEUDO_LABEL_HPP
#define NTUA_PSEUDO_LABEL_HPP

#include "ntua/types.hpp"

namespace ntua {

// Logit scale used before softmax. The classifier emits cosine similarities
// in [-1, 1]; dividing by 0.01 spreads them enough for confidences to be
// informative.
inline constexpr double kDefaultTemperature = 0.01;

// logits[i][c] = dot(features row i, classifier row c), accumulated in double.
MatrixD zero_shot_logits(const EmbeddingSet& features, const ClassifierWeights& w);

// Row-wise softmax of logits / temperature, max-subtracted for stability.
MatrixD softmax_probs(const MatrixD& logits, double temperature);

// Argmax class per row (ties to the lowest index) plus its probability as
// the confidence.
PseudoLabelSet make_pseudo_labels(const EmbeddingSet& features, const ClassifierWeights& w,
                                  double temperature, SourceTag tag);

// Per class, the k most confident rows carrying that pseudo-label, ties to
// the lower sample index. Classes with fewer than k rows land in `padded`
// with their deficiency recorded.
ShotSelection select_top_k(const PseudoLabelSet& pl, std::size_t k);

// One cache row per missing shot: the classifier row itself stands in as the
// feature, labeled with its own class at confidence 1.
FallbackRows fallback_rows(const ClassifierWeights& w, const ShotSelection& sel);

}  // namespace ntua

#endif  // NTUA_PSEUDO_LABEL_HPP
