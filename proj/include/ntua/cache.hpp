#ifndef NTUA_CACHE_HPP
#define NTUA_CACHE_HPP

#include "ntua/types.hpp"

namespace ntua {

inline constexpr double kDefaultAlpha = 1.0;
inline constexpr double kDefaultBeta = 5.5;

// Affinity map: exp(-beta * (1 - x)). Equals 1 at x = 1 and decays as the
// cosine similarity x drops, with beta setting the sharpness.
double phi(double x, double beta);

// Assemble the cache: one row per selected sample (key = feature, value =
// pseudo-label, weight = confidence), then the fallback rows. Row order is
// class-major with confidence descending inside a class, which is exactly
// the order `select_top_k` emits.
WeightedCache build_cache(const ShotSelection& sel, const EmbeddingSet& features,
                          const PseudoLabelSet& pl, const FallbackRows& fallback,
                          double alpha, double beta);

// alpha * phi(query . keys^T) * one_hot(values), optionally scaling each
// row's affinity by its confidence weight first. The classifier term is NOT
// included here; adapter_logits composes it.
std::vector<double> cache_logits(std::span<const double> query, const WeightedCache& cache,
                                 bool use_weights);

// cache_logits + query . W^T: the full adapter prediction for one sample.
std::vector<double> adapter_logits(std::span<const double> query, const WeightedCache& cache,
                                   const ClassifierWeights& w, bool use_weights);

// Swap in the teacher's pseudo-labels and confidences for every non-fallback
// row, matched by source row index. Keys and fallback rows stay untouched.
WeightedCache refine_cache(const WeightedCache& cache, const PseudoLabelSet& teacher_pl);

}  // namespace ntua

#endif  // NTUA_CACHE_HPP
