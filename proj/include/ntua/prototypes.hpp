#ifndef NTUA_PROTOTYPES_HPP
#define NTUA_PROTOTYPES_HPP

#include "ntua/types.hpp"

namespace ntua {

// Per-class arithmetic mean of the teacher features backing the cache's
// non-fallback rows, grouped by teacher pseudo-label. No renormalization;
// a class with no member rows gets the zero vector and count 0. The cache
// supplies the row-to-train-sample map.
PrototypeSet compute_prototypes(const EmbeddingSet& teacher_features,
                                const PseudoLabelSet& teacher_pl, const WeightedCache& cache);

// One loss weight per cache row: dot(teacher feature, prototype of the row's
// teacher label), clamped to [0, 1]. Fallback rows get 1; rows whose label
// has a zero-count prototype get 0.
AffinityWeights affinity_weights(const EmbeddingSet& teacher_features,
                                 const PseudoLabelSet& teacher_pl, const WeightedCache& cache,
                                 const PrototypeSet& protos);

}  // namespace ntua

#endif  // NTUA_PROTOTYPES_HPP
