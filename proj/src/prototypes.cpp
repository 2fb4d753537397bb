#include "ntua/prototypes.hpp"

#include <algorithm>
#include <string>

namespace ntua {

namespace {

// Train-set row behind cache row r, bounds-checked against the teacher data.
std::uint64_t teacher_row(const WeightedCache& cache, std::size_t r,
                          const EmbeddingSet& teacher_features,
                          const PseudoLabelSet& teacher_pl) {
  const auto src = static_cast<std::uint64_t>(cache.sources[r]);
  if (src >= teacher_features.rows() || src >= teacher_pl.rows()) {
    throw ValidationError("cache row " + std::to_string(r) + " ('" + cache.row_ids[r] +
                          "') points at train row " + std::to_string(src) +
                          ", beyond the teacher data");
  }
  return src;
}

}  // namespace

PrototypeSet compute_prototypes(const EmbeddingSet& teacher_features,
                                const PseudoLabelSet& teacher_pl, const WeightedCache& cache) {
  teacher_features.validate();
  teacher_pl.validate();
  if (teacher_features.dim != cache.dim) {
    throw ValidationError("teacher feature dim " + std::to_string(teacher_features.dim) +
                          " does not match cache dim " + std::to_string(cache.dim));
  }
  if (teacher_pl.num_classes != cache.num_classes) {
    throw ValidationError("teacher pseudo-labels cover " +
                          std::to_string(teacher_pl.num_classes) + " classes, cache holds " +
                          std::to_string(cache.num_classes));
  }
  if (teacher_pl.rows() != teacher_features.rows()) {
    throw ValidationError("teacher pseudo-label rows do not match teacher feature rows");
  }

  PrototypeSet protos;
  protos.num_classes = cache.num_classes;
  protos.dim = cache.dim;
  protos.prototypes = MatrixD(cache.num_classes, cache.dim);
  protos.counts.assign(cache.num_classes, 0);

  for (std::size_t r = 0; r < cache.rows(); ++r) {
    if (cache.is_fallback(r)) continue;
    const auto src = teacher_row(cache, r, teacher_features, teacher_pl);
    const std::uint32_t label = teacher_pl.labels[src];
    const auto f = teacher_features.features.row(src);
    auto proto = protos.prototypes.row(label);
    for (std::size_t j = 0; j < cache.dim; ++j) proto[j] += static_cast<double>(f[j]);
    protos.counts[label] += 1;
  }
  for (std::size_t c = 0; c < protos.num_classes; ++c) {
    if (protos.counts[c] == 0) continue;
    auto proto = protos.prototypes.row(c);
    for (std::size_t j = 0; j < cache.dim; ++j) {
      proto[j] /= static_cast<double>(protos.counts[c]);
    }
  }
  return protos;
}

AffinityWeights affinity_weights(const EmbeddingSet& teacher_features,
                                 const PseudoLabelSet& teacher_pl, const WeightedCache& cache,
                                 const PrototypeSet& protos) {
  if (protos.num_classes != cache.num_classes || protos.dim != cache.dim) {
    throw ValidationError("prototype set shape does not match the cache");
  }
  AffinityWeights out;
  out.omega.reserve(cache.rows());
  for (std::size_t r = 0; r < cache.rows(); ++r) {
    if (cache.is_fallback(r)) {
      out.omega.push_back(1.0);
      continue;
    }
    const auto src = teacher_row(cache, r, teacher_features, teacher_pl);
    const std::uint32_t label = teacher_pl.labels[src];
    if (protos.counts[label] == 0) {
      out.omega.push_back(0.0);
      continue;
    }
    const auto f = teacher_features.features.row(src);
    const auto proto = protos.prototypes.row(label);
    double dot = 0.0;
    for (std::size_t j = 0; j < cache.dim; ++j) dot += static_cast<double>(f[j]) * proto[j];
    out.omega.push_back(std::clamp(dot, 0.0, 1.0));
  }
  return out;
}

}  // namespace ntua
