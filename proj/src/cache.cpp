#include "ntua/cache.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace ntua {

double phi(double x, double beta) {
  if (!(beta > 0.0)) {
    throw ValidationError("beta must be positive, got " + std::to_string(beta));
  }
  return std::exp(-beta * (1.0 - x));
}

WeightedCache build_cache(const ShotSelection& sel, const EmbeddingSet& features,
                          const PseudoLabelSet& pl, const FallbackRows& fallback,
                          double alpha, double beta) {
  features.validate();
  pl.validate();
  if (pl.rows() != features.rows()) {
    throw ValidationError("pseudo-label rows (" + std::to_string(pl.rows()) +
                          ") do not match feature rows (" + std::to_string(features.rows()) +
                          ")");
  }
  if (fallback.rows() > 0 && fallback.keys.cols != features.dim) {
    throw ValidationError("fallback key dim " + std::to_string(fallback.keys.cols) +
                          " does not match feature dim " + std::to_string(features.dim));
  }
  if (!(alpha >= 0.0)) throw ValidationError("alpha must be nonnegative");
  if (!(beta > 0.0)) throw ValidationError("beta must be positive");

  const std::size_t n = sel.selected.size() + fallback.rows();
  if (n == 0) throw ValidationError("cache would be empty: nothing selected, nothing padded");

  WeightedCache cache;
  cache.dim = features.dim;
  cache.num_classes = pl.num_classes;
  cache.alpha = alpha;
  cache.beta = beta;
  cache.keys = MatrixD(n, features.dim);
  cache.values.reserve(n);
  cache.weights.reserve(n);
  cache.sources.reserve(n);
  cache.row_ids.reserve(n);

  std::size_t r = 0;
  for (const auto& s : sel.selected) {
    if (s.sample_index >= features.rows()) {
      throw ValidationError("selection references sample " + std::to_string(s.sample_index) +
                            " beyond the feature set");
    }
    if (pl.labels[s.sample_index] != s.class_index) {
      throw ValidationError("selection says sample " + std::to_string(s.sample_index) +
                            " is class " + std::to_string(s.class_index) +
                            " but its pseudo-label is " +
                            std::to_string(pl.labels[s.sample_index]));
    }
    const auto f = features.features.row(s.sample_index);
    std::copy(f.begin(), f.end(), cache.keys.row(r).begin());
    cache.values.push_back(s.class_index);
    cache.weights.push_back(pl.confidences[s.sample_index]);
    cache.sources.push_back(static_cast<std::int64_t>(s.sample_index));
    cache.row_ids.push_back(features.sample_ids[s.sample_index]);
    ++r;
  }
  for (std::size_t i = 0; i < fallback.rows(); ++i, ++r) {
    const auto k = fallback.keys.row(i);
    std::copy(k.begin(), k.end(), cache.keys.row(r).begin());
    cache.values.push_back(fallback.values[i]);
    cache.weights.push_back(fallback.confidences[i]);
    cache.sources.push_back(-1);
    cache.row_ids.push_back(fallback.ids[i]);
  }

  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (double v : cache.keys.row(i)) s += v * v;
    if (std::abs(std::sqrt(s) - 1.0) > kUnitNormTolerance) {
      throw ValidationError("cache key " + std::to_string(i) + " ('" + cache.row_ids[i] +
                            "') has norm " + std::to_string(std::sqrt(s)));
    }
  }
  return cache;
}

std::vector<double> cache_logits(std::span<const double> query, const WeightedCache& cache,
                                 bool use_weights) {
  if (query.size() != cache.dim) {
    throw ValidationError("query dim " + std::to_string(query.size()) +
                          " does not match cache dim " + std::to_string(cache.dim));
  }
  std::vector<double> logits(cache.num_classes, 0.0);
  for (std::size_t r = 0; r < cache.rows(); ++r) {
    const auto key = cache.keys.row(r);
    double sim = 0.0;
    for (std::size_t j = 0; j < cache.dim; ++j) sim += query[j] * key[j];
    double a = phi(sim, cache.beta);
    if (use_weights) a *= static_cast<double>(cache.weights[r]);
    logits[cache.values[r]] += cache.alpha * a;
  }
  return logits;
}

std::vector<double> adapter_logits(std::span<const double> query, const WeightedCache& cache,
                                   const ClassifierWeights& w, bool use_weights) {
  if (w.dim != cache.dim) {
    throw ValidationError("classifier dim " + std::to_string(w.dim) +
                          " does not match cache dim " + std::to_string(cache.dim));
  }
  if (w.num_classes() != cache.num_classes) {
    throw ValidationError("classifier has " + std::to_string(w.num_classes()) +
                          " classes, cache has " + std::to_string(cache.num_classes));
  }
  std::vector<double> logits = cache_logits(query, cache, use_weights);
  for (std::size_t c = 0; c < cache.num_classes; ++c) {
    const auto wc = w.matrix.row(c);
    double s = 0.0;
    for (std::size_t j = 0; j < cache.dim; ++j) s += query[j] * static_cast<double>(wc[j]);
    logits[c] += s;
  }
  return logits;
}

WeightedCache refine_cache(const WeightedCache& cache, const PseudoLabelSet& teacher_pl) {
  teacher_pl.validate();
  if (teacher_pl.num_classes != cache.num_classes) {
    throw ValidationError("teacher pseudo-labels cover " +
                          std::to_string(teacher_pl.num_classes) + " classes, cache holds " +
                          std::to_string(cache.num_classes));
  }
  WeightedCache out = cache;
  for (std::size_t r = 0; r < out.rows(); ++r) {
    if (out.is_fallback(r)) continue;
    const auto src = static_cast<std::uint64_t>(out.sources[r]);
    if (src >= teacher_pl.rows()) {
      throw ValidationError("no teacher prediction for cache row " + std::to_string(r) +
                            " ('" + out.row_ids[r] + "', train row " + std::to_string(src) +
                            ")");
    }
    out.values[r] = teacher_pl.labels[src];
    out.weights[r] = teacher_pl.confidences[src];
  }
  return out;
}

}  // namespace ntua
