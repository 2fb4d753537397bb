#ifndef NTUA_TESTS_ORACLES_HPP
#define NTUA_TESTS_ORACLES_HPP

// Reference implementations the tests trust instead of the library: plain
// scalar loops, no shared code with src/. Deliberately slow and obvious.

#include <unistd.h>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "ntua/types.hpp"

namespace oracle {

// query . key affinity logits, one scalar at a time.
inline std::vector<double> cache_logits(const std::vector<double>& query,
                                        const ntua::WeightedCache& cache, bool use_weights) {
  std::vector<double> out(cache.num_classes, 0.0);
  for (std::size_t r = 0; r < cache.rows(); ++r) {
    double sim = 0.0;
    for (std::size_t j = 0; j < cache.dim; ++j) sim += query[j] * cache.keys.at(r, j);
    double a = std::exp(-cache.beta * (1.0 - sim));
    if (use_weights) a = a * static_cast<double>(cache.weights[r]);
    out[cache.values[r]] += cache.alpha * a;
  }
  return out;
}

inline std::vector<double> zero_shot_row(const std::vector<double>& query,
                                         const ntua::ClassifierWeights& w) {
  std::vector<double> out(w.num_classes(), 0.0);
  for (std::size_t c = 0; c < w.num_classes(); ++c) {
    double s = 0.0;
    for (std::size_t j = 0; j < w.dim; ++j) {
      s += query[j] * static_cast<double>(w.matrix.at(c, j));
    }
    out[c] = s;
  }
  return out;
}

inline std::vector<double> adapter_row(const std::vector<double>& query,
                                       const ntua::WeightedCache& cache,
                                       const ntua::ClassifierWeights& w, bool use_weights) {
  auto out = cache_logits(query, cache, use_weights);
  const auto zs = zero_shot_row(query, w);
  for (std::size_t c = 0; c < out.size(); ++c) out[c] += zs[c];
  return out;
}

inline std::vector<double> softmax(const std::vector<double>& z) {
  double hi = z[0];
  for (double v : z) hi = std::max(hi, v);
  std::vector<double> p(z.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    p[i] = std::exp(z[i] - hi);
    sum += p[i];
  }
  for (auto& v : p) v /= sum;
  return p;
}

inline double weighted_ce(const std::vector<std::vector<double>>& logits,
                          const std::vector<std::uint32_t>& labels,
                          const std::vector<double>& omega) {
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    const auto p = softmax(logits[i]);
    total += omega[i] * -std::log(p[labels[i]]);
  }
  return total / static_cast<double>(logits.size());
}

// Batch loss for the trainer in one self-contained function, used as the
// scalar field for finite-difference gradient checks.
inline double train_loss(const ntua::WeightedCache& cache,
                         const std::vector<std::vector<double>>& queries,
                         const std::vector<std::uint32_t>& targets,
                         const std::vector<double>& omega, const ntua::ClassifierWeights& w,
                         bool use_weights, double logit_scale) {
  std::vector<std::vector<double>> logits;
  for (const auto& q : queries) {
    auto z = adapter_row(q, cache, w, use_weights);
    for (auto& v : z) v *= logit_scale;
    logits.push_back(std::move(z));
  }
  return weighted_ce(logits, targets, omega);
}

// Central finite differences over every key entry.
inline ntua::MatrixD fd_grad_keys(const ntua::WeightedCache& cache,
                                  const std::vector<std::vector<double>>& queries,
                                  const std::vector<std::uint32_t>& targets,
                                  const std::vector<double>& omega,
                                  const ntua::ClassifierWeights& w, bool use_weights,
                                  double logit_scale, double h) {
  ntua::MatrixD grad(cache.rows(), cache.dim);
  ntua::WeightedCache probe = cache;
  for (std::size_t r = 0; r < cache.rows(); ++r) {
    for (std::size_t j = 0; j < cache.dim; ++j) {
      const double saved = probe.keys.at(r, j);
      probe.keys.at(r, j) = saved + h;
      const double up = train_loss(probe, queries, targets, omega, w, use_weights, logit_scale);
      probe.keys.at(r, j) = saved - h;
      const double dn = train_loss(probe, queries, targets, omega, w, use_weights, logit_scale);
      probe.keys.at(r, j) = saved;
      grad.at(r, j) = (up - dn) / (2.0 * h);
    }
  }
  return grad;
}

inline ntua::MatrixD mean_per_class(const ntua::MatrixF& features,
                                    const std::vector<std::uint32_t>& labels,
                                    std::size_t num_classes) {
  ntua::MatrixD sums(num_classes, features.cols);
  std::vector<std::uint64_t> counts(num_classes, 0);
  for (std::size_t i = 0; i < features.rows; ++i) {
    for (std::size_t j = 0; j < features.cols; ++j) {
      sums.at(labels[i], j) += static_cast<double>(features.at(i, j));
    }
    counts[labels[i]] += 1;
  }
  for (std::size_t c = 0; c < num_classes; ++c) {
    if (counts[c] == 0) continue;
    for (std::size_t j = 0; j < features.cols; ++j) {
      sums.at(c, j) /= static_cast<double>(counts[c]);
    }
  }
  return sums;
}

// ── Random test data ─────────────────────────────────────────────────────
// Tests draw through std::mt19937 directly; reproducibility within one
// binary is all they need.

inline ntua::MatrixF random_unit_rows(std::mt19937& gen, std::size_t rows, std::size_t cols) {
  std::normal_distribution<double> normal(0.0, 1.0);
  ntua::MatrixF m(rows, cols);
  for (std::size_t i = 0; i < rows; ++i) {
    std::vector<double> v(cols);
    double s = 0.0;
    for (auto& x : v) {
      x = normal(gen);
      s += x * x;
    }
    s = std::sqrt(s);
    // Round to float, then renormalize so the stored row passes validation.
    double s2 = 0.0;
    for (auto& x : v) {
      x = static_cast<double>(static_cast<float>(x / s));
      s2 += x * x;
    }
    s2 = std::sqrt(s2);
    for (std::size_t j = 0; j < cols; ++j) {
      m.at(i, j) = static_cast<float>(v[j] / s2);
    }
  }
  return m;
}

inline ntua::EmbeddingSet random_embeddings(std::mt19937& gen, std::size_t rows,
                                            std::size_t cols, const std::string& prefix = "s") {
  ntua::EmbeddingSet set;
  set.dim = cols;
  set.features = random_unit_rows(gen, rows, cols);
  for (std::size_t i = 0; i < rows; ++i) set.sample_ids.push_back(prefix + std::to_string(i));
  return set;
}

inline ntua::ClassifierWeights random_classifier(std::mt19937& gen, std::size_t classes,
                                                 std::size_t cols) {
  ntua::ClassifierWeights w;
  w.dim = cols;
  w.matrix = random_unit_rows(gen, classes, cols);
  for (std::size_t c = 0; c < classes; ++c) w.class_names.push_back("c" + std::to_string(c));
  return w;
}

// Cache with random unit keys, random labels/weights, no fallback rows.
inline ntua::WeightedCache random_cache(std::mt19937& gen, std::size_t rows, std::size_t dim,
                                        std::size_t classes, double alpha = 1.0,
                                        double beta = 5.5) {
  std::uniform_int_distribution<std::uint32_t> label(0, static_cast<std::uint32_t>(classes - 1));
  std::uniform_real_distribution<float> weight(0.05f, 1.0f);
  const ntua::MatrixF keys = random_unit_rows(gen, rows, dim);
  ntua::WeightedCache cache;
  cache.dim = dim;
  cache.num_classes = classes;
  cache.alpha = alpha;
  cache.beta = beta;
  cache.keys = ntua::MatrixD(rows, dim);
  for (std::size_t i = 0; i < rows * dim; ++i) {
    cache.keys.data[i] = static_cast<double>(keys.data[i]);
  }
  for (std::size_t r = 0; r < rows; ++r) {
    cache.values.push_back(label(gen));
    cache.weights.push_back(weight(gen));
    cache.sources.push_back(static_cast<std::int64_t>(r));
    cache.row_ids.push_back("k" + std::to_string(r));
  }
  return cache;
}

inline double rel_err(double got, double want, double floor_ = 1e-6) {
  return std::abs(got - want) / std::max(std::abs(want), floor_);
}

// Scratch directory for file round-trip tests.
inline std::filesystem::path temp_dir(const std::string& tag) {
  const auto dir = std::filesystem::temp_directory_path() /
                   ("ntua_test_" + tag + "_" + std::to_string(::getpid()));
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace oracle

#endif  // NTUA_TESTS_ORACLES_HPP
