#include "ntua/pseudo_label.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace ntua {

MatrixD zero_shot_logits(const EmbeddingSet& features, const ClassifierWeights& w) {
  if (features.dim != w.dim) {
    throw ValidationError("feature dim " + std::to_string(features.dim) +
                          " does not match classifier dim " + std::to_string(w.dim));
  }
  const std::size_t m = features.rows();
  const std::size_t n = w.num_classes();
  MatrixD logits(m, n);
  for (std::size_t i = 0; i < m; ++i) {
    const auto f = features.features.row(i);
    for (std::size_t c = 0; c < n; ++c) {
      const auto wc = w.matrix.row(c);
      double s = 0.0;
      for (std::size_t j = 0; j < features.dim; ++j) {
        s += static_cast<double>(f[j]) * static_cast<double>(wc[j]);
      }
      logits.at(i, c) = s;
    }
  }
  return logits;
}

MatrixD softmax_probs(const MatrixD& logits, double temperature) {
  if (!(temperature > 0.0)) {
    throw ValidationError("softmax temperature must be positive, got " +
                          std::to_string(temperature));
  }
  MatrixD probs(logits.rows, logits.cols);
  for (std::size_t i = 0; i < logits.rows; ++i) {
    const auto row = logits.row(i);
    double hi = -std::numeric_limits<double>::infinity();
    for (double v : row) {
      if (!std::isfinite(v)) {
        throw ValidationError("non-finite logit in row " + std::to_string(i));
      }
      hi = std::max(hi, v / temperature);
    }
    double sum = 0.0;
    auto out = probs.row(i);
    for (std::size_t c = 0; c < logits.cols; ++c) {
      out[c] = std::exp(row[c] / temperature - hi);
      sum += out[c];
    }
    for (std::size_t c = 0; c < logits.cols; ++c) out[c] /= sum;
  }
  return probs;
}

PseudoLabelSet make_pseudo_labels(const EmbeddingSet& features, const ClassifierWeights& w,
                                  double temperature, SourceTag tag) {
  const MatrixD probs = softmax_probs(zero_shot_logits(features, w), temperature);
  PseudoLabelSet pl;
  pl.num_classes = w.num_classes();
  pl.source_tag = tag;
  pl.labels.reserve(probs.rows);
  pl.confidences.reserve(probs.rows);
  for (std::size_t i = 0; i < probs.rows; ++i) {
    const auto row = probs.row(i);
    std::size_t best = 0;
    for (std::size_t c = 1; c < probs.cols; ++c) {
      if (row[c] > row[best]) best = c;
    }
    pl.labels.push_back(static_cast<std::uint32_t>(best));
    pl.confidences.push_back(static_cast<float>(row[best]));
  }
  return pl;
}

ShotSelection select_top_k(const PseudoLabelSet& pl, std::size_t k) {
  if (k == 0) throw ValidationError("shots per class must be at least 1");
  pl.validate();

  // Bucket sample indices by pseudo-label, preserving input order so that a
  // stable sort on confidence alone leaves ties in index order.
  std::vector<std::vector<std::uint64_t>> by_class(pl.num_classes);
  for (std::size_t i = 0; i < pl.rows(); ++i) {
    by_class[pl.labels[i]].push_back(i);
  }

  ShotSelection sel;
  sel.shots_per_class = k;
  for (std::size_t c = 0; c < pl.num_classes; ++c) {
    auto& rows = by_class[c];
    std::stable_sort(rows.begin(), rows.end(), [&](std::uint64_t a, std::uint64_t b) {
      return pl.confidences[a] > pl.confidences[b];
    });
    const std::size_t take = std::min(k, rows.size());
    for (std::size_t j = 0; j < take; ++j) {
      sel.selected.push_back({static_cast<std::uint32_t>(c), rows[j]});
    }
    if (take < k) {
      sel.padded.push_back(
          {static_cast<std::uint32_t>(c), static_cast<std::uint32_t>(k - take)});
    }
  }
  return sel;
}

FallbackRows fallback_rows(const ClassifierWeights& w, const ShotSelection& sel) {
  std::size_t total = 0;
  for (const auto& p : sel.padded) {
    if (p.class_index >= w.num_classes()) {
      throw ValidationError("padded class " + std::to_string(p.class_index) +
                            " out of range for classifier with " +
                            std::to_string(w.num_classes()) + " classes");
    }
    total += p.deficiency;
  }
  FallbackRows out;
  out.keys = MatrixF(total, w.dim);
  out.values.reserve(total);
  out.confidences.reserve(total);
  out.classes.reserve(total);
  out.ids.reserve(total);
  std::size_t r = 0;
  for (const auto& p : sel.padded) {
    const auto wc = w.matrix.row(p.class_index);
    for (std::uint32_t j = 0; j < p.deficiency; ++j, ++r) {
      std::copy(wc.begin(), wc.end(), out.keys.row(r).begin());
      out.values.push_back(p.class_index);
      out.confidences.push_back(1.0f);
      out.classes.push_back(p.class_index);
      out.ids.push_back("fallback/" + w.class_names[p.class_index] + "/" + std::to_string(j));
    }
  }
  return out;
}

}  // namespace ntua
