#include "ntua/synthetic.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "ntua/rng.hpp"

namespace ntua {

void SynthSpec::validate() const {
  if (num_classes < 1) throw ValidationError("need at least one class");
  if (shots < 1) throw ValidationError("need at least one shot per class");
  if (test_per_class < 1) throw ValidationError("need at least one test sample per class");
  if (dim < num_classes) {
    throw ValidationError("cannot place " + std::to_string(num_classes) +
                          " orthogonal class directions in dimension " + std::to_string(dim));
  }
  if (!(kappa > 0.0)) throw ValidationError("kappa must be positive");
  for (double rate : {eta_s, eta_t, rho}) {
    if (!(rate >= 0.0 && rate <= 1.0)) {
      throw ValidationError("noise and correlation rates must lie in [0, 1]");
    }
  }
}

namespace {

void normalize_row(std::span<double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  s = std::sqrt(s);
  if (!(s > 1e-9)) throw ValidationError("degenerate direction draw, norm " + std::to_string(s));
  for (auto& x : v) x /= s;
}

// Random orthonormal frame: gaussian draws, Gram-Schmidt per row.
MatrixD class_directions(Rng& rng, std::size_t n, std::size_t d) {
  MatrixD dirs(n, d);
  for (std::size_t c = 0; c < n; ++c) {
    auto row = dirs.row(c);
    for (auto& x : row) x = rng.gaussian();
    for (std::size_t p = 0; p < c; ++p) {
      const auto prev = dirs.row(p);
      double dot = 0.0;
      for (std::size_t j = 0; j < d; ++j) dot += row[j] * prev[j];
      for (std::size_t j = 0; j < d; ++j) row[j] -= dot * prev[j];
    }
    normalize_row(row);
  }
  return dirs;
}

// normalize(direction + gaussian / kappa), rounded to storage precision.
void fill_sample(Rng& rng, std::span<const double> dir, double kappa, std::span<float> out) {
  std::vector<double> v(dir.size());
  for (std::size_t j = 0; j < v.size(); ++j) v[j] = dir[j] + rng.gaussian() / kappa;
  normalize_row(v);
  // Renormalize after the float round so stored rows pass the norm check.
  double s = 0.0;
  for (std::size_t j = 0; j < v.size(); ++j) {
    const double r = static_cast<double>(static_cast<float>(v[j]));
    s += r * r;
  }
  s = std::sqrt(s);
  for (std::size_t j = 0; j < v.size(); ++j) {
    out[j] = static_cast<float>(v[j] / s);
  }
}

EmbeddingSet make_split(Rng& rng, const MatrixD& dirs, double kappa, std::size_t per_class,
                        const std::string& prefix) {
  const std::size_t n = dirs.rows;
  EmbeddingSet set;
  set.dim = dirs.cols;
  set.features = MatrixF(n * per_class, dirs.cols);
  set.sample_ids.reserve(n * per_class);
  std::size_t r = 0;
  for (std::size_t c = 0; c < n; ++c) {
    for (std::size_t i = 0; i < per_class; ++i, ++r) {
      fill_sample(rng, dirs.row(c), kappa, set.features.row(r));
      set.sample_ids.push_back(prefix + "/c" + std::to_string(c) + "/" + std::to_string(i));
    }
  }
  return set;
}

GroundTruthLabels class_major_labels(std::size_t n, std::size_t per_class) {
  GroundTruthLabels labels;
  labels.num_classes = n;
  labels.labels.reserve(n * per_class);
  for (std::size_t c = 0; c < n; ++c) {
    for (std::size_t i = 0; i < per_class; ++i) {
      labels.labels.push_back(static_cast<std::uint32_t>(c));
    }
  }
  return labels;
}

std::uint32_t wrong_class(Rng& rng, std::uint32_t truth, std::size_t n) {
  auto c = static_cast<std::uint32_t>(rng.bounded(n - 1));
  return c >= truth ? c + 1 : c;
}

// Confidence draw: with probability rho the value lands in (0.5, 1] for a
// correct label and (0, 0.5] for a wrong one; otherwise anywhere in (0, 1].
float confidence_draw(Rng& rng, bool correct, double rho) {
  double v;
  if (rng.uniform() < rho) {
    v = correct ? 0.5 + 0.5 * rng.uniform_pos() : 0.5 * rng.uniform_pos();
  } else {
    v = rng.uniform_pos();
  }
  auto f = static_cast<float>(v);
  if (f <= 0.0f) f = std::numeric_limits<float>::min();
  if (f > 1.0f) f = 1.0f;
  return f;
}

}  // namespace

SynthBundle generate(const SynthSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);

  SynthBundle bundle;
  const MatrixD dirs = class_directions(rng, spec.num_classes, spec.dim);

  bundle.classifier.dim = spec.dim;
  bundle.classifier.matrix = MatrixF(spec.num_classes, spec.dim);
  bundle.classifier.class_names.reserve(spec.num_classes);
  for (std::size_t c = 0; c < spec.num_classes; ++c) {
    const auto dir = dirs.row(c);
    // Same float-rounding treatment as the samples.
    double s = 0.0;
    for (std::size_t j = 0; j < spec.dim; ++j) {
      const double r = static_cast<double>(static_cast<float>(dir[j]));
      s += r * r;
    }
    s = std::sqrt(s);
    auto out = bundle.classifier.matrix.row(c);
    for (std::size_t j = 0; j < spec.dim; ++j) out[j] = static_cast<float>(dir[j] / s);
    bundle.classifier.class_names.push_back("class" + std::to_string(c));
  }

  bundle.train = make_split(rng, dirs, spec.kappa, spec.shots, "train");
  bundle.teacher_train = make_split(rng, dirs, spec.kappa, spec.shots, "train");
  bundle.test = make_split(rng, dirs, spec.kappa, spec.test_per_class, "test");
  bundle.train_truth = class_major_labels(spec.num_classes, spec.shots);
  bundle.test_labels = class_major_labels(spec.num_classes, spec.test_per_class);

  const std::size_t m = bundle.train.rows();
  bundle.student_pl.num_classes = spec.num_classes;
  bundle.student_pl.source_tag = SourceTag::student;
  bundle.teacher_pl.num_classes = spec.num_classes;
  bundle.teacher_pl.source_tag = SourceTag::teacher;
  for (std::size_t i = 0; i < m; ++i) {
    const std::uint32_t truth = bundle.train_truth.labels[i];
    const double u = rng.uniform();
    const bool student_wrong = u < spec.eta_s;
    std::uint32_t student_label = truth;
    if (student_wrong) student_label = wrong_class(rng, truth, spec.num_classes);

    bool teacher_wrong;
    if (spec.nested_noise) {
      // Shared draw: the teacher errs only where the student already errs
      // (given eta_t <= eta_s).
      teacher_wrong = u < spec.eta_t;
    } else {
      teacher_wrong = rng.uniform() < spec.eta_t;
    }
    std::uint32_t teacher_label = truth;
    if (teacher_wrong) teacher_label = wrong_class(rng, truth, spec.num_classes);

    bundle.student_pl.labels.push_back(student_label);
    bundle.student_pl.confidences.push_back(confidence_draw(rng, !student_wrong, spec.rho));
    bundle.teacher_pl.labels.push_back(teacher_label);
    bundle.teacher_pl.confidences.push_back(confidence_draw(rng, !teacher_wrong, spec.rho));
  }
  return bundle;
}

ConfidenceSplitStats confidence_split_stats(const PseudoLabelSet& pl,
                                            const GroundTruthLabels& truth) {
  if (pl.rows() != truth.rows()) {
    throw ValidationError("pseudo-labels and ground truth disagree on row count");
  }
  ConfidenceSplitStats stats;
  double sum_correct = 0.0;
  double sum_incorrect = 0.0;
  for (std::size_t i = 0; i < pl.rows(); ++i) {
    if (pl.labels[i] == truth.labels[i]) {
      stats.correct_count += 1;
      sum_correct += pl.confidences[i];
    } else {
      stats.incorrect_count += 1;
      sum_incorrect += pl.confidences[i];
    }
  }
  if (stats.correct_count > 0) {
    stats.mean_correct = sum_correct / static_cast<double>(stats.correct_count);
  }
  if (stats.incorrect_count > 0) {
    stats.mean_incorrect = sum_incorrect / static_cast<double>(stats.incorrect_count);
  }
  stats.gap_defined = stats.correct_count > 0 && stats.incorrect_count > 0;
  if (stats.gap_defined) stats.gap = stats.mean_correct - stats.mean_incorrect;
  return stats;
}

}  // namespace ntua
