#ifndef NTUA_TYPES_HPP
#define NTUA_TYPES_HPP

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace ntua {

// Bad or unreadable bytes on disk.
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Data that parses but breaks a documented invariant (shape, norm, range).
struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Training aborted (non-finite loss); message carries epoch/batch diagnostics.
struct TrainingError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Row-major dense matrix. float mirrors the on-disk precision of stored
// artifacts; double is used for trainable state and intermediate arithmetic.
template <typename T>
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<T> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, T{}) {}

  std::span<T> row(std::size_t i) { return {data.data() + i * cols, cols}; }
  std::span<const T> row(std::size_t i) const { return {data.data() + i * cols, cols}; }

  T& at(std::size_t i, std::size_t j) { return data[i * cols + j]; }
  const T& at(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

  bool operator==(const Matrix&) const = default;
};

using MatrixF = Matrix<float>;
using MatrixD = Matrix<double>;

inline std::vector<double> widen(std::span<const float> v) {
  return std::vector<double>(v.begin(), v.end());
}

// Row norms of stored feature matrices must sit within this band around 1.
inline constexpr double kUnitNormTolerance = 1e-4;

inline constexpr std::size_t npos = static_cast<std::size_t>(-1);

// Index of the first row whose L2 norm deviates from 1 by more than tol,
// or npos if all rows pass. Accumulation in double.
inline std::size_t first_non_unit_row(const MatrixF& m, double tol = kUnitNormTolerance) {
  for (std::size_t i = 0; i < m.rows; ++i) {
    double s = 0.0;
    for (float v : m.row(i)) s += static_cast<double>(v) * static_cast<double>(v);
    if (std::abs(std::sqrt(s) - 1.0) > tol) return i;
  }
  return npos;
}

/// L2-normalized feature vectors with per-row sample ids.
struct EmbeddingSet {
  std::size_t dim = 0;
  MatrixF features;  // rows() x dim
  std::vector<std::string> sample_ids;

  std::size_t rows() const { return features.rows; }
  void validate() const;

  bool operator==(const EmbeddingSet&) const = default;
};

/// Zero-shot classifier: one L2-normalized text-embedding row per class.
struct ClassifierWeights {
  std::size_t dim = 0;
  MatrixF matrix;  // num_classes() x dim
  std::vector<std::string> class_names;

  std::size_t num_classes() const { return matrix.rows; }
  void validate() const;

  bool operator==(const ClassifierWeights&) const = default;
};

/// Per-sample class indices; used for evaluation and synthetic oracles only.
struct GroundTruthLabels {
  std::size_t num_classes = 0;
  std::vector<std::uint32_t> labels;

  std::size_t rows() const { return labels.size(); }
  void validate() const;

  bool operator==(const GroundTruthLabels&) const = default;
};

enum class SourceTag : std::uint8_t { student = 0, teacher = 1, synthetic = 2 };

const char* to_string(SourceTag tag);

/// One-hot pseudo-labels (stored as class indices) plus prediction confidences.
/// Rows are positionally aligned with the embedding set they were derived from.
struct PseudoLabelSet {
  std::size_t num_classes = 0;
  std::vector<std::uint32_t> labels;
  std::vector<float> confidences;  // each in (0, 1]
  SourceTag source_tag = SourceTag::student;

  std::size_t rows() const { return labels.size(); }
  void validate() const;

  bool operator==(const PseudoLabelSet&) const = default;
};

/// Result of per-class top-k confidence selection.
struct ShotSelection {
  struct SelectedRow {
    std::uint32_t class_index = 0;
    std::uint64_t sample_index = 0;
    bool operator==(const SelectedRow&) const = default;
  };
  struct PaddedClass {
    std::uint32_t class_index = 0;
    std::uint32_t deficiency = 0;  // rows to fill with classifier-weight fallbacks
    bool operator==(const PaddedClass&) const = default;
  };

  std::size_t shots_per_class = 0;
  std::vector<SelectedRow> selected;  // class-major, confidence-descending
  std::vector<PaddedClass> padded;

  bool operator==(const ShotSelection&) const = default;
};

/// Synthetic cache rows for classes short on samples: the classifier row
/// itself acts as the feature.
struct FallbackRows {
  MatrixF keys;
  std::vector<std::uint32_t> values;
  std::vector<float> confidences;
  std::vector<std::uint32_t> classes;
  std::vector<std::string> ids;

  std::size_t rows() const { return keys.rows; }
};

/// Weighted key-value cache. Keys are trainable and kept in double;
/// serialization rounds them to float. values[i] is the one-hot class of
/// row i; weights are pseudo-label confidences in (0, 1].
struct WeightedCache {
  std::size_t dim = 0;
  std::size_t num_classes = 0;
  MatrixD keys;  // rows() x dim
  std::vector<std::uint32_t> values;
  std::vector<float> weights;
  double alpha = 1.0;
  double beta = 5.5;
  // Row provenance: index into the originating train set, -1 for fallback rows.
  std::vector<std::int64_t> sources;
  std::vector<std::string> row_ids;

  std::size_t rows() const { return keys.rows; }
  bool is_fallback(std::size_t i) const { return sources[i] < 0; }

  bool operator==(const WeightedCache&) const = default;
};

/// Per-class mean feature vectors (not renormalized) with member counts.
struct PrototypeSet {
  std::size_t num_classes = 0;
  std::size_t dim = 0;
  MatrixD prototypes;
  std::vector<std::uint64_t> counts;
};

/// Per-cache-row loss weights in [0, 1].
struct AffinityWeights {
  std::vector<double> omega;

  std::size_t rows() const { return omega.size(); }

  bool operator==(const AffinityWeights&) const = default;
};

}  // namespace ntua

#endif  // NTUA_TYPES_HPP
