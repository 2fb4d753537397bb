#include "ntua/types.hpp"

#include <unordered_set>

namespace ntua {

namespace {

void check_unit_rows(const MatrixF& m, const char* what) {
  const std::size_t bad = first_non_unit_row(m);
  if (bad != npos) {
    double s = 0.0;
    for (float v : m.row(bad)) s += static_cast<double>(v) * static_cast<double>(v);
    throw ValidationError(std::string(what) + ": row " + std::to_string(bad) +
                          " has L2 norm " + std::to_string(std::sqrt(s)) +
                          ", expected 1 within " + std::to_string(kUnitNormTolerance));
  }
}

}  // namespace

void EmbeddingSet::validate() const {
  if (features.cols != dim) {
    throw ValidationError("embedding set: matrix has " + std::to_string(features.cols) +
                          " columns but dim is " + std::to_string(dim));
  }
  if (features.data.size() != features.rows * features.cols) {
    throw ValidationError("embedding set: matrix storage does not match its declared shape");
  }
  if (sample_ids.size() != features.rows) {
    throw ValidationError("embedding set: " + std::to_string(sample_ids.size()) +
                          " sample ids for " + std::to_string(features.rows) + " rows");
  }
  check_unit_rows(features, "embedding set");
}

void ClassifierWeights::validate() const {
  if (matrix.cols != dim) {
    throw ValidationError("classifier: matrix has " + std::to_string(matrix.cols) +
                          " columns but dim is " + std::to_string(dim));
  }
  if (matrix.data.size() != matrix.rows * matrix.cols) {
    throw ValidationError("classifier: matrix storage does not match its declared shape");
  }
  if (class_names.size() != matrix.rows) {
    throw ValidationError("classifier: " + std::to_string(class_names.size()) +
                          " class names for " + std::to_string(matrix.rows) + " rows");
  }
  std::unordered_set<std::string> seen;
  for (const auto& name : class_names) {
    if (!seen.insert(name).second) {
      throw ValidationError("classifier: duplicate class name '" + name + "'");
    }
  }
  check_unit_rows(matrix, "classifier");
}

void GroundTruthLabels::validate() const {
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] >= num_classes) {
      throw ValidationError("labels: row " + std::to_string(i) + " has class " +
                            std::to_string(labels[i]) + " but only " +
                            std::to_string(num_classes) + " classes exist");
    }
  }
}

void PseudoLabelSet::validate() const {
  if (confidences.size() != labels.size()) {
    throw ValidationError("pseudo labels: " + std::to_string(confidences.size()) +
                          " confidences for " + std::to_string(labels.size()) + " labels");
  }
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] >= num_classes) {
      throw ValidationError("pseudo labels: row " + std::to_string(i) + " has class " +
                            std::to_string(labels[i]) + " but only " +
                            std::to_string(num_classes) + " classes exist");
    }
    const float c = confidences[i];
    if (!(c > 0.0f) || c > 1.0f) {
      throw ValidationError("pseudo labels: row " + std::to_string(i) + " has confidence " +
                            std::to_string(c) + ", expected a value in (0, 1]");
    }
  }
}

const char* to_string(SourceTag tag) {
  switch (tag) {
    case SourceTag::student: return "student";
    case SourceTag::teacher: return "teacher";
    case SourceTag::synthetic: return "synthetic";
  }
  return "unknown";
}

}  // namespace ntua
