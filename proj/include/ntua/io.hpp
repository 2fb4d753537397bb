#ifndef NTUA_IO_HPP
#define NTUA_IO_HPP

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

#include "ntua/types.hpp"

namespace ntua {

inline constexpr std::uint32_t kFormatVersion = 1;

// Binary container files, magic "NTUA", little-endian throughout.
// See io.cpp for the per-type layouts.

void write_embeddings(const EmbeddingSet& set, const std::filesystem::path& path);
EmbeddingSet read_embeddings(const std::filesystem::path& path);

void write_classifier(const ClassifierWeights& w, const std::filesystem::path& path);
ClassifierWeights read_classifier(const std::filesystem::path& path);

void write_labels(const GroundTruthLabels& labels, const std::filesystem::path& path);
GroundTruthLabels read_labels(const std::filesystem::path& path);

void write_pseudo_labels(const PseudoLabelSet& pl, const std::filesystem::path& path);
PseudoLabelSet read_pseudo_labels(const std::filesystem::path& path);

void write_selection(const ShotSelection& sel, const std::filesystem::path& path);
ShotSelection read_selection(const std::filesystem::path& path);

void write_cache(const WeightedCache& cache, const std::filesystem::path& path);
WeightedCache read_cache(const std::filesystem::path& path);

void write_omega(const AffinityWeights& omega, const std::filesystem::path& path);
AffinityWeights read_omega(const std::filesystem::path& path);

/// Human-readable bundle descriptor: which split lives in which file.
/// Paths are stored relative to the manifest's own directory.
struct SplitEntry {
  std::string path;
  std::uint64_t rows = 0;
};

struct BundleManifest {
  std::uint32_t format_version = kFormatVersion;
  std::uint32_t dim = 0;
  std::uint32_t num_classes = 0;
  std::vector<std::string> class_names;
  std::map<std::string, SplitEntry> splits;
};

void write_manifest(const BundleManifest& manifest, const std::filesystem::path& path);

// Validates that every referenced file exists and its header row count
// matches the manifest entry.
BundleManifest read_manifest(const std::filesystem::path& path);

}  // namespace ntua

#endif  // NTUA_IO_HPP
