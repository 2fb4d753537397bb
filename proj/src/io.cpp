#include "ntua/io.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "json.hpp"

namespace ntua {

// ── File layouts ─────────────────────────────────────────────────────────
//
// All integers and floats little-endian. Shared prefix:
//
//   magic   "NTUA"        4 bytes
//   version u32           currently 1
//   rows    u64
//
// embeddings / classifier:
//   dim     u32
//   payload rows x dim f32, row-major
//   table   rows entries of (u32 length, UTF-8 bytes)   ids / class names
//
// labels:
//   classes u32
//   payload rows x u32 class index
//
// pseudo-labels:
//   classes u32
//   tag     u8            0 student, 1 teacher, 2 synthetic
//   payload rows x (u32 label, f32 confidence)
//
// selection (rows = selected count):
//   k       u32
//   payload rows x (u32 class, u64 sample index)
//   padded  u64 count, then count x (u32 class, u32 deficiency)
//
// cache:
//   dim     u32
//   classes u32
//   alpha   f64
//   beta    f64
//   keys    rows x dim f32   (trained keys are rounded from double)
//   values  rows x u32
//   weights rows x f32
//   sources rows x i64       train-set row index, -1 for fallback
//   ids     rows entries of (u32 length, UTF-8 bytes)
//
// omega:
//   payload rows x f64
//
// Readers consume exactly the declared counts; trailing bytes are ignored.

namespace {

constexpr char kMagic[4] = {'N', 'T', 'U', 'A'};
constexpr std::uint32_t kMaxStringLength = 1u << 20;

void put_bytes(std::ostream& os, const void* p, std::size_t n) {
  os.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
}

void put_u32(std::ostream& os, std::uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  put_bytes(os, b, 4);
}

void put_u64(std::ostream& os, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  put_bytes(os, b, 8);
}

void put_i64(std::ostream& os, std::int64_t v) { put_u64(os, static_cast<std::uint64_t>(v)); }

void put_f32(std::ostream& os, float v) { put_u32(os, std::bit_cast<std::uint32_t>(v)); }

void put_f64(std::ostream& os, double v) { put_u64(os, std::bit_cast<std::uint64_t>(v)); }

void put_string(std::ostream& os, const std::string& s) {
  if (s.size() > kMaxStringLength) throw IoError("string field too long to serialize");
  put_u32(os, static_cast<std::uint32_t>(s.size()));
  put_bytes(os, s.data(), s.size());
}

class Writer {
 public:
  explicit Writer(const std::filesystem::path& path) : path_(path), out_(path, std::ios::binary | std::ios::trunc) {
    if (!out_) throw IoError("cannot open '" + path.string() + "' for writing");
  }

  std::ostream& os() { return out_; }

  void finish() {
    out_.flush();
    if (!out_) throw IoError("write failed for '" + path_.string() + "'");
  }

 private:
  std::filesystem::path path_;
  std::ofstream out_;
};

class Reader {
 public:
  explicit Reader(const std::filesystem::path& path) : path_(path), in_(path, std::ios::binary) {
    if (!in_) throw IoError("cannot open '" + path.string() + "' for reading");
  }

  void bytes(void* dst, std::size_t n) {
    in_.read(static_cast<char*>(dst), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in_.gcount()) != n) {
      throw IoError("truncated file '" + path_.string() + "'");
    }
  }

  std::uint8_t u8() {
    unsigned char b;
    bytes(&b, 1);
    return b;
  }

  std::uint32_t u32() {
    unsigned char b[4];
    bytes(b, 4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
    return v;
  }

  std::uint64_t u64() {
    unsigned char b[8];
    bytes(b, 8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return v;
  }

  std::int64_t i64() { return static_cast<std::int64_t>(u64()); }
  float f32() { return std::bit_cast<float>(u32()); }
  double f64() { return std::bit_cast<double>(u64()); }

  std::string str() {
    const std::uint32_t n = u32();
    if (n > kMaxStringLength) throw IoError("corrupt string length in '" + path_.string() + "'");
    std::string s(n, '\0');
    if (n > 0) bytes(s.data(), n);
    return s;
  }

  // magic + version check, returns the declared row count.
  std::uint64_t header() {
    char magic[4];
    bytes(magic, 4);
    if (std::memcmp(magic, kMagic, 4) != 0) {
      throw IoError("bad magic in '" + path_.string() + "': not an NTUA container");
    }
    const std::uint32_t version = u32();
    if (version != kFormatVersion) {
      throw IoError("unsupported format version " + std::to_string(version) + " in '" +
                    path_.string() + "'");
    }
    return u64();
  }

  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
  std::ifstream in_;
};

void put_header(std::ostream& os, std::uint64_t rows) {
  put_bytes(os, kMagic, 4);
  put_u32(os, kFormatVersion);
  put_u64(os, rows);
}

void put_matrix_f32(std::ostream& os, const MatrixF& m) {
  for (float v : m.data) put_f32(os, v);
}

MatrixF get_matrix_f32(Reader& r, std::size_t rows, std::size_t cols) {
  MatrixF m(rows, cols);
  for (auto& v : m.data) v = r.f32();
  return m;
}

}  // namespace

void write_embeddings(const EmbeddingSet& set, const std::filesystem::path& path) {
  set.validate();
  Writer w(path);
  put_header(w.os(), set.rows());
  put_u32(w.os(), static_cast<std::uint32_t>(set.dim));
  put_matrix_f32(w.os(), set.features);
  for (const auto& id : set.sample_ids) put_string(w.os(), id);
  w.finish();
}

EmbeddingSet read_embeddings(const std::filesystem::path& path) {
  Reader r(path);
  const std::uint64_t rows = r.header();
  const std::uint32_t dim = r.u32();
  EmbeddingSet set;
  set.dim = dim;
  set.features = get_matrix_f32(r, rows, dim);
  set.sample_ids.reserve(rows);
  for (std::uint64_t i = 0; i < rows; ++i) set.sample_ids.push_back(r.str());
  set.validate();
  return set;
}

void write_classifier(const ClassifierWeights& w, const std::filesystem::path& path) {
  w.validate();
  Writer out(path);
  put_header(out.os(), w.num_classes());
  put_u32(out.os(), static_cast<std::uint32_t>(w.dim));
  put_matrix_f32(out.os(), w.matrix);
  for (const auto& name : w.class_names) put_string(out.os(), name);
  out.finish();
}

ClassifierWeights read_classifier(const std::filesystem::path& path) {
  Reader r(path);
  const std::uint64_t rows = r.header();
  const std::uint32_t dim = r.u32();
  ClassifierWeights w;
  w.dim = dim;
  w.matrix = get_matrix_f32(r, rows, dim);
  w.class_names.reserve(rows);
  for (std::uint64_t i = 0; i < rows; ++i) w.class_names.push_back(r.str());
  w.validate();
  return w;
}

void write_labels(const GroundTruthLabels& labels, const std::filesystem::path& path) {
  labels.validate();
  Writer w(path);
  put_header(w.os(), labels.rows());
  put_u32(w.os(), static_cast<std::uint32_t>(labels.num_classes));
  for (std::uint32_t y : labels.labels) put_u32(w.os(), y);
  w.finish();
}

GroundTruthLabels read_labels(const std::filesystem::path& path) {
  Reader r(path);
  const std::uint64_t rows = r.header();
  GroundTruthLabels labels;
  labels.num_classes = r.u32();
  labels.labels.reserve(rows);
  for (std::uint64_t i = 0; i < rows; ++i) labels.labels.push_back(r.u32());
  labels.validate();
  return labels;
}

void write_pseudo_labels(const PseudoLabelSet& pl, const std::filesystem::path& path) {
  pl.validate();
  Writer w(path);
  put_header(w.os(), pl.rows());
  put_u32(w.os(), static_cast<std::uint32_t>(pl.num_classes));
  w.os().put(static_cast<char>(pl.source_tag));
  for (std::size_t i = 0; i < pl.rows(); ++i) {
    put_u32(w.os(), pl.labels[i]);
    put_f32(w.os(), pl.confidences[i]);
  }
  w.finish();
}

PseudoLabelSet read_pseudo_labels(const std::filesystem::path& path) {
  Reader r(path);
  const std::uint64_t rows = r.header();
  PseudoLabelSet pl;
  pl.num_classes = r.u32();
  const std::uint8_t tag = r.u8();
  if (tag > 2) throw IoError("corrupt source tag in '" + path.string() + "'");
  pl.source_tag = static_cast<SourceTag>(tag);
  pl.labels.reserve(rows);
  pl.confidences.reserve(rows);
  for (std::uint64_t i = 0; i < rows; ++i) {
    pl.labels.push_back(r.u32());
    pl.confidences.push_back(r.f32());
  }
  pl.validate();
  return pl;
}

void write_selection(const ShotSelection& sel, const std::filesystem::path& path) {
  Writer w(path);
  put_header(w.os(), sel.selected.size());
  put_u32(w.os(), static_cast<std::uint32_t>(sel.shots_per_class));
  for (const auto& s : sel.selected) {
    put_u32(w.os(), s.class_index);
    put_u64(w.os(), s.sample_index);
  }
  put_u64(w.os(), sel.padded.size());
  for (const auto& p : sel.padded) {
    put_u32(w.os(), p.class_index);
    put_u32(w.os(), p.deficiency);
  }
  w.finish();
}

ShotSelection read_selection(const std::filesystem::path& path) {
  Reader r(path);
  const std::uint64_t rows = r.header();
  ShotSelection sel;
  sel.shots_per_class = r.u32();
  sel.selected.reserve(rows);
  for (std::uint64_t i = 0; i < rows; ++i) {
    ShotSelection::SelectedRow row;
    row.class_index = r.u32();
    row.sample_index = r.u64();
    sel.selected.push_back(row);
  }
  const std::uint64_t padded = r.u64();
  sel.padded.reserve(padded);
  for (std::uint64_t i = 0; i < padded; ++i) {
    ShotSelection::PaddedClass p;
    p.class_index = r.u32();
    p.deficiency = r.u32();
    sel.padded.push_back(p);
  }
  return sel;
}

void write_cache(const WeightedCache& cache, const std::filesystem::path& path) {
  const std::size_t n = cache.rows();
  if (cache.values.size() != n || cache.weights.size() != n || cache.sources.size() != n ||
      cache.row_ids.size() != n) {
    throw ValidationError("cache: per-row arrays do not match the key matrix");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (cache.values[i] >= cache.num_classes) {
      throw ValidationError("cache: row " + std::to_string(i) + " has class " +
                            std::to_string(cache.values[i]) + " out of range");
    }
    const float c = cache.weights[i];
    if (!(c > 0.0f) || c > 1.0f) {
      throw ValidationError("cache: row " + std::to_string(i) + " has weight " +
                            std::to_string(c) + ", expected a value in (0, 1]");
    }
  }
  Writer w(path);
  put_header(w.os(), n);
  put_u32(w.os(), static_cast<std::uint32_t>(cache.dim));
  put_u32(w.os(), static_cast<std::uint32_t>(cache.num_classes));
  put_f64(w.os(), cache.alpha);
  put_f64(w.os(), cache.beta);
  for (double v : cache.keys.data) put_f32(w.os(), static_cast<float>(v));
  for (std::uint32_t v : cache.values) put_u32(w.os(), v);
  for (float v : cache.weights) put_f32(w.os(), v);
  for (std::int64_t s : cache.sources) put_i64(w.os(), s);
  for (const auto& id : cache.row_ids) put_string(w.os(), id);
  w.finish();
}

WeightedCache read_cache(const std::filesystem::path& path) {
  Reader r(path);
  const std::uint64_t rows = r.header();
  WeightedCache cache;
  cache.dim = r.u32();
  cache.num_classes = r.u32();
  cache.alpha = r.f64();
  cache.beta = r.f64();
  cache.keys = MatrixD(rows, cache.dim);
  for (auto& v : cache.keys.data) v = static_cast<double>(r.f32());
  cache.values.reserve(rows);
  for (std::uint64_t i = 0; i < rows; ++i) cache.values.push_back(r.u32());
  cache.weights.reserve(rows);
  for (std::uint64_t i = 0; i < rows; ++i) cache.weights.push_back(r.f32());
  cache.sources.reserve(rows);
  for (std::uint64_t i = 0; i < rows; ++i) cache.sources.push_back(r.i64());
  cache.row_ids.reserve(rows);
  for (std::uint64_t i = 0; i < rows; ++i) cache.row_ids.push_back(r.str());
  for (std::uint64_t i = 0; i < rows; ++i) {
    if (cache.values[i] >= cache.num_classes) {
      throw ValidationError("cache: row " + std::to_string(i) + " has class " +
                            std::to_string(cache.values[i]) + " out of range");
    }
    const float c = cache.weights[i];
    if (!(c > 0.0f) || c > 1.0f) {
      throw ValidationError("cache: row " + std::to_string(i) + " has weight " +
                            std::to_string(c) + ", expected a value in (0, 1]");
    }
  }
  return cache;
}

void write_omega(const AffinityWeights& omega, const std::filesystem::path& path) {
  for (std::size_t i = 0; i < omega.rows(); ++i) {
    const double v = omega.omega[i];
    if (!(v >= 0.0) || v > 1.0) {
      throw ValidationError("omega: row " + std::to_string(i) + " has value " +
                            std::to_string(v) + ", expected a value in [0, 1]");
    }
  }
  Writer w(path);
  put_header(w.os(), omega.rows());
  for (double v : omega.omega) put_f64(w.os(), v);
  w.finish();
}

AffinityWeights read_omega(const std::filesystem::path& path) {
  Reader r(path);
  const std::uint64_t rows = r.header();
  AffinityWeights omega;
  omega.omega.reserve(rows);
  for (std::uint64_t i = 0; i < rows; ++i) omega.omega.push_back(r.f64());
  for (std::size_t i = 0; i < omega.rows(); ++i) {
    const double v = omega.omega[i];
    if (!(v >= 0.0) || v > 1.0) {
      throw ValidationError("omega: row " + std::to_string(i) + " has value " +
                            std::to_string(v) + ", expected a value in [0, 1]");
    }
  }
  return omega;
}

namespace {

// Every row-bearing container keeps its row count as a u64 at offset 8.
std::uint64_t read_row_count(const std::filesystem::path& path) {
  Reader r(path);
  return r.header();
}

}  // namespace

void write_manifest(const BundleManifest& manifest, const std::filesystem::path& path) {
  nlohmann::ordered_json j;
  j["format_version"] = manifest.format_version;
  j["dim"] = manifest.dim;
  j["num_classes"] = manifest.num_classes;
  j["class_names"] = manifest.class_names;
  nlohmann::ordered_json splits;
  for (const auto& [name, entry] : manifest.splits) {
    splits[name] = {{"path", entry.path}, {"rows", entry.rows}};
  }
  j["splits"] = splits;
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << j.dump(2) << '\n';
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

BundleManifest read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw IoError("cannot parse manifest '" + path.string() + "': " + e.what());
  }
  BundleManifest manifest;
  try {
    manifest.format_version = j.at("format_version").get<std::uint32_t>();
    manifest.dim = j.at("dim").get<std::uint32_t>();
    manifest.num_classes = j.at("num_classes").get<std::uint32_t>();
    manifest.class_names = j.at("class_names").get<std::vector<std::string>>();
    for (const auto& [name, entry] : j.at("splits").items()) {
      SplitEntry split;
      split.path = entry.at("path").get<std::string>();
      split.rows = entry.at("rows").get<std::uint64_t>();
      manifest.splits[name] = split;
    }
  } catch (const nlohmann::json::exception& e) {
    throw IoError("malformed manifest '" + path.string() + "': " + e.what());
  }
  if (manifest.format_version != kFormatVersion) {
    throw IoError("unsupported manifest format version " +
                  std::to_string(manifest.format_version));
  }
  const auto base = path.parent_path();
  for (const auto& [name, entry] : manifest.splits) {
    const auto file = base / entry.path;
    if (!std::filesystem::exists(file)) {
      throw ValidationError("manifest split '" + name + "' references missing file '" +
                            file.string() + "'");
    }
    const std::uint64_t rows = read_row_count(file);
    if (rows != entry.rows) {
      throw ValidationError("manifest split '" + name + "' declares " +
                            std::to_string(entry.rows) + " rows but '" + file.string() +
                            "' holds " + std::to_string(rows));
    }
  }
  return manifest;
}

}  // namespace ntua
