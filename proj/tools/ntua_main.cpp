#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "ntua/cache.hpp"
#include "ntua/eval.hpp"
#include "ntua/io.hpp"
#include "ntua/prototypes.hpp"
#include "ntua/pseudo_label.hpp"
#include "ntua/synthetic.hpp"
#include "ntua/trainer.hpp"
#include "ntua/types.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

constexpr const char* kVersion = "ntua 1.0.0 (format version 1)";

enum class LogLevel { quiet = 0, info = 1, debug = 2 };

LogLevel g_log_level = LogLevel::info;

void log_info(const std::string& msg) {
  if (g_log_level >= LogLevel::info) std::cerr << "ntua: " << msg << '\n';
}

// Resolved-config echo: every subcommand prints one of these to stdout so
// batch pipelines can record exactly what ran.
void echo_config(const ordered_json& j) { std::cout << j.dump(2) << '\n'; }

ntua::SourceTag parse_tag(const std::string& s) {
  if (s == "student") return ntua::SourceTag::student;
  if (s == "teacher") return ntua::SourceTag::teacher;
  return ntua::SourceTag::synthetic;
}

// Plain-text matrix: one row per line, whitespace-separated decimals.
ntua::MatrixF read_text_matrix(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ntua::IoError("cannot open '" + path.string() + "' for reading");
  std::vector<std::vector<float>> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ls(line);
    std::vector<float> row;
    double v;
    while (ls >> v) row.push_back(static_cast<float>(v));
    if (!ls.eof()) {
      throw ntua::ValidationError("line " + std::to_string(line_no) + " of '" + path.string() +
                                  "' is not a decimal row");
    }
    if (row.empty()) continue;  // blank lines tolerated
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw ntua::ValidationError("line " + std::to_string(line_no) + " of '" + path.string() +
                                  "' has " + std::to_string(row.size()) +
                                  " columns, expected " + std::to_string(rows.front().size()));
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ntua::ValidationError("'" + path.string() + "' holds no rows");
  ntua::MatrixF m(rows.size(), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    std::copy(rows[i].begin(), rows[i].end(), m.row(i).begin());
  }
  return m;
}

void normalize_rows(ntua::MatrixF& m) {
  for (std::size_t i = 0; i < m.rows; ++i) {
    auto row = m.row(i);
    double s = 0.0;
    for (float v : row) s += static_cast<double>(v) * static_cast<double>(v);
    s = std::sqrt(s);
    if (!(s > 0.0)) {
      throw ntua::ValidationError("row " + std::to_string(i) + " is all zero, cannot normalize");
    }
    // Second pass over the float-rounded values so the stored row lands
    // inside the norm band.
    std::vector<double> wide(row.size());
    for (std::size_t j = 0; j < row.size(); ++j) wide[j] = static_cast<double>(row[j]) / s;
    double s2 = 0.0;
    for (double v : wide) {
      const double r = static_cast<double>(static_cast<float>(v));
      s2 += r * r;
    }
    s2 = std::sqrt(s2);
    for (std::size_t j = 0; j < row.size(); ++j) row[j] = static_cast<float>(wide[j] / s2);
  }
}

std::vector<std::string> read_lines(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ntua::IoError("cannot open '" + path.string() + "' for reading");
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  return lines;
}

fs::path split_path(const ntua::BundleManifest& manifest, const fs::path& manifest_path,
                    const std::string& name) {
  const auto it = manifest.splits.find(name);
  if (it == manifest.splits.end()) {
    throw ntua::ValidationError("bundle manifest lacks the '" + name + "' split");
  }
  return manifest_path.parent_path() / it->second.path;
}

// ── Flag state ───────────────────────────────────────────────────────────

struct Options {
  std::uint64_t seed = 0;
  int threads = 1;
  std::string log_level = "info";

  // ingest
  std::string in_text, in_kind = "embeddings";
  bool in_normalize = false;
  std::string in_ids, in_names;

  // shared file flags
  std::string features, classifier, pl, sel, teacher_pl, teacher_features, cache, omega, labels;
  std::string out, report;

  // pseudo-label
  double temperature = ntua::kDefaultTemperature;
  std::string tag = "student";

  // select / build-cache
  std::size_t k = 16;
  double alpha = ntua::kDefaultAlpha;
  double beta = ntua::kDefaultBeta;

  // train
  ntua::TrainConfig train;
  bool no_cache_weights = false;

  // eval
  bool weights_at_inference = false;
  std::string split = "test";

  // ablate
  std::string bundle;
  std::size_t seeds = 20;

  // synth
  ntua::SynthSpec synth;
  bool no_nested = false;
};

int run_ingest(const Options& opt) {
  ntua::MatrixF m = read_text_matrix(opt.in_text);
  if (opt.in_normalize) normalize_rows(m);
  const ordered_json echo{{"subcommand", "ingest"}, {"input", opt.in_text},
                          {"kind", opt.in_kind},    {"normalize", opt.in_normalize},
                          {"rows", m.rows},         {"dim", m.cols},
                          {"out", opt.out}};
  if (opt.in_kind == "classifier") {
    ntua::ClassifierWeights w;
    w.dim = m.cols;
    w.matrix = std::move(m);
    if (!opt.in_names.empty()) {
      w.class_names = read_lines(opt.in_names);
    } else {
      for (std::size_t i = 0; i < w.matrix.rows; ++i) {
        w.class_names.push_back("class" + std::to_string(i));
      }
    }
    ntua::write_classifier(w, opt.out);
  } else {
    ntua::EmbeddingSet set;
    set.dim = m.cols;
    set.features = std::move(m);
    if (!opt.in_ids.empty()) {
      set.sample_ids = read_lines(opt.in_ids);
    } else {
      for (std::size_t i = 0; i < set.features.rows; ++i) {
        set.sample_ids.push_back("row" + std::to_string(i));
      }
    }
    ntua::write_embeddings(set, opt.out);
  }
  echo_config(echo);
  log_info("wrote " + opt.out);
  return 0;
}

int run_pseudo_label(const Options& opt) {
  const auto features = ntua::read_embeddings(opt.features);
  const auto w = ntua::read_classifier(opt.classifier);
  const auto pl = ntua::make_pseudo_labels(features, w, opt.temperature, parse_tag(opt.tag));
  ntua::write_pseudo_labels(pl, opt.out);
  echo_config({{"subcommand", "pseudo-label"},
               {"features", opt.features},
               {"classifier", opt.classifier},
               {"temperature", opt.temperature},
               {"tag", opt.tag},
               {"rows", pl.rows()},
               {"out", opt.out}});
  log_info("pseudo-labeled " + std::to_string(pl.rows()) + " rows");
  return 0;
}

int run_select(const Options& opt) {
  const auto pl = ntua::read_pseudo_labels(opt.pl);
  const auto sel = ntua::select_top_k(pl, opt.k);
  ntua::write_selection(sel, opt.out);
  echo_config({{"subcommand", "select"},
               {"pl", opt.pl},
               {"k", opt.k},
               {"selected", sel.selected.size()},
               {"padded_classes", sel.padded.size()},
               {"out", opt.out}});
  log_info("selected " + std::to_string(sel.selected.size()) + " rows, " +
           std::to_string(sel.padded.size()) + " classes padded");
  return 0;
}

int run_build_cache(const Options& opt) {
  const auto sel = ntua::read_selection(opt.sel);
  const auto features = ntua::read_embeddings(opt.features);
  const auto pl = ntua::read_pseudo_labels(opt.pl);
  const auto w = ntua::read_classifier(opt.classifier);
  const auto fb = ntua::fallback_rows(w, sel);
  const auto cache = ntua::build_cache(sel, features, pl, fb, opt.alpha, opt.beta);
  ntua::write_cache(cache, opt.out);
  echo_config({{"subcommand", "build-cache"},
               {"sel", opt.sel},
               {"features", opt.features},
               {"pl", opt.pl},
               {"classifier", opt.classifier},
               {"alpha", opt.alpha},
               {"beta", opt.beta},
               {"rows", cache.rows()},
               {"fallback_rows", fb.rows()},
               {"out", opt.out}});
  log_info("built cache with " + std::to_string(cache.rows()) + " rows (" +
           std::to_string(fb.rows()) + " fallback)");
  return 0;
}

int run_refine(const Options& opt) {
  const auto cache = ntua::read_cache(opt.cache);
  const auto teacher = ntua::read_pseudo_labels(opt.teacher_pl);
  const auto refined = ntua::refine_cache(cache, teacher);
  ntua::write_cache(refined, opt.out);
  echo_config({{"subcommand", "refine"},
               {"cache", opt.cache},
               {"teacher_pl", opt.teacher_pl},
               {"rows", refined.rows()},
               {"out", opt.out}});
  log_info("refined " + std::to_string(refined.rows()) + " cache rows");
  return 0;
}

int run_weights(const Options& opt) {
  const auto teacher_features = ntua::read_embeddings(opt.teacher_features);
  const auto teacher = ntua::read_pseudo_labels(opt.teacher_pl);
  const auto cache = ntua::read_cache(opt.cache);
  const auto protos = ntua::compute_prototypes(teacher_features, teacher, cache);
  const auto omega = ntua::affinity_weights(teacher_features, teacher, cache, protos);
  ntua::write_omega(omega, opt.out);
  echo_config({{"subcommand", "weights"},
               {"teacher_features", opt.teacher_features},
               {"teacher_pl", opt.teacher_pl},
               {"cache", opt.cache},
               {"rows", omega.rows()},
               {"out", opt.out}});
  log_info("computed " + std::to_string(omega.rows()) + " loss weights");
  return 0;
}

int run_train(const Options& opt) {
  const auto cache = ntua::read_cache(opt.cache);
  const auto features = ntua::read_embeddings(opt.features);
  const auto w = ntua::read_classifier(opt.classifier);

  ntua::TrainConfig cfg = opt.train;
  cfg.seed = opt.seed;
  cfg.use_weights_in_loss = !opt.no_cache_weights;
  cfg.include_omega = !opt.omega.empty();
  ntua::AffinityWeights omega;
  if (cfg.include_omega) omega = ntua::read_omega(opt.omega);

  auto [trained, report] = ntua::train_keys(cache, features, cache.values, omega, w, cfg);
  ntua::write_cache(trained, opt.out);
  if (!opt.report.empty()) ntua::write_train_report(report, opt.report);

  echo_config({{"subcommand", "train"},
               {"cache", opt.cache},
               {"features", opt.features},
               {"classifier", opt.classifier},
               {"omega", opt.omega},
               {"epochs", cfg.epochs},
               {"batch_size", cfg.batch_size},
               {"base_lr", cfg.base_lr},
               {"weight_decay", cfg.weight_decay},
               {"use_weights_in_loss", cfg.use_weights_in_loss},
               {"include_omega", cfg.include_omega},
               {"logit_scale", cfg.logit_scale},
               {"seed", cfg.seed},
               {"final_loss", report.final_loss},
               {"out", opt.out}});
  std::ostringstream msg;
  msg << "trained " << trained.rows() << " keys, final loss " << report.final_loss << " in "
      << report.wall_seconds << "s";
  log_info(msg.str());
  return 0;
}

int run_eval(const Options& opt) {
  const auto cache = ntua::read_cache(opt.cache);
  const auto features = ntua::read_embeddings(opt.features);
  const auto labels = ntua::read_labels(opt.labels);
  const auto w = ntua::read_classifier(opt.classifier);
  const auto report =
      ntua::evaluate(cache, features, labels, w, opt.weights_at_inference, opt.split);
  ntua::write_eval_report(report, opt.out);
  echo_config({{"subcommand", "eval"},
               {"cache", opt.cache},
               {"features", opt.features},
               {"labels", opt.labels},
               {"classifier", opt.classifier},
               {"use_weights_at_inference", opt.weights_at_inference},
               {"split", opt.split},
               {"top1", report.top1},
               {"out", opt.out}});
  std::ostringstream msg;
  msg << "top1 " << report.top1 << " over " << report.rows << " rows";
  log_info(msg.str());
  return 0;
}

int run_ablate(const Options& opt) {
  const auto manifest = ntua::read_manifest(opt.bundle);
  const fs::path mp = opt.bundle;
  const auto w = ntua::read_classifier(split_path(manifest, mp, "classifier"));
  const auto student_f = ntua::read_embeddings(split_path(manifest, mp, "train_student"));
  const auto teacher_f = ntua::read_embeddings(split_path(manifest, mp, "train_teacher"));
  const auto student_pl = ntua::read_pseudo_labels(split_path(manifest, mp, "student_pl"));
  const auto teacher_pl = ntua::read_pseudo_labels(split_path(manifest, mp, "teacher_pl"));
  const auto test_f = ntua::read_embeddings(split_path(manifest, mp, "test"));
  const auto test_y = ntua::read_labels(split_path(manifest, mp, "test_labels"));

  ntua::AblationSettings settings;
  settings.shots = opt.k;
  settings.alpha = opt.alpha;
  settings.beta = opt.beta;
  settings.train = opt.train;
  // Path-free descriptor so reports from different directories stay
  // byte-comparable.
  settings.descriptor = "N" + std::to_string(manifest.num_classes) + "-d" +
                        std::to_string(manifest.dim) + "-rows" +
                        std::to_string(student_f.rows());

  std::vector<ntua::AblationResult> results;
  for (std::size_t i = 0; i < opt.seeds; ++i) {
    settings.train.seed = opt.seed + i;
    results.push_back(ntua::run_ablation(student_f, student_pl, teacher_f, teacher_pl, test_f,
                                         test_y, w, settings));
    std::ostringstream msg;
    msg << "seed " << settings.train.seed << ": kc " << results.back().kc << ", kcr "
        << results.back().kcr << ", kcr_ckc " << results.back().kcr_ckc << ", kcr_ckc_w "
        << results.back().kcr_ckc_w;
    log_info(msg.str());
  }
  ntua::write_ablation_report(results, opt.out);
  echo_config({{"subcommand", "ablate"},
               {"bundle", opt.bundle},
               {"seeds", opt.seeds},
               {"first_seed", opt.seed},
               {"shots", opt.k},
               {"alpha", opt.alpha},
               {"beta", opt.beta},
               {"epochs", opt.train.epochs},
               {"batch_size", opt.train.batch_size},
               {"base_lr", opt.train.base_lr},
               {"out", opt.out}});
  return 0;
}

int run_synth(const Options& opt) {
  ntua::SynthSpec spec = opt.synth;
  spec.seed = opt.seed;
  spec.nested_noise = !opt.no_nested;
  const auto bundle = ntua::generate(spec);

  const fs::path dir = opt.out;
  fs::create_directories(dir);
  ntua::write_classifier(bundle.classifier, dir / "classifier.bin");
  ntua::write_embeddings(bundle.train, dir / "train_student.bin");
  ntua::write_embeddings(bundle.teacher_train, dir / "train_teacher.bin");
  ntua::write_labels(bundle.train_truth, dir / "train_truth.bin");
  ntua::write_pseudo_labels(bundle.student_pl, dir / "student_pl.bin");
  ntua::write_pseudo_labels(bundle.teacher_pl, dir / "teacher_pl.bin");
  ntua::write_embeddings(bundle.test, dir / "test.bin");
  ntua::write_labels(bundle.test_labels, dir / "test_labels.bin");

  ntua::BundleManifest manifest;
  manifest.dim = static_cast<std::uint32_t>(spec.dim);
  manifest.num_classes = static_cast<std::uint32_t>(spec.num_classes);
  manifest.class_names = bundle.classifier.class_names;
  manifest.splits["classifier"] = {"classifier.bin", bundle.classifier.num_classes()};
  manifest.splits["train_student"] = {"train_student.bin", bundle.train.rows()};
  manifest.splits["train_teacher"] = {"train_teacher.bin", bundle.teacher_train.rows()};
  manifest.splits["train_truth"] = {"train_truth.bin", bundle.train_truth.rows()};
  manifest.splits["student_pl"] = {"student_pl.bin", bundle.student_pl.rows()};
  manifest.splits["teacher_pl"] = {"teacher_pl.bin", bundle.teacher_pl.rows()};
  manifest.splits["test"] = {"test.bin", bundle.test.rows()};
  manifest.splits["test_labels"] = {"test_labels.bin", bundle.test_labels.rows()};
  ntua::write_manifest(manifest, dir / "manifest.json");

  echo_config({{"subcommand", "synth"},
               {"classes", spec.num_classes},
               {"shots", spec.shots},
               {"dim", spec.dim},
               {"test_per_class", spec.test_per_class},
               {"kappa", spec.kappa},
               {"eta_s", spec.eta_s},
               {"eta_t", spec.eta_t},
               {"rho", spec.rho},
               {"nested", spec.nested_noise},
               {"seed", spec.seed},
               {"out", opt.out}});
  log_info("generated bundle in " + opt.out);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"noise-tolerant weighted key-value cache adapter"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  Options opt;
  app.add_option("--seed", opt.seed, "random seed for anything stochastic")
      ->capture_default_str();
  app.add_option("--threads", opt.threads, "internal parallelism cap")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app.add_option("--log-level", opt.log_level, "stderr verbosity")
      ->check(CLI::IsMember({"quiet", "info", "debug"}))
      ->capture_default_str();

  auto* ingest = app.add_subcommand("ingest", "convert a plain-text matrix to binary");
  ingest->add_option("--input", opt.in_text, "text matrix, one row per line")->required();
  ingest->add_option("--kind", opt.in_kind, "embeddings or classifier")
      ->check(CLI::IsMember({"embeddings", "classifier"}))
      ->capture_default_str();
  ingest->add_flag("--normalize", opt.in_normalize, "L2-normalize rows before writing");
  ingest->add_option("--ids", opt.in_ids, "file with one sample id per line");
  ingest->add_option("--names", opt.in_names, "file with one class name per line");
  ingest->add_option("--out", opt.out, "output file")->required();

  auto* pseudo = app.add_subcommand("pseudo-label", "classify embeddings with the zero-shot matrix");
  pseudo->add_option("--features", opt.features)->required();
  pseudo->add_option("--classifier", opt.classifier)->required();
  pseudo->add_option("--temperature", opt.temperature, "softmax temperature")
      ->capture_default_str();
  pseudo->add_option("--tag", opt.tag, "provenance tag for the output")
      ->check(CLI::IsMember({"student", "teacher", "synthetic"}))
      ->capture_default_str();
  pseudo->add_option("--out", opt.out)->required();

  auto* select = app.add_subcommand("select", "pick the top-k confident samples per class");
  select->add_option("--pl", opt.pl, "pseudo-label file")->required();
  select->add_option("--k", opt.k, "shots per class")->required();
  select->add_option("--out", opt.out)->required();

  auto* build = app.add_subcommand("build-cache", "assemble the weighted key-value cache");
  build->add_option("--sel", opt.sel, "selection file")->required();
  build->add_option("--features", opt.features)->required();
  build->add_option("--pl", opt.pl)->required();
  build->add_option("--classifier", opt.classifier)->required();
  build->add_option("--alpha", opt.alpha, "cache-term scale")->capture_default_str();
  build->add_option("--beta", opt.beta, "affinity sharpness")->capture_default_str();
  build->add_option("--out", opt.out)->required();

  auto* refine = app.add_subcommand("refine", "swap in teacher labels and confidences");
  refine->add_option("--cache", opt.cache)->required();
  refine->add_option("--teacher-pl", opt.teacher_pl)->required();
  refine->add_option("--out", opt.out)->required();

  auto* weights = app.add_subcommand("weights", "prototype-affinity loss weights");
  weights->add_option("--teacher-features", opt.teacher_features)->required();
  weights->add_option("--teacher-pl", opt.teacher_pl)->required();
  weights->add_option("--cache", opt.cache)->required();
  weights->add_option("--out", opt.out)->required();

  auto* train = app.add_subcommand("train", "fine-tune the cache keys");
  train->add_option("--cache", opt.cache)->required();
  train->add_option("--features", opt.features, "student train features")->required();
  train->add_option("--classifier", opt.classifier)->required();
  train->add_option("--omega", opt.omega, "loss weights; omitted = unweighted loss");
  train->add_option("--epochs", opt.train.epochs)->capture_default_str();
  train->add_option("--batch-size", opt.train.batch_size)->capture_default_str();
  train->add_option("--lr", opt.train.base_lr)->capture_default_str();
  train->add_option("--weight-decay", opt.train.weight_decay)->capture_default_str();
  train->add_option("--logit-scale", opt.train.logit_scale)->capture_default_str();
  train->add_flag("--no-cache-weights", opt.no_cache_weights,
                  "leave confidence weights out of the training forward pass");
  train->add_option("--out", opt.out)->required();
  train->add_option("--report", opt.report, "training report JSON");

  auto* eval = app.add_subcommand("eval", "accuracy on a labeled split");
  eval->add_option("--cache", opt.cache)->required();
  eval->add_option("--features", opt.features)->required();
  eval->add_option("--labels", opt.labels)->required();
  eval->add_option("--classifier", opt.classifier)->required();
  eval->add_flag("--use-weights-at-inference", opt.weights_at_inference,
                 "scale affinities by confidence weights when predicting");
  eval->add_option("--split", opt.split, "split name for the report")->capture_default_str();
  eval->add_option("--out", opt.out)->required();

  auto* ablate = app.add_subcommand("ablate", "run the four cache variants on one bundle");
  ablate->add_option("--bundle", opt.bundle, "bundle manifest")->required();
  ablate->add_option("--seeds", opt.seeds, "training seeds to sweep")->capture_default_str();
  ablate->add_option("--shots", opt.k, "shots per class")->capture_default_str();
  ablate->add_option("--alpha", opt.alpha)->capture_default_str();
  ablate->add_option("--beta", opt.beta)->capture_default_str();
  ablate->add_option("--epochs", opt.train.epochs)->capture_default_str();
  ablate->add_option("--batch-size", opt.train.batch_size)->capture_default_str();
  ablate->add_option("--lr", opt.train.base_lr)->capture_default_str();
  ablate->add_option("--out", opt.out)->required();

  auto* synth = app.add_subcommand("synth", "generate a synthetic bundle");
  synth->add_option("--classes", opt.synth.num_classes)->capture_default_str();
  synth->add_option("--shots", opt.synth.shots)->capture_default_str();
  synth->add_option("--dim", opt.synth.dim)->capture_default_str();
  synth->add_option("--test-per-class", opt.synth.test_per_class)->capture_default_str();
  synth->add_option("--kappa", opt.synth.kappa, "intra-class concentration")
      ->capture_default_str();
  synth->add_option("--eta-s", opt.synth.eta_s, "student wrong-label rate")
      ->capture_default_str();
  synth->add_option("--eta-t", opt.synth.eta_t, "teacher wrong-label rate")
      ->capture_default_str();
  synth->add_option("--rho", opt.synth.rho, "confidence-correctness correlation")
      ->capture_default_str();
  synth->add_flag("--no-nested", opt.no_nested, "draw teacher flips independently");
  synth->add_option("--out", opt.out, "output directory")->required();

  for (auto* sc : {ingest, pseudo, select, build, refine, weights, train, eval, ablate, synth}) {
    sc->fallthrough();
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  if (opt.log_level == "quiet") g_log_level = LogLevel::quiet;
  if (opt.log_level == "debug") g_log_level = LogLevel::debug;
  if (opt.threads > 1) log_info("this build runs single-threaded; --threads capped at 1");

  try {
    if (app.got_subcommand(ingest)) return run_ingest(opt);
    if (app.got_subcommand(pseudo)) return run_pseudo_label(opt);
    if (app.got_subcommand(select)) return run_select(opt);
    if (app.got_subcommand(build)) return run_build_cache(opt);
    if (app.got_subcommand(refine)) return run_refine(opt);
    if (app.got_subcommand(weights)) return run_weights(opt);
    if (app.got_subcommand(train)) return run_train(opt);
    if (app.got_subcommand(eval)) return run_eval(opt);
    if (app.got_subcommand(ablate)) return run_ablate(opt);
    if (app.got_subcommand(synth)) return run_synth(opt);
  } catch (const ntua::ValidationError& e) {
    std::cerr << "ntua: invalid input: " << e.what() << '\n';
    return 1;
  } catch (const ntua::IoError& e) {
    std::cerr << "ntua: i/o error: " << e.what() << '\n';
    return 1;
  } catch (const ntua::TrainingError& e) {
    std::cerr << "ntua: training aborted: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "ntua: " << e.what() << '\n';
    return 1;
  }
  return 2;
}
