#include "ntua/eval.hpp"

#include <cmath>
#include <fstream>

#include "json.hpp"
#include "ntua/cache.hpp"
#include "ntua/prototypes.hpp"
#include "ntua/pseudo_label.hpp"

namespace ntua {

namespace {

// Reports quote accuracies at four decimal places.
double round4(double x) { return std::round(x * 10000.0) / 10000.0; }

std::uint32_t predict(const WeightedCache& cache, const ClassifierWeights& w,
                      std::span<const double> query, bool use_weights) {
  const auto logits = adapter_logits(query, cache, w, use_weights);
  std::size_t best = 0;
  for (std::size_t c = 1; c < logits.size(); ++c) {
    if (logits[c] > logits[best]) best = c;
  }
  return static_cast<std::uint32_t>(best);
}

}  // namespace

EvalReport evaluate(const WeightedCache& cache, const EmbeddingSet& test_features,
                    const GroundTruthLabels& test_labels, const ClassifierWeights& w,
                    bool use_weights, const std::string& split_name) {
  test_features.validate();
  test_labels.validate();
  if (test_features.rows() == 0) throw ValidationError("empty test set");
  if (test_labels.rows() != test_features.rows()) {
    throw ValidationError("test labels do not match test features row for row");
  }
  if (test_labels.num_classes != cache.num_classes) {
    throw ValidationError("test labels cover " + std::to_string(test_labels.num_classes) +
                          " classes, cache holds " + std::to_string(cache.num_classes));
  }

  const std::size_t n = cache.num_classes;
  EvalReport report;
  report.split = split_name;
  report.rows = test_features.rows();
  report.used_weights = use_weights;
  report.per_class_total.assign(n, 0);
  report.per_class_correct.assign(n, 0);
  report.confusion = Matrix<std::uint64_t>(n, n);

  std::uint64_t correct = 0;
  std::uint64_t correct_other = 0;
  for (std::size_t i = 0; i < test_features.rows(); ++i) {
    const auto query = widen(test_features.features.row(i));
    const std::uint32_t truth = test_labels.labels[i];
    const std::uint32_t pred = predict(cache, w, query, use_weights);
    const std::uint32_t pred_other = predict(cache, w, query, !use_weights);
    report.per_class_total[truth] += 1;
    report.confusion.at(truth, pred) += 1;
    if (pred == truth) {
      correct += 1;
      report.per_class_correct[truth] += 1;
    }
    if (pred_other == truth) correct_other += 1;
  }
  report.top1 = static_cast<double>(correct) / static_cast<double>(report.rows);
  report.top1_other_mode = static_cast<double>(correct_other) / static_cast<double>(report.rows);
  return report;
}

void write_eval_report(const EvalReport& report, const std::filesystem::path& path) {
  nlohmann::ordered_json j;
  j["split"] = report.split;
  j["rows"] = report.rows;
  j["inference_weights"] = report.used_weights ? "on" : "off";
  j["top1"] = round4(report.top1);
  j["top1_other_mode"] = round4(report.top1_other_mode);
  nlohmann::ordered_json per_class = nlohmann::ordered_json::array();
  for (std::size_t c = 0; c < report.per_class_total.size(); ++c) {
    per_class.push_back({{"class", c},
                         {"total", report.per_class_total[c]},
                         {"correct", report.per_class_correct[c]},
                         {"accuracy", round4(report.per_class_accuracy(c))}});
  }
  j["per_class"] = per_class;
  nlohmann::ordered_json confusion = nlohmann::ordered_json::array();
  for (std::size_t t = 0; t < report.confusion.rows; ++t) {
    nlohmann::ordered_json row = nlohmann::ordered_json::array();
    for (std::size_t p = 0; p < report.confusion.cols; ++p) {
      row.push_back(report.confusion.at(t, p));
    }
    confusion.push_back(row);
  }
  j["confusion"] = confusion;
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << j.dump(2) << '\n';
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

AblationResult run_ablation(const EmbeddingSet& student_train, const PseudoLabelSet& student_pl,
                            const EmbeddingSet& teacher_train, const PseudoLabelSet& teacher_pl,
                            const EmbeddingSet& test_features,
                            const GroundTruthLabels& test_labels, const ClassifierWeights& w,
                            const AblationSettings& settings) {
  const ShotSelection sel = select_top_k(student_pl, settings.shots);
  const FallbackRows fb = fallback_rows(w, sel);
  const WeightedCache base =
      build_cache(sel, student_train, student_pl, fb, settings.alpha, settings.beta);
  const WeightedCache refined = refine_cache(base, teacher_pl);

  const AffinityWeights none;
  TrainConfig plain = settings.train;
  plain.use_weights_in_loss = false;
  plain.include_omega = false;

  AblationResult result;
  result.seed = settings.train.seed;
  result.descriptor = settings.descriptor;

  // KC: student labels as-is, affinities never confidence-scaled.
  {
    auto [trained, report] = train_keys(base, student_train, base.values, none, w, plain);
    result.kc = evaluate(trained, test_features, test_labels, w, false).top1;
  }
  // KCR: teacher-refined values, still unweighted everywhere.
  {
    auto [trained, report] = train_keys(refined, student_train, refined.values, none, w, plain);
    result.kcr = evaluate(trained, test_features, test_labels, w, false).top1;
  }
  // KCR+CKC: confidence weights scale affinities during training and inference.
  TrainConfig weighted = plain;
  weighted.use_weights_in_loss = true;
  {
    auto [trained, report] =
        train_keys(refined, student_train, refined.values, none, w, weighted);
    result.kcr_ckc = evaluate(trained, test_features, test_labels, w, true).top1;
  }
  // KCR+CKC+w: prototype-affinity weights on the per-sample loss as well.
  {
    const PrototypeSet protos = compute_prototypes(teacher_train, teacher_pl, refined);
    const AffinityWeights omega = affinity_weights(teacher_train, teacher_pl, refined, protos);
    TrainConfig full = weighted;
    full.include_omega = true;
    auto [trained, report] = train_keys(refined, student_train, refined.values, omega, w, full);
    result.kcr_ckc_w = evaluate(trained, test_features, test_labels, w, true).top1;
  }
  return result;
}

void write_ablation_report(const std::vector<AblationResult>& results,
                           const std::filesystem::path& path) {
  nlohmann::ordered_json runs = nlohmann::ordered_json::array();
  double kc = 0.0, kcr = 0.0, kcr_ckc = 0.0, kcr_ckc_w = 0.0;
  for (const auto& r : results) {
    runs.push_back({{"seed", r.seed},
                    {"descriptor", r.descriptor},
                    {"kc", round4(r.kc)},
                    {"kcr", round4(r.kcr)},
                    {"kcr_ckc", round4(r.kcr_ckc)},
                    {"kcr_ckc_w", round4(r.kcr_ckc_w)}});
    kc += r.kc;
    kcr += r.kcr;
    kcr_ckc += r.kcr_ckc;
    kcr_ckc_w += r.kcr_ckc_w;
  }
  nlohmann::ordered_json j;
  j["runs"] = runs;
  const auto n = static_cast<double>(results.empty() ? 1 : results.size());
  j["mean"] = {{"kc", round4(kc / n)},
               {"kcr", round4(kcr / n)},
               {"kcr_ckc", round4(kcr_ckc / n)},
               {"kcr_ckc_w", round4(kcr_ckc_w / n)}};
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << j.dump(2) << '\n';
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

}  // namespace ntua
