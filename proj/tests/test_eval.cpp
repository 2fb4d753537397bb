#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include "doctest.h"
#include "json.hpp"
#include "ntua/cache.hpp"
#include "ntua/eval.hpp"
#include "ntua/pseudo_label.hpp"
#include "ntua/synthetic.hpp"
#include "oracles.hpp"

namespace {

// Small labeled test problem where the zero-shot classifier is already perfect:
// test rows sit exactly on the classifier directions.
struct PerfectProblem {
  ntua::ClassifierWeights w;
  ntua::EmbeddingSet test;
  ntua::GroundTruthLabels labels;
};

PerfectProblem perfect_problem(std::mt19937& gen, std::size_t classes, std::size_t dim,
                               std::size_t per_class) {
  PerfectProblem p;
  p.w = oracle::random_classifier(gen, classes, dim);
  p.test.dim = dim;
  p.test.features = ntua::MatrixF(classes * per_class, dim);
  p.labels.num_classes = static_cast<std::uint32_t>(classes);
  for (std::size_t c = 0, r = 0; c < classes; ++c) {
    for (std::size_t s = 0; s < per_class; ++s, ++r) {
      for (std::size_t j = 0; j < dim; ++j) {
        p.test.features.at(r, j) = p.w.matrix.at(c, j);
      }
      p.test.sample_ids.push_back("t" + std::to_string(r));
      p.labels.labels.push_back(static_cast<std::uint32_t>(c));
    }
  }
  return p;
}

}  // namespace

TEST_CASE("alpha zero reduces evaluation to the zero-shot classifier") {
  std::mt19937 gen(70);
  auto p = perfect_problem(gen, 4, 12, 3);
  auto cache = oracle::random_cache(gen, 8, 12, 4, 0.0);
  const auto rep = ntua::evaluate(cache, p.test, p.labels, p.w, false);
  CHECK(rep.top1 == 1.0);
  CHECK(rep.rows == 12);
  for (std::uint32_t c = 0; c < 4; ++c) {
    CHECK(rep.per_class_accuracy(c) == 1.0);
  }
}

TEST_CASE("self retrieval with a dominant cache is perfect") {
  // Test rows are the cache keys themselves; a huge alpha makes the cache term
  // drown out the classifier, and each query matches its own key at affinity 1.
  std::mt19937 gen(71);
  const std::size_t classes = 3, dim = 10, rows = 9;
  auto w = oracle::random_classifier(gen, classes, dim);
  auto cache = oracle::random_cache(gen, rows, dim, classes, 1e4, 20.0);
  ntua::EmbeddingSet test;
  test.dim = dim;
  test.features = ntua::MatrixF(rows, dim);
  ntua::GroundTruthLabels labels;
  labels.num_classes = classes;
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t j = 0; j < dim; ++j) {
      test.features.at(r, j) = static_cast<float>(cache.keys.at(r, j));
    }
    test.sample_ids.push_back("t" + std::to_string(r));
    labels.labels.push_back(cache.values[r]);
  }
  const auto rep = ntua::evaluate(cache, test, labels, w, true);
  CHECK(rep.top1 == 1.0);
}

TEST_CASE("accuracy bookkeeping adds up") {
  std::mt19937 gen(72);
  auto p = perfect_problem(gen, 3, 8, 4);
  auto cache = oracle::random_cache(gen, 6, 8, 3);
  const auto rep = ntua::evaluate(cache, p.test, p.labels, p.w, false, "val");
  CHECK(rep.split == "val");
  std::uint64_t total = 0, correct = 0;
  for (std::uint32_t c = 0; c < 3; ++c) {
    total += rep.per_class_total[c];
    correct += rep.per_class_correct[c];
  }
  CHECK(total == rep.rows);
  CHECK(rep.top1 ==
        doctest::Approx(static_cast<double>(correct) / static_cast<double>(total)).epsilon(1e-12));

  // Confusion rows must sum to the per-class totals.
  for (std::uint32_t t = 0; t < 3; ++t) {
    std::uint64_t row_sum = 0;
    for (std::uint32_t q = 0; q < 3; ++q) row_sum += rep.confusion.at(t, q);
    CHECK(row_sum == rep.per_class_total[t]);
    CHECK(rep.confusion.at(t, t) == rep.per_class_correct[t]);
  }
}

TEST_CASE("evaluating an empty test split is refused") {
  std::mt19937 gen(73);
  auto cache = oracle::random_cache(gen, 4, 6, 2);
  auto w = oracle::random_classifier(gen, 2, 6);
  ntua::EmbeddingSet empty;
  empty.dim = 6;
  empty.features = ntua::MatrixF(0, 6);
  ntua::GroundTruthLabels labels;
  labels.num_classes = 2;
  CHECK_THROWS_AS(ntua::evaluate(cache, empty, labels, w, false), ntua::ValidationError);
}

TEST_CASE("both inference modes are reported and weights of one make them equal") {
  std::mt19937 gen(74);
  auto p = perfect_problem(gen, 3, 8, 5);
  auto cache = oracle::random_cache(gen, 9, 8, 3);
  for (auto& wgt : cache.weights) wgt = 1.0f;
  const auto rep = ntua::evaluate(cache, p.test, p.labels, p.w, true);
  CHECK(rep.used_weights);
  CHECK(rep.top1 == rep.top1_other_mode);
}

TEST_CASE("eval report file carries the rounded accuracy and mode") {
  std::mt19937 gen(75);
  auto p = perfect_problem(gen, 2, 6, 2);
  auto cache = oracle::random_cache(gen, 4, 6, 2);
  const auto rep = ntua::evaluate(cache, p.test, p.labels, p.w, false);
  const auto dir = oracle::temp_dir("evalrep");
  const auto path = dir / "eval.json";
  ntua::write_eval_report(rep, path.string());
  std::ifstream in(path);
  REQUIRE(in.good());
  const auto j = nlohmann::json::parse(in);
  CHECK(j.at("split") == "test");
  CHECK(j.at("rows") == 4);
  CHECK(j.at("inference_weights") == "off");
  CHECK(j.at("top1").get<double>() == doctest::Approx(rep.top1).epsilon(1e-4));
  CHECK(j.at("per_class").size() == 2);
  std::filesystem::remove_all(dir);
}

TEST_CASE("ablation variants share the initial cache and differ only as configured") {
  // Clean synthetic data, teacher identical to student and all confidences at
  // the ceiling, so refinement and confidence weighting are both no-ops.
  ntua::SynthSpec spec;
  spec.num_classes = 3;
  spec.shots = 4;
  spec.dim = 16;
  spec.test_per_class = 8;
  spec.eta_s = 0.0;
  spec.eta_t = 0.0;
  spec.rho = 0.0;
  spec.seed = 41;
  auto bundle = ntua::generate(spec);
  for (auto& c : bundle.student_pl.confidences) c = 1.0f;
  for (auto& c : bundle.teacher_pl.confidences) c = 1.0f;

  ntua::AblationSettings settings;
  settings.shots = 4;
  settings.train.epochs = 2;
  settings.train.batch_size = 4;
  settings.train.seed = 7;
  settings.descriptor = "unit";
  const auto result =
      ntua::run_ablation(bundle.train, bundle.student_pl, bundle.teacher_train, bundle.teacher_pl,
                         bundle.test, bundle.test_labels, bundle.classifier, settings);

  // With teacher == student pseudo-labels and unit confidences, refinement and
  // the confidence path cannot change what the trainer sees, so the first three
  // variants agree exactly.
  CHECK(result.kc == result.kcr);
  CHECK(result.kcr == result.kcr_ckc);
  CHECK(result.seed == 7);
  CHECK(result.descriptor == "unit");
  CHECK(result.kc >= 0.0);
  CHECK(result.kc <= 1.0);
}

TEST_CASE("ablation report file lists runs and a mean block") {
  ntua::AblationResult a;
  a.kc = 0.5;
  a.kcr = 0.625;
  a.kcr_ckc = 0.75;
  a.kcr_ckc_w = 0.875;
  a.seed = 1;
  a.descriptor = "fixture";
  ntua::AblationResult b = a;
  b.seed = 2;
  b.kcr_ckc_w = 0.9375;
  const auto dir = oracle::temp_dir("ablrep");
  const auto path = dir / "ablation.json";
  ntua::write_ablation_report({a, b}, path.string());
  std::ifstream in(path);
  REQUIRE(in.good());
  const auto j = nlohmann::json::parse(in);
  REQUIRE(j.at("runs").size() == 2);
  CHECK(j.at("runs")[0].at("seed") == 1);
  CHECK(j.at("runs")[1].at("kcr_ckc_w").get<double>() == doctest::Approx(0.9375));
  CHECK(j.at("mean").at("kc").get<double>() == doctest::Approx(0.5));
  CHECK(j.at("mean").at("kcr_ckc_w").get<double>() ==
        doctest::Approx((0.875 + 0.9375) / 2).epsilon(1e-4));
  std::filesystem::remove_all(dir);
}
