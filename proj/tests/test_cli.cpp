#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"
#include "json.hpp"
#include "ntua/cache.hpp"
#include "ntua/eval.hpp"
#include "ntua/io.hpp"
#include "ntua/prototypes.hpp"
#include "ntua/pseudo_label.hpp"
#include "ntua/synthetic.hpp"
#include "ntua/trainer.hpp"
#include "oracles.hpp"

namespace {

namespace fs = std::filesystem;

const char* binary() {
  const char* bin = std::getenv("NTUA_BIN");
  REQUIRE_MESSAGE(bin != nullptr, "NTUA_BIN must point at the ntua binary");
  return bin;
}

struct RunResult {
  int code = -1;
  std::string out;
};

// Runs the CLI with stdout+stderr captured to a scratch file.
RunResult run_cli(const std::string& args) {
  static int counter = 0;
  const auto log = oracle::temp_dir("cli_logs") / ("run" + std::to_string(counter++) + ".txt");
  fs::create_directories(log.parent_path());
  const std::string cmd =
      std::string(binary()) + " " + args + " > " + log.string() + " 2>&1";
  const int raw = std::system(cmd.c_str());
  RunResult r;
  r.code = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  std::ifstream in(log);
  std::ostringstream buf;
  buf << in.rdbuf();
  r.out = buf.str();
  return r;
}

}  // namespace

TEST_CASE("version and help exit cleanly") {
  auto v = run_cli("--version");
  CHECK(v.code == 0);
  CHECK(v.out.find("ntua 1.0.0") != std::string::npos);
  CHECK(v.out.find("format version 1") != std::string::npos);

  auto h = run_cli("--help");
  CHECK(h.code == 0);
  CHECK(h.out.find("train") != std::string::npos);
  CHECK(h.out.find("eval") != std::string::npos);
}

TEST_CASE("usage mistakes exit with 2") {
  CHECK(run_cli("").code == 2);                       // no subcommand
  CHECK(run_cli("train").code == 2);                  // missing required options
  CHECK(run_cli("eval --bogus-flag x").code == 2);    // unknown flag
  CHECK(run_cli("frobnicate").code == 2);             // unknown subcommand
}

TEST_CASE("runtime failures exit with 1") {
  const auto dir = oracle::temp_dir("cli_fail");
  fs::create_directories(dir);
  const auto missing = (dir / "nope.bin").string();
  const auto out = (dir / "out.bin").string();
  auto r = run_cli("pseudo-label --features " + missing + " --classifier " + missing +
                   " --out " + out);
  CHECK(r.code == 1);
  CHECK(r.out.find("error") != std::string::npos);

  // A corrupt container also lands on 1, not a crash.
  const auto junk = dir / "junk.bin";
  std::ofstream(junk, std::ios::binary) << "this is not a container";
  auto rc = run_cli("eval --cache " + junk.string() + " --features " + junk.string() +
                    " --labels " + junk.string() + " --classifier " + junk.string() +
                    " --out " + out);
  CHECK(rc.code == 1);
  fs::remove_all(dir);
}

TEST_CASE("ingest reads plain text matrices and normalizes on request") {
  const auto dir = oracle::temp_dir("cli_ingest");
  fs::create_directories(dir);
  const auto txt = dir / "raw.txt";
  {
    std::ofstream f(txt);
    f << "3 0 0 0\n";
    f << "0 2 0 0\n";
    f << "\n";  // blank lines are tolerated
    f << "0 0 5 0\n";
  }
  const auto out = (dir / "emb.bin").string();
  auto r = run_cli("ingest --input " + txt.string() + " --kind embeddings --normalize --out " +
                   out);
  REQUIRE(r.code == 0);
  const auto set = ntua::read_embeddings(out);
  REQUIRE(set.rows() == 3);
  CHECK(set.dim == 4);
  CHECK(set.features.at(0, 0) == 1.0f);
  CHECK(set.features.at(1, 1) == 1.0f);
  CHECK(set.features.at(2, 2) == 1.0f);

  // Without --normalize the same input is refused at validation time.
  auto bad = run_cli("ingest --input " + txt.string() + " --kind embeddings --out " +
                     (dir / "bad.bin").string());
  CHECK(bad.code == 1);
  fs::remove_all(dir);
}

TEST_CASE("cli pipeline matches the same pipeline run through the library") {
  const auto dir = oracle::temp_dir("cli_pipeline");
  fs::create_directories(dir);

  // One synthetic bundle on disk via the CLI.
  auto synth = run_cli("--seed 31 synth --classes 4 --shots 6 --dim 32 --test-per-class 10"
                       " --eta-s 0.3 --eta-t 0.1 --rho 0.8 --out " + dir.string());
  REQUIRE_MESSAGE(synth.code == 0, synth.out);
  REQUIRE(fs::exists(dir / "manifest.json"));

  const auto sel = (dir / "sel.bin").string();
  const auto cache0 = (dir / "cache0.bin").string();
  const auto cache1 = (dir / "cache1.bin").string();
  const auto omega = (dir / "omega.bin").string();
  const auto cache2 = (dir / "cache2.bin").string();
  const auto evalj = (dir / "eval.json").string();
  const auto train_student = (dir / "train_student.bin").string();
  const auto train_teacher = (dir / "train_teacher.bin").string();
  const auto student_pl = (dir / "student_pl.bin").string();
  const auto teacher_pl = (dir / "teacher_pl.bin").string();
  const auto classifier = (dir / "classifier.bin").string();

  REQUIRE(run_cli("select --pl " + student_pl + " --k 4 --out " + sel).code == 0);
  REQUIRE(run_cli("build-cache --sel " + sel + " --features " + train_student +
                  " --pl " + student_pl + " --classifier " + classifier +
                  " --out " + cache0).code == 0);
  REQUIRE(run_cli("refine --cache " + cache0 + " --teacher-pl " + teacher_pl +
                  " --out " + cache1).code == 0);
  REQUIRE(run_cli("weights --teacher-features " + train_teacher + " --teacher-pl " + teacher_pl +
                  " --cache " + cache1 + " --out " + omega).code == 0);
  REQUIRE(run_cli("--seed 5 train --cache " + cache1 + " --features " + train_student +
                  " --classifier " + classifier + " --omega " + omega +
                  " --epochs 3 --batch-size 8 --out " + cache2).code == 0);
  auto ev = run_cli("eval --cache " + cache2 + " --features " + (dir / "test.bin").string() +
                    " --labels " + (dir / "test_labels.bin").string() +
                    " --classifier " + classifier + " --use-weights-at-inference --out " + evalj);
  REQUIRE_MESSAGE(ev.code == 0, ev.out);

  // The same steps through the library, starting from the on-disk bundle.
  const auto lib_train = ntua::read_embeddings(train_student);
  const auto lib_teacher = ntua::read_embeddings(train_teacher);
  const auto lib_spl = ntua::read_pseudo_labels(student_pl);
  const auto lib_tpl = ntua::read_pseudo_labels(teacher_pl);
  const auto lib_w = ntua::read_classifier(classifier);
  const auto lib_test = ntua::read_embeddings((dir / "test.bin").string());
  const auto lib_labels = ntua::read_labels((dir / "test_labels.bin").string());

  const auto lib_sel = ntua::select_top_k(lib_spl, 4);
  const auto lib_fb = ntua::fallback_rows(lib_w, lib_sel);
  auto lib_cache = ntua::build_cache(lib_sel, lib_train, lib_spl, lib_fb,
                                     ntua::kDefaultAlpha, ntua::kDefaultBeta);
  lib_cache = ntua::refine_cache(lib_cache, lib_tpl);
  const auto protos = ntua::compute_prototypes(lib_teacher, lib_tpl, lib_cache);
  const auto lib_omega = ntua::affinity_weights(lib_teacher, lib_tpl, lib_cache, protos);

  // The trained cache the CLI wrote was quantized to f32 keys on disk, so the
  // library leg trains from the same quantized starting point.
  const auto disk_cache = ntua::read_cache(cache1);
  ntua::TrainConfig cfg;
  cfg.epochs = 3;
  cfg.batch_size = 8;
  cfg.seed = 5;
  const std::vector<std::uint32_t> targets(disk_cache.values.begin(), disk_cache.values.end());
  const auto [lib_trained, rep] =
      ntua::train_keys(disk_cache, lib_train, targets, lib_omega, lib_w, cfg);
  const auto lib_eval = ntua::evaluate(lib_trained, lib_test, lib_labels, lib_w, true);

  std::ifstream in(evalj);
  REQUIRE(in.good());
  const auto j = nlohmann::json::parse(in);
  const double rounded = std::round(lib_eval.top1 * 1e4) / 1e4;
  CHECK(j.at("top1").get<double>() == doctest::Approx(rounded).epsilon(1e-9));
  CHECK(j.at("inference_weights") == "on");

  // Omega the CLI wrote matches the library computation bit for bit.
  const auto disk_omega = ntua::read_omega(omega);
  REQUIRE(disk_omega.rows() == lib_omega.rows());
  for (std::size_t i = 0; i < disk_omega.rows(); ++i) {
    CHECK(disk_omega.omega[i] == lib_omega.omega[i]);
  }
  fs::remove_all(dir);
}

TEST_CASE("pseudo-label subcommand reproduces the library labeling") {
  const auto dir = oracle::temp_dir("cli_pl");
  fs::create_directories(dir);
  ntua::SynthSpec spec;
  spec.num_classes = 3;
  spec.shots = 5;
  spec.dim = 16;
  spec.test_per_class = 2;
  spec.seed = 33;
  const auto b = ntua::generate(spec);
  const auto feats = (dir / "f.bin").string();
  const auto cls = (dir / "w.bin").string();
  const auto out = (dir / "pl.bin").string();
  ntua::write_embeddings(b.train, feats);
  ntua::write_classifier(b.classifier, cls);
  auto r = run_cli("pseudo-label --features " + feats + " --classifier " + cls +
                   " --tag student --out " + out);
  REQUIRE_MESSAGE(r.code == 0, r.out);
  const auto got = ntua::read_pseudo_labels(out);
  const auto want = ntua::make_pseudo_labels(b.train, b.classifier, ntua::kDefaultTemperature,
                                             ntua::SourceTag::student);
  CHECK(got.labels == want.labels);
  CHECK(got.confidences == want.confidences);
  CHECK(got.source_tag == ntua::SourceTag::student);
  fs::remove_all(dir);
}

TEST_CASE("ablate writes a report over the requested seeds") {
  const auto dir = oracle::temp_dir("cli_ablate");
  fs::create_directories(dir);
  auto synth = run_cli("--seed 47 synth --classes 3 --shots 4 --dim 16 --test-per-class 6"
                       " --eta-s 0.3 --eta-t 0.1 --rho 0.9 --out " + dir.string());
  REQUIRE_MESSAGE(synth.code == 0, synth.out);
  const auto report = (dir / "ablation.json").string();
  auto r = run_cli("--seed 3 ablate --bundle " + (dir / "manifest.json").string() +
                   " --seeds 2 --shots 4 --epochs 2 --batch-size 4 --out " + report);
  REQUIRE_MESSAGE(r.code == 0, r.out);
  std::ifstream in(report);
  REQUIRE(in.good());
  const auto j = nlohmann::json::parse(in);
  REQUIRE(j.at("runs").size() == 2);
  CHECK(j.at("runs")[0].at("seed") == 3);
  CHECK(j.at("runs")[1].at("seed") == 4);
  for (const char* key : {"kc", "kcr", "kcr_ckc", "kcr_ckc_w"}) {
    const double v = j.at("mean").at(key).get<double>();
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }
  fs::remove_all(dir);
}
