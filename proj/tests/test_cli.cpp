// Copyright 2026 The mfseg Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "json.hpp"
#include "mfseg/cli.hpp"
#include "mfseg/image_io.hpp"

namespace mfseg {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

json read(const fs::path& p) {
  std::ifstream f(p);
  return json::parse(f);
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

// A small synthetic dataset shared by the tests in this file.
struct Workspace {
  fs::path root = fs::temp_directory_path() / "mfseg_test_cli";
  fs::path data = root / "data";
  fs::path manifest = data / "manifest.json";

  Workspace() {
    fs::remove_all(root);
    const auto r = run({"synth", "--out", data.string(), "--count", "24", "--dims", "64x32",
                        "--extent-min", "3", "--extent-max", "4.5", "--seed", "3"});
    REQUIRE_MESSAGE(r.code == 0, r.err);
  }
  ~Workspace() { fs::remove_all(root); }
  std::string dir(const std::string& name) const { return (root / name).string(); }
};

std::vector<std::string> small_model() {
  return {"--manifest", "", "--arch", "unet", "--depth", "2", "--base-width", "4",
          "--dropout", "none", "--lr", "1e-3", "--epochs", "1", "--batch-size", "4",
          "--n-train", "20", "--k", "5", "--extent", "2"};
}

std::vector<std::string> with(std::vector<std::string> head, const Workspace& ws,
                              std::vector<std::string> tail = {}) {
  auto m = small_model();
  m[1] = ws.manifest.string();
  head.insert(head.end(), m.begin(), m.end());
  head.insert(head.end(), tail.begin(), tail.end());
  return head;
}

TEST_CASE("synth writes images, manifest and run.json with hashes") {
  Workspace ws;
  CHECK(fs::exists(ws.manifest));
  const auto run_json = read(ws.data / "run.json");
  CHECK(run_json["command"] == "synth");
  CHECK(run_json["config"]["synth.count"] == 24);
  CHECK(run_json["explicit_keys"].size() == 6);
  const auto& artifacts = run_json["artifacts"];
  CHECK(artifacts.contains("manifest.json"));
  CHECK(artifacts.contains("synth_config.json"));
  CHECK_FALSE(artifacts.contains("run.json"));
  CHECK(artifacts.size() == 24 + 2);
  for (const auto& [name, hash] : artifacts.items()) {
    CHECK(hash.get<std::string>() == sha256_file(ws.data / name));
  }
}

TEST_CASE("sha256 of a known string") {
  const auto p = fs::temp_directory_path() / "mfseg_test_sha.txt";
  std::ofstream(p, std::ios::binary) << "abc";
  CHECK(sha256_file(p) == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  fs::remove(p);
}

TEST_CASE("maskgen writes one mask per image with the requested shape") {
  Workspace ws;
  const auto r = run({"maskgen", "--manifest", ws.manifest.string(), "--out", ws.dir("masks"),
                      "--shape", "square", "--extent", "16"});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  const auto report = read(ws.root / "masks" / "mask_report.json");
  CHECK(report["mask_shape"] == "square");
  CHECK(report["masks"].size() == 24);
  for (const auto& m : report["masks"]) {
    const fs::path file = ws.root / "masks" / m["file"].get<std::string>();
    CHECK(file.filename().string() == m["image_id"].get<std::string>() + "_square.png");
    CHECK(fs::exists(file));
    CHECK(m["binary"] == true);
  }
  const auto img = read_gray8(ws.root / "masks" / report["masks"][0]["file"].get<std::string>());
  CHECK(img.rows() == 32);
  CHECK(img.cols() == 64);
}

TEST_CASE("error kinds and exit codes") {
  Workspace ws;
  auto bad_arch = run(with({"train", "--out", ws.dir("bad")}, ws, {"--backbone", "resnet18"}));
  CHECK(bad_arch.code == kExitUsage);
  CHECK(json::parse(bad_arch.err)["error"] == "validation");

  auto unknown = run({"train", "--frobnicate"});
  CHECK(unknown.code == kExitUsage);
  CHECK(json::parse(unknown.err)["error"] == "usage");
  CHECK(run({}).code == kExitUsage);

  auto missing = run({"maskgen", "--manifest", ws.dir("nope.json"), "--out", ws.dir("m")});
  CHECK(missing.code == kExitInput);
  CHECK(json::parse(missing.err)["error"] == "input");

  // data/ is already populated.
  auto occupied = run({"synth", "--out", ws.data.string(), "--count", "2", "--dims", "64x32"});
  CHECK(occupied.code == kExitUsage);
  CHECK(json::parse(occupied.err)["message"].get<std::string>().find("--force") !=
        std::string::npos);

  auto ckpt = run({"eval", "--manifest", ws.manifest.string(), "--checkpoint",
                   ws.dir("none.ckpt"), "--out", ws.dir("e")});
  CHECK(ckpt.code == kExitInput);

  auto indivisible = run(with({"train", "--out", ws.dir("div")}, ws, {"--dims", "60x30"}));
  CHECK(indivisible.code == kExitUsage);

  CHECK(run({"synth", "--help"}).code == kExitOk);
}

TEST_CASE("flags override the config file, which overrides defaults") {
  Workspace ws;
  const auto cfg = ws.root / "cfg.json";
  std::ofstream(cfg) << R"({"synth.count": 3, "synth.noise_sigma": 0.0, "seed": 9})";
  const auto r = run({"synth", "--config", cfg.string(), "--out", ws.dir("s"), "--dims", "64x32",
                      "--seed", "11", "--extent-min", "3", "--extent-max", "4"});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  const auto rj = read(ws.root / "s" / "run.json");
  CHECK(rj["config"]["synth.count"] == 3);
  CHECK(rj["config"]["synth.noise_sigma"] == 0.0);
  CHECK(rj["config"]["seed"] == 11);
  CHECK(rj["config"]["synth.profile"] == "jaw_arc");

  std::ofstream(cfg) << R"({"synth.bogus": 1})";
  CHECK(run({"synth", "--config", cfg.string(), "--out", ws.dir("t")}).code == kExitUsage);
  std::ofstream(cfg) << R"({"synth.count": "three"})";
  CHECK(run({"synth", "--config", cfg.string(), "--out", ws.dir("t")}).code == kExitUsage);
}

TEST_CASE("train then eval reproduces the test metrics") {
  Workspace ws;
  const auto tr = run(with({"train", "--out", ws.dir("train")}, ws));
  REQUIRE_MESSAGE(tr.code == 0, tr.err);
  const fs::path dir = ws.root / "train";
  for (const char* f : {"model.ckpt", "history.jsonl", "split.json", "metrics.json",
                        "summary.json", "run.json"}) {
    CHECK(fs::exists(dir / f));
  }
  const auto split = read(dir / "split.json");
  CHECK(split["split"]["train_ids"].size() == 20);
  CHECK(split["split"]["test_ids"].size() == 4);
  CHECK(split["validation_ids"].size() == 4);
  const auto metrics = read(dir / "metrics.json");

  const auto ev = run({"eval", "--manifest", ws.manifest.string(), "--checkpoint",
                       (dir / "model.ckpt").string(), "--n-train", "20", "--out", ws.dir("eval")});
  REQUIRE_MESSAGE(ev.code == 0, ev.err);
  const auto eval_metrics = read(ws.root / "eval" / "metrics.json");
  CHECK(eval_metrics["mask_shape"] == "round");
  CHECK(eval_metrics["test"]["mean_dsc"].get<double>() ==
        doctest::Approx(metrics["test"]["mean_dsc"].get<double>()).epsilon(1e-9));
  CHECK(eval_metrics["test"]["n_images"] == 4);
  CHECK(fs::exists(ws.root / "eval" / "roc.png"));
  int overlays = 0;
  for ([[maybe_unused]] const auto& e : fs::directory_iterator(ws.root / "eval" / "overlays")) {
    ++overlays;
  }
  CHECK(overlays == 4);
  // Stored metadata supplies the extent that was not passed to eval.
  CHECK(read(ws.root / "eval" / "run.json")["config"]["mask.extent"] == 2.0);

  const auto rep = run({"report", "--reports", dir.string(), "--out", ws.dir("rep")});
  REQUIRE_MESSAGE(rep.code == 0, rep.err);
  const auto plots = read(ws.root / "rep" / "plots.json");
  REQUIRE(plots.size() == 1);
  CHECK(plots[0]["label"].get<std::string>().rfind("AUC = ", 0) == 0);
  CHECK(fs::exists(ws.root / "rep" / plots[0]["file"].get<std::string>()));
}

TEST_CASE("cv writes per-fold artifacts and reruns identically") {
  Workspace ws;
  const auto a = run(with({"cv", "--out", ws.dir("cv_a")}, ws));
  REQUIRE_MESSAGE(a.code == 0, a.err);
  const auto b = run(with({"cv", "--out", ws.dir("cv_b")}, ws));
  REQUIRE(b.code == 0);
  CHECK(json::parse(a.out)["test_leaks"] == 0);
  for (int f = 0; f < 5; ++f) {
    CHECK(fs::exists(ws.root / "cv_a" / ("fold_" + std::to_string(f) + ".ckpt")));
    CHECK(fs::exists(ws.root / "cv_a" / ("fold_" + std::to_string(f) + "_history.jsonl")));
  }
  CHECK(slurp(ws.root / "cv_a" / "cv_result.json") == slurp(ws.root / "cv_b" / "cv_result.json"));
  auto ra = read(ws.root / "cv_a" / "run.json");
  auto rb = read(ws.root / "cv_b" / "run.json");
  CHECK(ra["artifacts"] == rb["artifacts"]);
  ra["config"].erase("out");
  rb["config"].erase("out");
  CHECK(ra["config"] == rb["config"]);

  const auto rep = run({"report", "--reports", ws.dir("cv_a"), "--out", ws.dir("rep")});
  REQUIRE_MESSAGE(rep.code == 0, rep.err);
  const auto table = slurp(ws.root / "rep" / "results.csv");
  CHECK(table.rfind("model,mask_shape,cv_val_dsc,cv_val_iou,test_dsc,test_iou\r\nU-Net,round,", 0) ==
        0);
  // Fold means carry no pooled ROC curve.
  CHECK(read(ws.root / "rep" / "plots.json").empty());

  const auto dup = run({"report", "--reports", ws.dir("cv_a") + "," + ws.dir("cv_b"), "--out",
                        ws.dir("rep2")});
  CHECK(dup.code == kExitUsage);
  CHECK(json::parse(dup.err)["error"] == "validation");
}

}  // namespace
}  // namespace mfseg
