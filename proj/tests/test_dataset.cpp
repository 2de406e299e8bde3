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

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>

#include "doctest.h"
#include "mfseg/dataset.hpp"
#include "mfseg/image_io.hpp"
#include "mfseg/random.hpp"

namespace mfseg {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::vector<std::string> make_ids(int n) {
  std::vector<std::string> ids;
  for (int i = 0; i < n; ++i) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "id%03d", i);
    ids.push_back(buf);
  }
  return ids;
}

json two_entry_doc() {
  return json::parse(R"({
    "image_dims": [64, 32],
    "entries": [
      {"id": "a", "image": "a.png",
       "landmarks": [{"side": "left", "cx": 10, "cy": 20},
                     {"side": "right", "cx": 50, "cy": 21, "extent": 3}]},
      {"id": "b", "image": "b.png",
       "landmarks": [{"side": "right", "cx": 40.5, "cy": 19.25}]}
    ]})");
}

TEST_CASE("parse_dims") {
  CHECK(parse_dims("512x256") == Dims{512, 256});
  CHECK(to_string(Dims{64, 32}) == "64x32");
  for (const char* bad : {"512", "x256", "512x", "0x4", "-3x4", "4x4x4", "ax4"}) {
    CHECK_THROWS_AS(parse_dims(bad), std::invalid_argument);
  }
}

TEST_CASE("manifest parses one and two landmark entries") {
  const auto m = parse_manifest(two_entry_doc(), "/data", false);
  CHECK(m.image_dims == Dims{64, 32});
  REQUIRE(m.entries.size() == 2);
  CHECK(m.at("a").annotation.landmarks.size() == 2);
  CHECK(m.at("a").annotation.landmarks[1].extent == 3.0);
  CHECK_FALSE(m.at("a").annotation.landmarks[0].extent.has_value());
  CHECK(m.at("b").annotation.landmarks[0].side == Side::kRight);
  CHECK(m.at("b").image_path == fs::path("/data/b.png"));
  CHECK(m.ids() == std::vector<std::string>{"a", "b"});
  CHECK_THROWS_AS(m.at("zzz"), std::out_of_range);

  const auto again = parse_manifest(manifest_to_json(m), "/data", false);
  CHECK(manifest_to_json(again) == manifest_to_json(m));
}

TEST_CASE("manifest errors name the offending entry") {
  auto expect_entry = [](json doc, const std::string& id, const std::string& fragment) {
    try {
      parse_manifest(doc, "/data", false);
      FAIL("no error for " << id);
    } catch (const ManifestValidationError& e) {
      CHECK(e.entry_id() == id);
      CHECK(std::string(e.what()).find(fragment) != std::string::npos);
    }
  };
  {
    auto d = two_entry_doc();
    d["entries"][1]["landmarks"][0]["cx"] = 64;
    expect_entry(d, "b", "outside");
  }
  {
    auto d = two_entry_doc();
    d["entries"][0]["landmarks"][1]["side"] = "left";
    expect_entry(d, "a", "both landmarks");
  }
  {
    auto d = two_entry_doc();
    d["entries"][1]["landmarks"] = json::array();
    expect_entry(d, "b", "1 or 2 landmarks");
  }
  {
    auto d = two_entry_doc();
    d["entries"][0]["landmarks"][1]["extent"] = -1;
    expect_entry(d, "a", "negative");
  }
  {
    auto d = two_entry_doc();
    d["entries"][1]["id"] = "a";
    expect_entry(d, "a", "duplicate");
  }
  {
    auto d = two_entry_doc();
    d["entries"][1]["landmarks"][0]["side"] = "middle";
    expect_entry(d, "b", "side");
  }
  try {
    parse_manifest(two_entry_doc(), "/nonexistent", true);
    FAIL("missing image accepted");
  } catch (const ManifestValidationError& e) {
    CHECK(e.entry_id() == "a");
  }
}

TEST_CASE("malformed manifests") {
  CHECK_THROWS_AS(parse_manifest(json::array(), ".", false), ManifestParseError);
  auto d = two_entry_doc();
  d["image_dims"] = {64};
  CHECK_THROWS_AS(parse_manifest(d, ".", false), ManifestParseError);
  d = two_entry_doc();
  d["entries"][0].erase("landmarks");
  CHECK_THROWS_AS(parse_manifest(d, ".", false), ManifestParseError);
  CHECK_THROWS_AS(load_manifest("/nonexistent/manifest.json"), ManifestParseError);
}

TEST_CASE("exclude_entries") {
  const auto m = parse_manifest(two_entry_doc(), ".", false);
  const auto kept = exclude_entries(m, {"a", "unknown"});
  CHECK(kept.ids() == std::vector<std::string>{"b"});
}

TEST_CASE("split is a seeded partition") {
  const auto ids = make_ids(702);
  const auto s = split_ids(ids, 600, 7);
  CHECK(s.train_ids.size() == 600);
  CHECK(s.test_ids.size() == 102);
  CHECK(std::is_sorted(s.train_ids.begin(), s.train_ids.end()));
  CHECK(std::is_sorted(s.test_ids.begin(), s.test_ids.end()));
  std::vector<std::string> all = s.train_ids;
  all.insert(all.end(), s.test_ids.begin(), s.test_ids.end());
  std::sort(all.begin(), all.end());
  CHECK(all == ids);

  auto reversed = ids;
  std::reverse(reversed.begin(), reversed.end());
  CHECK(split_ids(reversed, 600, 7).train_ids == s.train_ids);
  CHECK(split_ids(ids, 600, 8).train_ids != s.train_ids);
  CHECK_THROWS_AS(split_ids(ids, 703, 7), std::invalid_argument);
}

TEST_CASE("folds partition the training ids") {
  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 10 + static_cast<int>(rng.below(200));
    const int k = 2 + static_cast<int>(rng.below(6));
    const auto ids = make_ids(n);
    const auto plan = make_folds(ids, k, trial);
    REQUIRE(plan.folds.size() == static_cast<std::size_t>(k));
    std::map<std::string, int> val_count, train_count;
    std::size_t lo = ids.size(), hi = 0;
    for (int f = 0; f < k; ++f) {
      const auto& fold = plan.folds[static_cast<std::size_t>(f)];
      lo = std::min(lo, fold.size());
      hi = std::max(hi, fold.size());
      CHECK(std::is_sorted(fold.begin(), fold.end()));
      for (const auto& id : fold) val_count[id]++;
      const auto tr = plan.training_ids(f);
      CHECK(tr.size() + fold.size() == ids.size());
      for (const auto& id : tr) train_count[id]++;
    }
    CHECK(hi - lo <= 1);
    for (const auto& id : ids) {
      CHECK(val_count[id] == 1);
      CHECK(train_count[id] == k - 1);
    }
  }
  CHECK_THROWS(make_folds(make_ids(4), 1, 0));
  CHECK_THROWS(make_folds(make_ids(4), 5, 0));
}

TEST_CASE("five folds of 600 hold 120 each") {
  const auto plan = make_folds(make_ids(600), 5, 7);
  for (const auto& f : plan.folds) CHECK(f.size() == 120);
  CHECK(plan.training_ids(2).size() == 480);
  const json j = plan;
  CHECK(j["k"] == 5);
  CHECK(j["folds"].size() == 5);
}

TEST_CASE("load_image resizes and rescales annotations") {
  const auto dir = fs::temp_directory_path() / "mfseg_test_dataset";
  fs::remove_all(dir);
  fs::create_directories(dir);
  Plane<float> img(40, 80);
  for (Index y = 0; y < 40; ++y)
    for (Index x = 0; x < 80; ++x) img(y, x) = static_cast<float>((x + y) % 256) / 255.0f;
  write_gray8(dir / "p.png", img);
  json doc = {{"image_dims", {80, 40}},
              {"entries",
               {{{"id", "p"},
                 {"image", "p.png"},
                 {"landmarks", {{{"side", "left"}, {"cx", 20}, {"cy", 30}, {"extent", 8}}}}}}}};
  std::ofstream(dir / "manifest.json") << doc.dump();
  const auto m = load_manifest(dir / "manifest.json");
  const auto full = load_image(m.at("p"), {80, 40});
  CHECK((full.image.data - img).abs().maxCoeff() < 1e-6f);
  const auto half = load_image(m.at("p"), {40, 20});
  CHECK(half.image.data.rows() == 20);
  CHECK(half.image.data.cols() == 40);
  CHECK(half.image.data.minCoeff() >= 0.0f);
  CHECK(half.image.data.maxCoeff() <= 1.0f);
  const auto& lm = half.annotation.landmarks[0];
  CHECK(lm.cx == doctest::Approx(10.0));
  CHECK(lm.cy == doctest::Approx(15.0));
  CHECK(*lm.extent == doctest::Approx(4.0));

  fs::remove(dir / "p.png");
  CHECK_THROWS_AS(load_manifest(dir / "manifest.json"), ManifestValidationError);
  fs::remove_all(dir);
}

TEST_CASE("rescale uses the geometric mean for extents") {
  AnnotationRecord r{"x", {{Side::kLeft, 10, 10, 4.0}}};
  const auto s = rescale(r, 2.0, 0.5);
  CHECK(s.landmarks[0].cx == 20.0);
  CHECK(s.landmarks[0].cy == 5.0);
  CHECK(*s.landmarks[0].extent == doctest::Approx(4.0));
}

}  // namespace
}  // namespace mfseg
