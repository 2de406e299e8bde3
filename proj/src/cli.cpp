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

#include "mfseg/cli.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <memory>
#include <ostream>
#include <sstream>

#include <openssl/evp.h>

#include "CLI11.hpp"
#include "mfseg/archzoo.hpp"
#include "mfseg/checkpoint.hpp"
#include "mfseg/dataset.hpp"
#include "mfseg/evalreport.hpp"
#include "mfseg/image_io.hpp"
#include "mfseg/maskgen.hpp"
#include "mfseg/random.hpp"
#include "mfseg/synthdata.hpp"
#include "mfseg/trainer.hpp"

namespace mfseg {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

// Share of the pool that goes to training when --n-train is not given.
constexpr double kDefaultTrainShare = 600.0 / 702.0;

class CliError : public std::runtime_error {
 public:
  CliError(std::string kind, const std::string& message, int code)
      : std::runtime_error(message), kind_(std::move(kind)), code_(code) {}
  const std::string& kind() const { return kind_; }
  int code() const { return code_; }

 private:
  std::string kind_;
  int code_;
};

CliError validation_error(const std::string& message) {
  return {"validation", message, kExitUsage};
}

CliError input_error(const std::string& message) { return {"input", message, kExitInput}; }

enum class Kind { kString, kInt, kUInt, kDouble, kBool, kList, kDropout };

struct KeySpec {
  const char* key;
  const char* flags;  // CLI11 name list; empty for config-only keys
  Kind kind;
  const char* help;
  std::vector<std::string> commands;  // empty = every command
  bool inverted = false;              // flag stores false
};

const std::vector<std::string> kModelCommands = {"train", "cv"};
const std::vector<std::string> kDataCommands = {"maskgen", "train", "cv", "eval"};

const std::vector<KeySpec>& key_specs() {
  static const std::vector<KeySpec> specs = {
      {"seed", "--seed", Kind::kUInt, "random seed", {}},
      {"out", "--out", Kind::kString, "output directory", {}},
      {"force", "--force", Kind::kBool, "allow a non-empty --out", {}},
      {"data.manifest", "--manifest", Kind::kString, "dataset manifest JSON", kDataCommands},
      {"data.dims", "--dims", Kind::kString,
       "WIDTHxHEIGHT; image size for synth, working resolution otherwise (default: manifest)",
       {}},
      {"data.exclude", "--exclude", Kind::kList, "image ids to leave out", kDataCommands},
      {"data.n_train", "--n-train", Kind::kInt,
       "training pool size; the rest is the test set (eval: score only the test set)",
       {"train", "cv", "eval"}},
      {"mask.shape", "--mask-shape,--shape", Kind::kString, "round | square", kDataCommands},
      {"mask.extent", "--extent", Kind::kDouble,
       "default radius / half side in px (default: 16 px per 512 px of width)", kDataCommands},
      {"model.arch", "--arch", Kind::kString,
       "unet | unetpp | resunet | resunetpp | attention_unet | fpn | linknet", kModelCommands},
      {"model.backbone", "--backbone", Kind::kString, "none | resnet18 | inceptionv3",
       kModelCommands},
      {"model.depth", "--depth", Kind::kInt, "downsampling stages", kModelCommands},
      {"model.base_width", "--base-width", Kind::kInt, "channels at the first stage",
       kModelCommands},
      {"model.deep_supervision", "--deep-supervision", Kind::kBool, "unetpp heads on every level",
       kModelCommands},
      {"model.prune_level", "--prune-level", Kind::kInt, "unetpp inference head (0 = average)",
       kModelCommands},
      {"model.dropout", "--dropout", Kind::kDropout, "auto | none | comma-separated rates",
       kModelCommands},
      {"model.pretrained", "--pretrained", Kind::kString, "checkpoint to warm-start from",
       kModelCommands},
      {"train.lr", "--lr", Kind::kDouble, "Adam learning rate", kModelCommands},
      {"train.batch_size", "--batch-size", Kind::kInt, "images per batch",
       {"train", "cv", "eval"}},
      {"train.epochs", "--epochs", Kind::kInt, "maximum epochs", kModelCommands},
      {"train.patience", "--patience", Kind::kInt, "early-stopping patience (epochs)",
       kModelCommands},
      {"train.early_stopping", "--no-early-stopping", Kind::kBool, "run every epoch",
       kModelCommands, true},
      {"train.loss", "--loss", Kind::kString, "dice | bce | focal", kModelCommands},
      {"train.threshold", "--threshold", Kind::kDouble, "binarization threshold",
       {"train", "cv", "eval"}},
      {"cv.k", "--k", Kind::kInt, "folds (train holds out fold 0 for validation)",
       kModelCommands},
      {"synth.count", "--count", Kind::kInt, "images to generate", {"synth"}},
      {"synth.extent_min", "--extent-min", Kind::kDouble, "smallest target extent (px)",
       {"synth"}},
      {"synth.extent_max", "--extent-max", Kind::kDouble, "largest target extent (px)",
       {"synth"}},
      {"synth.noise_sigma", "--noise", Kind::kDouble, "noise standard deviation", {"synth"}},
      {"synth.profile", "--profile", Kind::kString, "flat | jaw_arc", {"synth"}},
      {"eval.checkpoint", "--checkpoint", Kind::kString, "model checkpoint", {"eval"}},
      {"eval.overlays", "--no-overlays", Kind::kBool, "skip overlay PNGs", {"eval"}, true},
      {"report.inputs", "--reports", Kind::kList,
       "summary.json files or run directories to tabulate", {"report"}},
  };
  return specs;
}

const KeySpec& spec_for(const std::string& key) {
  for (const auto& s : key_specs()) {
    if (key == s.key) return s;
  }
  throw validation_error("unknown configuration key '" + key + "'");
}

bool applies(const KeySpec& spec, const std::string& command) {
  return spec.commands.empty() ||
         std::find(spec.commands.begin(), spec.commands.end(), command) != spec.commands.end();
}

}  // namespace

json default_config() {
  return {{"seed", kDefaultSeed},
          {"out", ""},
          {"force", false},
          {"data.manifest", ""},
          {"data.dims", ""},
          {"data.exclude", json::array()},
          {"data.n_train", -1},
          {"mask.shape", "round"},
          {"mask.extent", -1.0},
          {"model.arch", "unet"},
          {"model.backbone", "none"},
          {"model.depth", 4},
          {"model.base_width", 64},
          {"model.deep_supervision", false},
          {"model.prune_level", 0},
          {"model.dropout", "auto"},
          {"model.pretrained", ""},
          {"train.lr", 1e-4},
          {"train.batch_size", 8},
          {"train.epochs", 150},
          {"train.patience", 10},
          {"train.early_stopping", true},
          {"train.loss", "dice"},
          {"train.threshold", 0.5},
          {"cv.k", 5},
          {"synth.count", 702},
          {"synth.extent_min", -1.0},
          {"synth.extent_max", -1.0},
          {"synth.noise_sigma", 0.03},
          {"synth.profile", "jaw_arc"},
          {"eval.checkpoint", ""},
          {"eval.overlays", true},
          {"report.inputs", json::array()}};
}

namespace {

// ---------------------------------------------------------------------------
// Value coercion

double parse_double(const std::string& key, const std::string& text) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used == text.size()) return v;
  } catch (const std::exception&) {
  }
  throw validation_error(key + ": expected a number, got '" + text + "'");
}

long long parse_int(const std::string& key, const std::string& text) {
  try {
    std::size_t used = 0;
    const long long v = std::stoll(text, &used);
    if (used == text.size()) return v;
  } catch (const std::exception&) {
  }
  throw validation_error(key + ": expected an integer, got '" + text + "'");
}

json parse_dropout(const std::string& key, const std::string& text) {
  if (text == "auto" || text == "none") return text;
  json rates = json::array();
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) rates.push_back(parse_double(key, item));
  return rates;
}

json from_text(const KeySpec& spec, const std::vector<std::string>& values) {
  const std::string key = spec.key;
  const std::string text = values.empty() ? "" : values.back();
  switch (spec.kind) {
    case Kind::kString: return text;
    case Kind::kInt: return parse_int(key, text);
    case Kind::kUInt: {
      if (!text.empty() && text[0] == '-') throw validation_error(key + ": must be >= 0");
      try {
        std::size_t used = 0;
        const unsigned long long v = std::stoull(text, &used);
        if (used == text.size()) return v;
      } catch (const std::exception&) {
      }
      throw validation_error(key + ": expected a non-negative integer, got '" + text + "'");
    }
    case Kind::kDouble: return parse_double(key, text);
    case Kind::kBool: return !spec.inverted;
    case Kind::kList: return values;
    case Kind::kDropout: return parse_dropout(key, text);
  }
  return nullptr;
}

json from_config_value(const KeySpec& spec, const json& v) {
  const std::string key = spec.key;
  auto bad = [&](const char* want) {
    return validation_error("config key " + key + ": expected " + want + ", got " + v.dump());
  };
  switch (spec.kind) {
    case Kind::kString:
      if (!v.is_string()) throw bad("a string");
      return v;
    case Kind::kInt:
      if (!v.is_number_integer()) throw bad("an integer");
      return v;
    case Kind::kUInt:
      if (!v.is_number_unsigned()) throw bad("a non-negative integer");
      return v;
    case Kind::kDouble:
      if (!v.is_number()) throw bad("a number");
      return v.get<double>();
    case Kind::kBool:
      if (!v.is_boolean()) throw bad("true or false");
      return v;
    case Kind::kList:
      if (!v.is_array()) throw bad("an array of strings");
      for (const auto& s : v) {
        if (!s.is_string()) throw bad("an array of strings");
      }
      return v;
    case Kind::kDropout:
      if (v.is_string()) return parse_dropout(key, v.get<std::string>());
      if (!v.is_array()) throw bad("\"auto\", \"none\" or an array of rates");
      for (const auto& r : v) {
        if (!r.is_number()) throw bad("an array of rates");
      }
      return v;
  }
  return v;
}

// ---------------------------------------------------------------------------
// Shared helpers

std::string str(const RunConfig& cfg, const char* key) {
  return cfg.values.at(key).get<std::string>();
}
double num(const RunConfig& cfg, const char* key) { return cfg.values.at(key).get<double>(); }
long long integer(const RunConfig& cfg, const char* key) {
  return cfg.values.at(key).get<long long>();
}
bool flag(const RunConfig& cfg, const char* key) { return cfg.values.at(key).get<bool>(); }
std::uint64_t seed_of(const RunConfig& cfg) {
  return cfg.values.at("seed").get<std::uint64_t>();
}

int positive_int(const RunConfig& cfg, const char* key, long long min = 1) {
  const long long v = integer(cfg, key);
  if (v < min || v > 1'000'000'000) {
    throw validation_error(std::string(key) + " must be >= " + std::to_string(min));
  }
  return static_cast<int>(v);
}

fs::path require_path(const RunConfig& cfg, const char* key, const char* flag_name) {
  const auto p = str(cfg, key);
  if (p.empty()) throw validation_error(std::string(flag_name) + " is required");
  return p;
}

fs::path prepare_out(const RunConfig& cfg) {
  const fs::path out = require_path(cfg, "out", "--out");
  if (fs::exists(out)) {
    if (!fs::is_directory(out)) throw validation_error("--out " + out.string() + " is not a directory");
    if (!fs::is_empty(out) && !flag(cfg, "force")) {
      throw validation_error("--out " + out.string() +
                             " is not empty; pass --force to overwrite");
    }
  }
  fs::create_directories(out);
  return out;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << text;
}

void write_json(const fs::path& path, const json& doc) { write_text(path, doc.dump(2) + "\n"); }

json read_json(const fs::path& path) {
  std::ifstream f(path);
  if (!f) throw input_error("cannot open " + path.string());
  try {
    return json::parse(f);
  } catch (const json::parse_error& e) {
    throw input_error("malformed JSON in " + path.string() + ": " + e.what());
  }
}

void write_run_json(const RunConfig& cfg, const fs::path& out, const json& seeds) {
  json artifacts = json::object();
  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(out)) {
    if (e.is_regular_file() && e.path().filename() != "run.json") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& f : files) artifacts[fs::relative(f, out).generic_string()] = sha256_file(f);
  json given = json::array();
  for (const auto& k : cfg.given) given.push_back(k);
  write_json(out / "run.json", {{"command", cfg.command},
                                {"config", cfg.values},
                                {"explicit_keys", given},
                                {"seeds", seeds},
                                {"artifacts", artifacts}});
}

Dims dims_or(const RunConfig& cfg, const Dims& fallback) {
  const auto text = str(cfg, "data.dims");
  if (text.empty()) return fallback;
  try {
    return parse_dims(text);
  } catch (const std::invalid_argument& e) {
    throw validation_error(e.what());
  }
}

DatasetManifest load_dataset(const RunConfig& cfg) {
  const fs::path path = require_path(cfg, "data.manifest", "--manifest");
  if (!fs::exists(path)) throw input_error("manifest not found: " + path.string());
  const auto exclude = cfg.values.at("data.exclude").get<std::vector<std::string>>();
  DatasetManifest m = exclude_entries(load_manifest(path), exclude);
  if (m.entries.empty()) throw validation_error("no images left after --exclude");
  return m;
}

MaskSpec mask_spec(const RunConfig& cfg, const Dims& dims) {
  MaskSpec spec;
  try {
    spec.shape_kind = parse_mask_shape(str(cfg, "mask.shape"));
  } catch (const std::invalid_argument& e) {
    throw validation_error(e.what());
  }
  const double extent = num(cfg, "mask.extent");
  spec.default_extent = cfg.given.count("mask.extent") ? extent
                                                       : default_extent_for_width(dims.width);
  if (!(spec.default_extent > 0.0)) throw validation_error("--extent must be > 0");
  return spec;
}

ModelSpec model_spec(const RunConfig& cfg) {
  ModelSpec spec;
  spec.family = parse_family(str(cfg, "model.arch"));
  spec.backbone = parse_backbone(str(cfg, "model.backbone"));
  spec.depth = positive_int(cfg, "model.depth");
  spec.base_width = positive_int(cfg, "model.base_width");
  spec.deep_supervision = flag(cfg, "model.deep_supervision");
  spec.prune_level = positive_int(cfg, "model.prune_level", 0);
  spec.seed = seed_of(cfg);
  const auto& dropout = cfg.values.at("model.dropout");
  if (dropout.is_string()) {
    if (dropout == "auto") spec.dropout_schedule = default_dropout_schedule(spec.depth);
  } else {
    spec.dropout_schedule = dropout.get<std::vector<double>>();
  }
  spec.validate();
  return spec;
}

TrainConfig train_config(const RunConfig& cfg, MaskShape shape) {
  TrainConfig tc;
  tc.learning_rate = num(cfg, "train.lr");
  tc.batch_size = static_cast<std::size_t>(positive_int(cfg, "train.batch_size"));
  tc.max_epochs = positive_int(cfg, "train.epochs");
  tc.patience = positive_int(cfg, "train.patience");
  tc.early_stopping = flag(cfg, "train.early_stopping");
  tc.loss.kind = parse_loss_kind(str(cfg, "train.loss"));
  tc.threshold = num(cfg, "train.threshold");
  tc.seed = seed_of(cfg);
  tc.mask_shape = shape;
  tc.validate();
  return tc;
}

std::size_t n_train_of(const RunConfig& cfg, std::size_t pool) {
  const long long n = integer(cfg, "data.n_train");
  if (n < 0) return static_cast<std::size_t>(std::lround(static_cast<double>(pool) * kDefaultTrainShare));
  if (static_cast<std::size_t>(n) > pool) {
    throw validation_error("--n-train " + std::to_string(n) + " exceeds the " +
                           std::to_string(pool) + " available images");
  }
  return static_cast<std::size_t>(n);
}

std::vector<LabeledImage> load_samples(const DatasetManifest& m,
                                       const std::vector<std::string>& ids, const Dims& dims,
                                       const MaskSpec& spec) {
  std::vector<LabeledImage> out;
  out.reserve(ids.size());
  for (const auto& id : ids) out.push_back(load_labeled(m.at(id), dims, spec));
  return out;
}

void check_divisible(const ModelSpec& spec, const Dims& dims) {
  const auto model = build_model<float>(spec);
  try {
    model.check_input({1, spec.in_channels, dims.height, dims.width});
  } catch (const std::invalid_argument& e) {
    throw validation_error(std::string("working resolution: ") + e.what());
  }
}

json summary(const std::string& model, MaskShape shape, const MetricsReport* cv_val,
             const MetricsReport* test) {
  json splits = json::object();
  if (cv_val) splits["cv_val"] = {{"mean_dsc", cv_val->mean_dsc}, {"mean_iou", cv_val->mean_iou}};
  if (test) {
    splits["test"] = {{"mean_dsc", test->mean_dsc}, {"mean_iou", test->mean_iou}};
  }
  json doc{{"model", model}, {"mask_shape", to_string(shape)}, {"splits", splits}};
  if (test && test->roc) doc["roc"] = *test->roc;
  return doc;
}

json checkpoint_metadata(const MaskSpec& ms, const Dims& dims, double threshold) {
  return {{"mask_shape", to_string(ms.shape_kind)},
          {"default_extent", ms.default_extent},
          {"dims", to_string(dims)},
          {"threshold", threshold}};
}

json split_seeds(std::uint64_t seed) {
  return {{"seed", seed},
          {"split", derive_seed(seed, Stream::kSplit)},
          {"folds", derive_seed(seed, Stream::kFolds)},
          {"init", derive_seed(seed, Stream::kInit)}};
}

}  // namespace

// ---------------------------------------------------------------------------
// Commands

int cmd_synth(const RunConfig& cfg, std::ostream& out) {
  SynthConfig sc;
  sc.count = static_cast<std::size_t>(positive_int(cfg, "synth.count"));
  sc.dims = dims_or(cfg, sc.dims);
  sc.seed = seed_of(cfg);
  const double scale = static_cast<double>(sc.dims.width) / 512.0;
  sc.extent_min = cfg.given.count("synth.extent_min") ? num(cfg, "synth.extent_min") : 12.0 * scale;
  sc.extent_max = cfg.given.count("synth.extent_max") ? num(cfg, "synth.extent_max") : 20.0 * scale;
  sc.noise_sigma = num(cfg, "synth.noise_sigma");
  sc.profile = parse_background_profile(str(cfg, "synth.profile"));
  sc.validate();
  const fs::path dir = prepare_out(cfg);
  const auto data = generate_synthetic_opg(sc);
  const auto manifest = write_synthetic(data, dir);
  write_json(dir / "synth_config.json", sc);
  write_run_json(cfg, dir, {{"seed", sc.seed}, {"synth", derive_seed(sc.seed, Stream::kSynth)}});
  out << json{{"status", "ok"}, {"command", "synth"}, {"images", sc.count},
              {"manifest", manifest.string()}}.dump()
      << "\n";
  return kExitOk;
}

int cmd_maskgen(const RunConfig& cfg, std::ostream& out) {
  const auto m = load_dataset(cfg);
  const Dims dims = dims_or(cfg, m.image_dims);
  const MaskSpec spec = mask_spec(cfg, dims);
  const fs::path dir = prepare_out(cfg);
  const double sx = static_cast<double>(dims.width) / static_cast<double>(m.image_dims.width);
  const double sy = static_cast<double>(dims.height) / static_cast<double>(m.image_dims.height);
  json reports = json::array();
  std::size_t flagged = 0;
  for (const auto& e : m.entries) {
    const auto mask = render_mask(rescale(e.annotation, sx, sy), dims, spec);
    write_mask(mask, dir);
    const auto r = validate_mask(mask);
    flagged += r.ok() ? 0 : 1;
    reports.push_back({{"image_id", e.id},
                       {"file", mask_filename(mask).string()},
                       {"binary", r.binary},
                       {"set_pixels", r.set_pixels},
                       {"components", r.components},
                       {"empty", r.empty},
                       {"too_many_components", r.too_many_components}});
  }
  write_json(dir / "mask_report.json", {{"mask_shape", to_string(spec.shape_kind)},
                                        {"default_extent", spec.default_extent},
                                        {"dims", to_string(dims)},
                                        {"masks", reports}});
  write_run_json(cfg, dir, {{"seed", seed_of(cfg)}});
  out << json{{"status", "ok"}, {"command", "maskgen"}, {"masks", m.entries.size()},
              {"flagged", flagged}}.dump()
      << "\n";
  return kExitOk;
}

namespace {

struct Experiment {
  DatasetManifest manifest;
  Dims dims;
  MaskSpec mask;
  ModelSpec model;
  TrainConfig train;
  SplitPlan split;
  FoldPlan folds;
  std::vector<LabeledImage> pool;
  std::vector<LabeledImage> test;
};

Experiment prepare_experiment(const RunConfig& cfg) {
  Experiment ex;
  ex.model = model_spec(cfg);
  ex.manifest = load_dataset(cfg);
  ex.dims = dims_or(cfg, ex.manifest.image_dims);
  ex.mask = mask_spec(cfg, ex.dims);
  ex.train = train_config(cfg, ex.mask.shape_kind);
  check_divisible(ex.model, ex.dims);
  const int k = positive_int(cfg, "cv.k", 2);
  ex.split = split_dataset(ex.manifest, n_train_of(cfg, ex.manifest.entries.size()), seed_of(cfg));
  if (ex.split.train_ids.size() < static_cast<std::size_t>(k)) {
    throw validation_error("training pool of " + std::to_string(ex.split.train_ids.size()) +
                           " images is too small for " + std::to_string(k) + " folds");
  }
  ex.folds = make_folds(ex.split.train_ids, k, seed_of(cfg));
  ex.pool = load_samples(ex.manifest, ex.split.train_ids, ex.dims, ex.mask);
  ex.test = load_samples(ex.manifest, ex.split.test_ids, ex.dims, ex.mask);
  return ex;
}

}  // namespace

int cmd_train(const RunConfig& cfg, std::ostream& out) {
  Experiment ex = prepare_experiment(cfg);
  const fs::path dir = prepare_out(cfg);
  const auto& val_ids = ex.folds.folds.front();
  const auto train_ids = ex.folds.training_ids(0);
  std::map<std::string, const LabeledImage*> by_id;
  for (const auto& s : ex.pool) by_id.emplace(s.id, &s);
  std::vector<LabeledImage> train_set;
  std::vector<LabeledImage> val_set;
  for (const auto& id : train_ids) train_set.push_back(*by_id.at(id));
  for (const auto& id : val_ids) val_set.push_back(*by_id.at(id));

  Model<float> model = build_model<float>(ex.model);
  std::size_t warm = 0;
  if (const auto pre = str(cfg, "model.pretrained"); !pre.empty()) {
    if (!fs::exists(pre)) throw input_error("pretrained checkpoint not found: " + pre);
    warm = load_pretrained_weights(model, pre);
  }
  const TrainHistory history = train_model(model, train_set, val_set, ex.train);
  const auto val = evaluate_model(model, val_set, ex.mask.shape_kind, ex.train.threshold);
  const auto test = evaluate_model(model, ex.test, ex.mask.shape_kind, ex.train.threshold,
                                   !ex.test.empty());

  save_checkpoint(model, dir / "model.ckpt",
                  checkpoint_metadata(ex.mask, ex.dims, ex.train.threshold));
  write_text(dir / "history.jsonl", history_jsonl(history));
  write_json(dir / "split.json", {{"split", ex.split}, {"validation_ids", val_ids}});
  const std::string name = display_name(ex.model);
  write_json(dir / "metrics.json", {{"model", name},
                                    {"mask_shape", to_string(ex.mask.shape_kind)},
                                    {"history", history},
                                    {"val", val},
                                    {"test", test}});
  write_json(dir / "summary.json", summary(name, ex.mask.shape_kind, nullptr, &test));
  json seeds = split_seeds(seed_of(cfg));
  seeds["pretrained_tensors"] = warm;
  write_run_json(cfg, dir, seeds);
  out << json{{"status", "ok"}, {"command", "train"}, {"best_epoch", history.best_epoch},
              {"val_dsc", val.mean_dsc}, {"test_dsc", test.mean_dsc}}.dump()
      << "\n";
  return kExitOk;
}

int cmd_cv(const RunConfig& cfg, std::ostream& out) {
  Experiment ex = prepare_experiment(cfg);
  if (!str(cfg, "model.pretrained").empty()) {
    throw validation_error("--pretrained is only supported by train");
  }
  const fs::path dir = prepare_out(cfg);
  const auto meta = checkpoint_metadata(ex.mask, ex.dims, ex.train.threshold);
  const CVResult result = cross_validate(
      ex.model, ex.folds, ex.pool, ex.test, ex.train, {},
      [&](const FoldResult& fold, Model<float>& model) {
        const std::string stem = "fold_" + std::to_string(fold.fold_index);
        save_checkpoint(model, dir / (stem + ".ckpt"), meta);
        write_text(dir / (stem + "_history.jsonl"), history_jsonl(fold.history));
      });
  const std::string name = display_name(ex.model);
  write_json(dir / "split.json", ex.split);
  write_json(dir / "folds.json", ex.folds);
  write_json(dir / "cv_result.json",
             {{"model", name}, {"mask_shape", to_string(ex.mask.shape_kind)}, {"result", result}});
  MetricsReport val_mean;
  val_mean.mean_dsc = result.mean_val_dsc;
  val_mean.mean_iou = result.mean_val_iou;
  MetricsReport test_mean;
  test_mean.mean_dsc = result.mean_test_dsc;
  test_mean.mean_iou = result.mean_test_iou;
  write_json(dir / "summary.json", summary(name, ex.mask.shape_kind, &val_mean,
                                           ex.test.empty() ? nullptr : &test_mean));
  json seeds = split_seeds(seed_of(cfg));
  json fold_seeds = json::array();
  for (int f = 0; f < ex.folds.k; ++f) {
    fold_seeds.push_back(derive_seed(seed_of(cfg), Stream::kFoldRun, static_cast<std::uint64_t>(f)));
  }
  seeds["fold_runs"] = fold_seeds;
  write_run_json(cfg, dir, seeds);
  out << json{{"status", "ok"},
              {"command", "cv"},
              {"mean_val_dsc", result.mean_val_dsc},
              {"mean_test_dsc", result.mean_test_dsc},
              {"test_leaks", result.test_leaks}}.dump()
      << "\n";
  return kExitOk;
}

int cmd_eval(const RunConfig& cfg, std::ostream& out) {
  const fs::path ckpt = require_path(cfg, "eval.checkpoint", "--checkpoint");
  if (!fs::exists(ckpt)) throw input_error("checkpoint not found: " + ckpt.string());
  LoadedCheckpoint loaded = load_checkpoint(ckpt);
  const auto& meta = loaded.metadata;
  // Settings stored with the checkpoint fill in whatever was not given.
  RunConfig eff = cfg;
  auto inherit = [&](const char* key, const char* meta_key) {
    if (!cfg.given.count(key) && meta.contains(meta_key)) {
      eff.values[key] = meta.at(meta_key);
      eff.given.insert(key);
    }
  };
  inherit("mask.shape", "mask_shape");
  inherit("mask.extent", "default_extent");
  inherit("data.dims", "dims");
  inherit("train.threshold", "threshold");

  const auto m = load_dataset(eff);
  const Dims dims = dims_or(eff, m.image_dims);
  const MaskSpec ms = mask_spec(eff, dims);
  const double threshold = num(eff, "train.threshold");
  if (!(threshold > 0.0 && threshold < 1.0)) throw validation_error("--threshold must lie in (0, 1)");
  check_divisible(loaded.model.spec(), dims);

  std::vector<std::string> ids = m.ids();
  if (integer(eff, "data.n_train") >= 0) {
    ids = split_dataset(m, n_train_of(eff, m.entries.size()), seed_of(eff)).test_ids;
  }
  if (ids.empty()) throw validation_error("nothing to evaluate");
  const fs::path dir = prepare_out(cfg);
  const auto samples = load_samples(m, ids, dims, ms);
  const auto maps = predict_maps(loaded.model, samples,
                                 static_cast<std::size_t>(positive_int(eff, "train.batch_size")));
  const auto report = score_maps(samples, maps, ms.shape_kind, threshold, true);
  const std::string name = display_name(loaded.model.spec());

  if (flag(eff, "eval.overlays")) {
    fs::create_directories(dir / "overlays");
    for (std::size_t i = 0; i < samples.size(); ++i) {
      const MaskTensor pred{samples[i].id, ms.shape_kind, binarize(maps[i], threshold)};
      write_overlay(render_overlay({samples[i].id, samples[i].image}, pred),
                    dir / "overlays" / (samples[i].id + ".png"));
    }
  }
  const RocPlot plot = plot_roc(*report.roc, dir / "roc.png");
  write_json(dir / "metrics.json",
             {{"model", name}, {"mask_shape", to_string(ms.shape_kind)}, {"test", report}});
  write_json(dir / "summary.json", summary(name, ms.shape_kind, nullptr, &report));
  write_run_json(eff, dir, {{"seed", seed_of(eff)}, {"split", derive_seed(seed_of(eff), Stream::kSplit)}});
  out << json{{"status", "ok"},     {"command", "eval"},       {"images", samples.size()},
              {"mean_dsc", report.mean_dsc}, {"mean_iou", report.mean_iou},
              {"roc", plot.auc_label}}.dump()
      << "\n";
  return kExitOk;
}

int cmd_report(const RunConfig& cfg, std::ostream& out) {
  const auto inputs = cfg.values.at("report.inputs").get<std::vector<std::string>>();
  std::vector<TableEntry> entries;
  std::vector<std::pair<std::string, RocCurve>> rocs;
  for (const auto& in : inputs) {
    fs::path p = in;
    if (fs::is_directory(p)) p /= "summary.json";
    if (!fs::exists(p)) throw input_error("report input not found: " + p.string());
    const json doc = read_json(p);
    try {
      const auto model = doc.at("model").get<std::string>();
      const auto shape = parse_mask_shape(doc.at("mask_shape").get<std::string>());
      for (const auto& [split, vals] : doc.at("splits").items()) {
        TableEntry e;
        e.model = model;
        e.mask_shape = shape;
        e.split = split == "cv_val" ? Split::kCvValidation : Split::kTest;
        e.report.mask_shape = shape;
        e.report.mean_dsc = vals.at("mean_dsc").get<double>();
        e.report.mean_iou = vals.at("mean_iou").get<double>();
        entries.push_back(e);
      }
      if (doc.contains("roc")) rocs.emplace_back(model + " " + to_string(shape), doc.at("roc").get<RocCurve>());
    } catch (const json::exception& e) {
      throw input_error("malformed summary " + p.string() + ": " + e.what());
    }
  }
  std::string table;
  try {
    table = results_table(entries);
  } catch (const DuplicateEntryError& e) {
    throw validation_error(e.what());
  }
  const fs::path dir = prepare_out(cfg);
  write_text(dir / "results.csv", table);
  json plots = json::array();
  for (std::size_t i = 0; i < rocs.size(); ++i) {
    const std::string file = "roc_" + std::to_string(i) + ".png";
    const RocPlot plot = plot_roc(rocs[i].second, dir / file);
    plots.push_back({{"file", file}, {"source", rocs[i].first}, {"label", plot.auc_label},
                     {"points", plot.n_points}});
  }
  write_json(dir / "plots.json", plots);
  write_run_json(cfg, dir, {{"seed", seed_of(cfg)}});
  out << json{{"status", "ok"}, {"command", "report"}, {"rows", entries.size()},
              {"roc_plots", rocs.size()}}.dump()
      << "\n";
  return kExitOk;
}

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot read " + path.string());
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("SHA-256 unavailable");
  }
  char buf[1 << 16];
  while (f.read(buf, sizeof(buf)) || f.gcount() > 0) {
    EVP_DigestUpdate(ctx.get(), buf, static_cast<std::size_t>(f.gcount()));
  }
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), digest, &len);
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i) {
    os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[i]);
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// Parsing and dispatch

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  auto fail = [&](const std::string& kind, const std::string& message, int code) {
    err << json{{"error", kind}, {"message", message}}.dump() << "\n";
    return code;
  };

  CLI::App app{"Mental-foramen segmentation workflow", "mfseg"};
  app.require_subcommand(1);
  struct Bound {
    const KeySpec* spec;
    CLI::Option* option;
    std::vector<std::string> values;
    bool flag = false;
  };
  struct Command {
    CLI::App* app;
    std::string config_file;
    std::vector<std::unique_ptr<Bound>> bound;
  };
  const std::vector<std::pair<std::string, std::string>> commands = {
      {"synth", "generate a synthetic dataset"},
      {"maskgen", "rasterize ground-truth masks"},
      {"train", "train one model (fold 0 held out for early stopping)"},
      {"cv", "k-fold cross-validation with test-set scoring"},
      {"eval", "score a checkpoint, write overlays and a ROC plot"},
      {"report", "tabulate summaries into results.csv"}};
  std::map<std::string, Command> subs;
  for (const auto& [name, help] : commands) {
    Command& c = subs[name];
    c.app = app.add_subcommand(name, help);
    c.app->add_option("--config", c.config_file, "JSON file of dotted keys");
    for (const auto& spec : key_specs()) {
      if (!applies(spec, name)) continue;
      auto b = std::make_unique<Bound>();
      b->spec = &spec;
      if (spec.kind == Kind::kBool) {
        b->option = c.app->add_flag(spec.flags, b->flag, spec.help);
      } else if (spec.kind == Kind::kList) {
        b->option = c.app->add_option(spec.flags, b->values, spec.help)->delimiter(',');
      } else {
        b->option = c.app->add_option(spec.flags, b->values, spec.help)->expected(1);
      }
      c.bound.push_back(std::move(b));
    }
  }

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    const auto parsed = app.get_subcommands();
    out << (parsed.empty() ? app.help() : parsed.front()->help());
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    return fail("usage", e.what(), kExitUsage);
  }

  try {
    RunConfig cfg;
    Command* chosen = nullptr;
    for (auto& [name, c] : subs) {
      if (c.app->parsed()) {
        cfg.command = name;
        chosen = &c;
      }
    }
    cfg.values = default_config();
    if (!chosen->config_file.empty()) {
      const json file = read_json(chosen->config_file);
      if (!file.is_object()) throw validation_error("--config must hold a JSON object");
      for (const auto& [key, value] : file.items()) {
        const KeySpec& spec = spec_for(key);
        cfg.values[key] = from_config_value(spec, value);
        cfg.given.insert(key);
      }
    }
    for (const auto& b : chosen->bound) {
      if (b->option->count() == 0) continue;
      cfg.values[b->spec->key] = from_text(*b->spec, b->values);
      cfg.given.insert(b->spec->key);
    }
    if (cfg.command == "synth") return cmd_synth(cfg, out);
    if (cfg.command == "maskgen") return cmd_maskgen(cfg, out);
    if (cfg.command == "train") return cmd_train(cfg, out);
    if (cfg.command == "cv") return cmd_cv(cfg, out);
    if (cfg.command == "eval") return cmd_eval(cfg, out);
    return cmd_report(cfg, out);
  } catch (const CliError& e) {
    return fail(e.kind(), e.what(), e.code());
  } catch (const ManifestParseError& e) {
    return fail("input", e.what(), kExitInput);
  } catch (const ManifestValidationError& e) {
    return fail("input", e.what(), kExitInput);
  } catch (const ImageIoError& e) {
    return fail("input", e.what(), kExitInput);
  } catch (const CheckpointError& e) {
    return fail("input", e.what(), kExitInput);
  } catch (const std::invalid_argument& e) {
    return fail("validation", e.what(), kExitUsage);
  } catch (const std::exception& e) {
    return fail("runtime", e.what(), kExitRuntime);
  }
}

}  // namespace mfseg
