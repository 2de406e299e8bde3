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

#include "mfseg/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include "mfseg/optimizer.hpp"
#include "mfseg/random.hpp"

namespace mfseg {

void TrainConfig::validate() const {
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
    throw std::invalid_argument("learning_rate must be a finite value >= 0");
  }
  if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
  if (max_epochs < 1) throw std::invalid_argument("max_epochs must be >= 1");
  if (patience < 1) throw std::invalid_argument("patience must be >= 1");
  if (!(threshold > 0.0 && threshold < 1.0)) {
    throw std::invalid_argument("threshold must lie in (0, 1)");
  }
  loss.validate();
}

namespace {

std::string join_ids(const std::vector<std::string>& ids) {
  std::string out;
  for (const auto& id : ids) out += (out.empty() ? "" : ",") + id;
  return out;
}

Tensor<float> stack(const std::vector<const LabeledImage*>& batch) {
  const Index h = batch.front()->image.rows();
  const Index w = batch.front()->image.cols();
  Tensor<float> t(static_cast<Index>(batch.size()), 1, h, w);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto& img = batch[i]->image;
    if (img.rows() != h || img.cols() != w) {
      throw std::invalid_argument("image '" + batch[i]->id + "' has different dimensions");
    }
    t.plane(static_cast<Index>(i), 0) = img;
  }
  return t;
}

template <typename F>
void for_batches(const std::vector<const LabeledImage*>& items, std::size_t batch_size, F f) {
  for (std::size_t start = 0; start < items.size(); start += batch_size) {
    const std::size_t end = std::min(items.size(), start + batch_size);
    f(std::vector<const LabeledImage*>(items.begin() + static_cast<std::ptrdiff_t>(start),
                                       items.begin() + static_cast<std::ptrdiff_t>(end)));
  }
}

std::vector<const LabeledImage*> pointers(const std::vector<LabeledImage>& samples) {
  std::vector<const LabeledImage*> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back(&s);
  return out;
}

// Sorted by id so the training order depends only on the set, not on how it
// was assembled.
std::vector<const LabeledImage*> sorted_pointers(const std::vector<LabeledImage>& samples) {
  auto out = pointers(samples);
  std::sort(out.begin(), out.end(),
            [](const LabeledImage* a, const LabeledImage* b) { return a->id < b->id; });
  return out;
}

}  // namespace

NonFiniteLossError::NonFiniteLossError(int epoch, std::vector<std::string> batch_ids)
    : std::runtime_error("non-finite loss in epoch " + std::to_string(epoch) +
                         " on batch [" + join_ids(batch_ids) + "]"),
      epoch_(epoch),
      batch_ids_(std::move(batch_ids)) {}

std::vector<Plane<float>> predict_maps(Model<float>& model,
                                       const std::vector<LabeledImage>& samples,
                                       std::size_t batch_size) {
  const Mode saved = model.mode();
  model.set_mode(Mode::kEval);
  std::vector<Plane<float>> out;
  out.reserve(samples.size());
  for_batches(pointers(samples), batch_size, [&](const auto& batch) {
    const Tensor<float> probs = model.predict(stack(batch));
    for (Index n = 0; n < probs.n(); ++n) out.emplace_back(probs.plane(n, 0));
  });
  model.set_mode(saved);
  return out;
}

double mean_loss(Model<float>& model, const std::vector<LabeledImage>& samples,
                 const LossConfig& loss, std::size_t batch_size) {
  if (samples.empty()) throw std::invalid_argument("mean_loss: no samples");
  const auto maps = predict_maps(model, samples, batch_size);
  double total = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    total += static_cast<double>(compute_loss(maps[i], samples[i].mask, loss).loss);
  }
  return total / static_cast<double>(samples.size());
}

MetricsReport score_maps(const std::vector<LabeledImage>& samples,
                         const std::vector<Plane<float>>& maps, MaskShape shape,
                         double threshold, bool with_roc) {
  if (samples.size() != maps.size()) {
    throw std::invalid_argument("score_maps: sample and prediction counts differ");
  }
  MetricsReport report;
  report.mask_shape = shape;
  report.threshold = threshold;
  std::vector<Plane<float>> gts;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const Plane<float> pred = binarize(maps[i], threshold);
    report.per_image.push_back({samples[i].id, dice_coefficient(pred, samples[i].mask),
                                iou(pred, samples[i].mask)});
    if (with_roc) gts.push_back(samples[i].mask);
  }
  report.finalize();
  if (with_roc && !samples.empty()) report.roc = roc_points(maps, gts);
  return report;
}

MetricsReport evaluate_model(Model<float>& model, const std::vector<LabeledImage>& samples,
                             MaskShape shape, double threshold, bool with_roc) {
  return score_maps(samples, predict_maps(model, samples), shape, threshold, with_roc);
}

TrainResult train(const ModelSpec& spec, const std::vector<LabeledImage>& train_set,
                  const std::vector<LabeledImage>& val_set, const TrainConfig& cfg,
                  const TrainHooks& hooks) {
  TrainResult result{build_model<float>(spec), {}};
  result.history = train_model(result.model, train_set, val_set, cfg, hooks);
  return result;
}

TrainHistory train_model(Model<float>& model, const std::vector<LabeledImage>& train_set,
                         const std::vector<LabeledImage>& val_set, const TrainConfig& cfg,
                         const TrainHooks& hooks) {
  cfg.validate();
  if (train_set.empty()) throw std::invalid_argument("training set is empty");
  if (val_set.empty() && cfg.early_stopping) {
    throw std::invalid_argument("early stopping needs a validation set");
  }
  const auto order_base = sorted_pointers(train_set);
  std::vector<Var<float>> params;
  for (const auto& p : model.parameters().parameters()) params.push_back(p.var);
  Adam<float> adam(params, {cfg.learning_rate, 0.9, 0.999, 1e-8});

  TrainHistory history;
  history.monitored_validation = !val_set.empty();
  auto best = model.parameters().snapshot();
  int since_best = 0;

  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    auto order = order_base;
    Rng shuffle_rng(derive_seed(cfg.seed, Stream::kShuffle, static_cast<std::uint64_t>(epoch)));
    shuffle_rng.shuffle(order);
    Rng dropout_rng(derive_seed(cfg.seed, Stream::kDropout, static_cast<std::uint64_t>(epoch)));

    model.set_mode(Mode::kTrain);
    double epoch_loss = 0.0;
    for_batches(order, cfg.batch_size, [&](const std::vector<const LabeledImage*>& batch) {
      std::vector<std::string> ids;
      for (const auto* s : batch) ids.push_back(s->id);
      if (hooks.on_batch) hooks.on_batch(ids);

      ForwardContext<float> ctx;
      ctx.training = true;
      ctx.rng = &dropout_rng;
      const auto heads = model.forward_heads(constant(stack(batch)), ctx);
      const auto n = static_cast<float>(batch.size());
      const auto n_heads = static_cast<float>(heads.size());
      std::vector<Tensor<float>> seeds;
      double batch_loss = 0.0;
      for (const auto& head : heads) {
        Tensor<float> seed(head->shape());
        for (Index i = 0; i < head->value.n(); ++i) {
          const auto lv = compute_loss(head->value.plane(i, 0),
                                       batch[static_cast<std::size_t>(i)]->mask, cfg.loss);
          batch_loss += static_cast<double>(lv.loss);
          seed.plane(i, 0) = lv.gradient / (n * n_heads);
        }
        seeds.push_back(std::move(seed));
      }
      batch_loss /= static_cast<double>(batch.size() * heads.size());
      if (!std::isfinite(batch_loss)) throw NonFiniteLossError(epoch, ids);

      model.parameters().zero_grad();
      backward<float>(std::span<const Var<float>>(heads), std::span<const Tensor<float>>(seeds));
      adam.step();
      epoch_loss += batch_loss * static_cast<double>(batch.size());
    });

    EpochRecord record;
    record.epoch = epoch;
    record.train_loss = epoch_loss / static_cast<double>(train_set.size());
    double monitored = record.train_loss;
    if (!val_set.empty()) {
      const auto maps = predict_maps(model, val_set, cfg.batch_size);
      double vl = 0.0;
      for (std::size_t i = 0; i < val_set.size(); ++i) {
        vl += static_cast<double>(compute_loss(maps[i], val_set[i].mask, cfg.loss).loss);
      }
      record.val_loss = vl / static_cast<double>(val_set.size());
      const auto report = score_maps(val_set, maps, cfg.mask_shape, cfg.threshold);
      record.val_dsc = report.mean_dsc;
      record.val_iou = report.mean_iou;
      monitored = *record.val_loss;
    }
    if (!std::isfinite(monitored)) throw NonFiniteLossError(epoch, {});
    history.per_epoch.push_back(record);
    history.stopped_epoch = epoch;
    if (hooks.on_epoch) hooks.on_epoch(record);

    if (history.best_epoch == 0 || monitored < history.best_monitored_loss) {
      history.best_epoch = epoch;
      history.best_monitored_loss = monitored;
      best = model.parameters().snapshot();
      since_best = 0;
    } else if (++since_best >= cfg.patience && cfg.early_stopping) {
      break;
    }
  }
  model.parameters().restore(best);
  model.set_mode(Mode::kEval);
  return history;
}

void CVResult::finalize() {
  mean_val_dsc = mean_val_iou = mean_test_dsc = mean_test_iou = 0.0;
  if (per_fold.empty()) return;
  for (const auto& f : per_fold) {
    mean_val_dsc += f.val.mean_dsc;
    mean_val_iou += f.val.mean_iou;
    mean_test_dsc += f.test.mean_dsc;
    mean_test_iou += f.test.mean_iou;
  }
  const auto k = static_cast<double>(per_fold.size());
  mean_val_dsc /= k;
  mean_val_iou /= k;
  mean_test_dsc /= k;
  mean_test_iou /= k;
}

CVResult cross_validate(const ModelSpec& spec, const FoldPlan& plan,
                        const std::vector<LabeledImage>& pool,
                        const std::vector<LabeledImage>& test_set, const TrainConfig& cfg,
                        const TrainHooks& hooks, const FoldCallback& on_fold) {
  cfg.validate();
  if (plan.k < 2 || plan.folds.size() != static_cast<std::size_t>(plan.k)) {
    throw std::invalid_argument("fold plan is inconsistent");
  }
  std::map<std::string, const LabeledImage*> by_id;
  for (const auto& s : pool) by_id.emplace(s.id, &s);
  std::set<std::string> test_ids;
  for (const auto& s : test_set) test_ids.insert(s.id);
  std::set<std::string> planned;
  for (const auto& fold : plan.folds) {
    for (const auto& id : fold) {
      if (test_ids.count(id)) throw std::invalid_argument("fold id '" + id + "' is also a test id");
      if (!by_id.count(id)) throw std::invalid_argument("fold id '" + id + "' has no sample");
      if (!planned.insert(id).second) {
        throw std::invalid_argument("id '" + id + "' appears in more than one fold");
      }
    }
  }
  auto gather = [&](const std::vector<std::string>& ids) {
    std::vector<LabeledImage> out;
    out.reserve(ids.size());
    for (const auto& id : ids) out.push_back(*by_id.at(id));
    return out;
  };

  CVResult result;
  TrainHooks audited = hooks;
  audited.on_batch = [&](const std::vector<std::string>& ids) {
    for (const auto& id : ids) result.test_leaks += test_ids.count(id);
    if (hooks.on_batch) hooks.on_batch(ids);
  };

  for (int f = 0; f < plan.k; ++f) {
    const std::uint64_t fold_seed = static_cast<std::uint64_t>(f);
    ModelSpec fold_spec = spec;
    fold_spec.seed = derive_seed(spec.seed, Stream::kFoldRun, fold_seed);
    TrainConfig fold_cfg = cfg;
    fold_cfg.seed = derive_seed(cfg.seed, Stream::kFoldRun, fold_seed);

    FoldResult fold;
    fold.fold_index = f;
    fold.train_ids = plan.training_ids(f);
    fold.val_ids = plan.folds[static_cast<std::size_t>(f)];
    const auto train_samples = gather(fold.train_ids);
    const auto val_samples = gather(fold.val_ids);
    auto trained = train(fold_spec, train_samples, val_samples, fold_cfg, audited);
    fold.history = std::move(trained.history);
    fold.val = evaluate_model(trained.model, val_samples, cfg.mask_shape, cfg.threshold);
    if (!test_set.empty()) {
      fold.test = evaluate_model(trained.model, test_set, cfg.mask_shape, cfg.threshold);
    } else {
      fold.test.mask_shape = cfg.mask_shape;
      fold.test.threshold = cfg.threshold;
    }
    if (on_fold) on_fold(fold, trained.model);
    result.per_fold.push_back(std::move(fold));
  }
  result.finalize();
  return result;
}

void to_json(nlohmann::json& j, const TrainConfig& cfg) {
  j = nlohmann::json{{"learning_rate", cfg.learning_rate},
                     {"batch_size", cfg.batch_size},
                     {"max_epochs", cfg.max_epochs},
                     {"patience", cfg.patience},
                     {"early_stopping", cfg.early_stopping},
                     {"loss", to_string(cfg.loss.kind)},
                     {"dice_smooth", cfg.loss.dice_smooth},
                     {"focal_gamma", cfg.loss.focal_gamma},
                     {"focal_alpha", cfg.loss.focal_alpha},
                     {"threshold", cfg.threshold},
                     {"seed", cfg.seed},
                     {"mask_shape", to_string(cfg.mask_shape)}};
}

void to_json(nlohmann::json& j, const EpochRecord& r) {
  j = nlohmann::json{{"epoch", r.epoch}, {"train_loss", r.train_loss}};
  j["val_loss"] = r.val_loss ? nlohmann::json(*r.val_loss) : nlohmann::json();
  j["val_dsc"] = r.val_dsc ? nlohmann::json(*r.val_dsc) : nlohmann::json();
  j["val_iou"] = r.val_iou ? nlohmann::json(*r.val_iou) : nlohmann::json();
}

void to_json(nlohmann::json& j, const TrainHistory& h) {
  j = nlohmann::json{{"per_epoch", h.per_epoch},
                     {"stopped_epoch", h.stopped_epoch},
                     {"best_epoch", h.best_epoch},
                     {"best_monitored_loss", h.best_monitored_loss},
                     {"monitor", h.monitored_validation ? "val_loss" : "train_loss"}};
}

void to_json(nlohmann::json& j, const FoldResult& f) {
  j = nlohmann::json{{"fold_index", f.fold_index}, {"val", f.val},
                     {"test", f.test},             {"history", f.history},
                     {"train_ids", f.train_ids},   {"val_ids", f.val_ids}};
}

void to_json(nlohmann::json& j, const CVResult& r) {
  j = nlohmann::json{{"per_fold", r.per_fold},
                     {"mean_val_dsc", r.mean_val_dsc},
                     {"mean_val_iou", r.mean_val_iou},
                     {"mean_test_dsc", r.mean_test_dsc},
                     {"mean_test_iou", r.mean_test_iou},
                     {"test_leaks", r.test_leaks}};
}

std::string history_jsonl(const TrainHistory& history) {
  std::ostringstream os;
  for (const auto& r : history.per_epoch) os << nlohmann::json(r).dump() << "\n";
  return os.str();
}

}  // namespace mfseg
