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

// Adam training with early stopping on validation loss, and the k-fold
// cross-validation driver.
//
// Randomness: model init comes from ModelSpec::seed; epoch e shuffles with
// derive_seed(seed, kShuffle, e) and draws dropout masks from
// derive_seed(seed, kDropout, e). Fold f of a cross-validation run trains
// with both seeds replaced by derive_seed(seed, kFoldRun, f), so every fold
// starts from a fresh initialisation.

#ifndef MFSEG_TRAINER_HPP_
#define MFSEG_TRAINER_HPP_

#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "mfseg/archzoo.hpp"
#include "mfseg/dataset.hpp"
#include "mfseg/lossmetrics.hpp"

namespace mfseg {

struct TrainConfig {
  double learning_rate = 1e-4;
  std::size_t batch_size = 8;
  int max_epochs = 150;
  int patience = 10;
  // Off: run all max_epochs. The monitored loss still picks the restored
  // weights; with no validation images it is the training loss.
  bool early_stopping = true;
  LossConfig loss;
  double threshold = 0.5;
  std::uint64_t seed = 0;
  MaskShape mask_shape = MaskShape::kRound;

  void validate() const;
};

struct EpochRecord {
  int epoch = 0;  // 1-based
  double train_loss = 0.0;
  std::optional<double> val_loss;
  std::optional<double> val_dsc;
  std::optional<double> val_iou;
};

struct TrainHistory {
  std::vector<EpochRecord> per_epoch;
  int stopped_epoch = 0;
  int best_epoch = 0;
  double best_monitored_loss = 0.0;
  bool monitored_validation = true;
};

struct TrainHooks {
  // Ids of every batch right before it reaches the optimizer.
  std::function<void(const std::vector<std::string>&)> on_batch;
  std::function<void(const EpochRecord&)> on_epoch;
};

class NonFiniteLossError : public std::runtime_error {
 public:
  NonFiniteLossError(int epoch, std::vector<std::string> batch_ids);
  int epoch() const { return epoch_; }
  const std::vector<std::string>& batch_ids() const { return batch_ids_; }

 private:
  int epoch_;
  std::vector<std::string> batch_ids_;
};

struct TrainResult {
  Model<float> model;
  TrainHistory history;
};

TrainResult train(const ModelSpec& spec, const std::vector<LabeledImage>& train_set,
                  const std::vector<LabeledImage>& val_set, const TrainConfig& cfg,
                  const TrainHooks& hooks = {});

// Same, on an existing model (e.g. after load_pretrained_weights).
TrainHistory train_model(Model<float>& model, const std::vector<LabeledImage>& train_set,
                         const std::vector<LabeledImage>& val_set, const TrainConfig& cfg,
                         const TrainHooks& hooks = {});

// Eval-mode probability maps, one per sample, computed in batches.
std::vector<Plane<float>> predict_maps(Model<float>& model,
                                       const std::vector<LabeledImage>& samples,
                                       std::size_t batch_size = 8);

// Mean per-image loss of the eval-mode predictions.
double mean_loss(Model<float>& model, const std::vector<LabeledImage>& samples,
                 const LossConfig& loss, std::size_t batch_size = 8);

MetricsReport score_maps(const std::vector<LabeledImage>& samples,
                         const std::vector<Plane<float>>& maps, MaskShape shape,
                         double threshold, bool with_roc = false);

MetricsReport evaluate_model(Model<float>& model, const std::vector<LabeledImage>& samples,
                             MaskShape shape, double threshold, bool with_roc = false);

struct FoldResult {
  int fold_index = 0;
  MetricsReport val;
  MetricsReport test;
  TrainHistory history;
  std::vector<std::string> train_ids;
  std::vector<std::string> val_ids;
};

struct CVResult {
  std::vector<FoldResult> per_fold;
  double mean_val_dsc = 0.0;
  double mean_val_iou = 0.0;
  double mean_test_dsc = 0.0;
  double mean_test_iou = 0.0;
  // Test ids seen by the batch audit hook; 0 unless something is broken.
  std::size_t test_leaks = 0;

  // Recomputes the means from per_fold.
  void finalize();
};

// Called after each fold with its trained model (e.g. to checkpoint it).
using FoldCallback = std::function<void(const FoldResult&, Model<float>&)>;

// `pool` holds every id of the fold plan; `test_set` must be disjoint from it.
CVResult cross_validate(const ModelSpec& spec, const FoldPlan& plan,
                        const std::vector<LabeledImage>& pool,
                        const std::vector<LabeledImage>& test_set, const TrainConfig& cfg,
                        const TrainHooks& hooks = {}, const FoldCallback& on_fold = {});

void to_json(nlohmann::json& j, const TrainConfig& cfg);
void to_json(nlohmann::json& j, const EpochRecord& record);
void to_json(nlohmann::json& j, const TrainHistory& history);
void to_json(nlohmann::json& j, const FoldResult& fold);
void to_json(nlohmann::json& j, const CVResult& result);

// One JSON object per epoch, newline-terminated.
std::string history_jsonl(const TrainHistory& history);

}  // namespace mfseg

#endif  // MFSEG_TRAINER_HPP_
