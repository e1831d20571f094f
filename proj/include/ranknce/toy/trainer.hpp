// Copyright 2026 The RankNCE Authors.
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

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

#include "ranknce/error.hpp"
#include "ranknce/toy/config.hpp"
#include "ranknce/toy/model.hpp"

namespace ranknce::toy {

class TrainingAborted : public Error {
 public:
  using Error::Error;
};

struct LayerMi {
  std::size_t layer = 0;
  double infonce = 0.0;
  double infonce_offset = 0.0;
  double multisample = 0.0;
  double max_negative_p = 0.0;
  double mean_negative_p = 0.0;
};

struct EvalMetrics {
  double mmd = 0.0;
  double structure = 0.0;
  std::vector<LayerMi> mi;  // one entry per tap layer, averaged over images
};

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double lr = 0.0;
  double loss_d = 0.0;
  double loss_gan = 0.0;
  double nce_x = 0.0;
  double nce_y = 0.0;
  double total = 0.0;
  std::size_t skipped_queries = 0;
  EvalMetrics eval;
};

struct StepLosses {
  std::size_t step = 0;  // 1-based, counted over the whole run
  double loss_d = 0.0;
  double gan = 0.0;
  double total = 0.0;
  std::vector<std::size_t> layers;
  std::vector<double> nce_x_layers;
  std::vector<double> nce_y_layers;
};

struct TrainHooks {
  std::function<void(const StepLosses&)> on_step;
  // Called with step 0 before training and with the epoch number after each
  // epoch.
  std::function<void(std::size_t, const EvalMetrics&)> on_eval;
  // Where to dump the offending batch when training aborts; empty disables.
  std::filesystem::path diagnostics_dir;
};

struct RunHistory {
  std::vector<EpochRecord> epochs;
  ParameterSet final_params;

  static const char* csv_header();
  void write_csv(std::ostream& out) const;
};

struct Datasets {
  std::vector<Tensor> train_x, train_y, eval_x, eval_y;
};

// Rng stream (under seed_sample) that draws the patch locations of the
// evaluation images, first image first.
inline constexpr std::uint64_t kEvalLocationStream = 12;

// Four independent seeded sets; X and Y never share a seed.
Datasets make_datasets(const TrainConfig& config);

// Linear decay to zero over the second half of the run. epoch is 0-based.
double learning_rate(const TrainConfig& config, std::size_t epoch);

EvalMetrics evaluate(const ParameterSet& params, const TrainConfig& config,
                     std::span<const Tensor> eval_x, std::span<const Tensor> eval_y);

/// Alternating 1:1 discriminator/generator updates with Adam. Deterministic
/// in the config seeds. Throws TrainingAborted on a non-finite value.
RunHistory train(const TrainConfig& config, const TrainHooks& hooks = {});

}  // namespace ranknce::toy
