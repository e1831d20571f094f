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
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ranknce/toy/config.hpp"

namespace ranknce::cli::detail {

struct Options {
  std::string verb;
  std::vector<std::string> args;  // the full command line, for run metadata

  std::string config;
  std::string out = "out";
  std::optional<std::uint64_t> seed_data, seed_init, seed_sample;
  std::optional<std::string> k, theta;
  std::optional<std::size_t> epochs;
  bool no_timestamp = false;

  // ablate-k / ablate-layers
  std::size_t seeds = 5;
  std::string ks = "3,5,25,all";
  // dump-similarity
  std::string checkpoint;
  std::size_t image = 0;
  // selftest
  std::uint64_t selftest_seed = 1;
};

// Defaults, then the config file, then flag overrides.
toy::TrainConfig build_config(const Options& opt);

// Seed triple i of an ablation: every base seed shifted by i.
toy::TrainConfig with_seed_offset(toy::TrainConfig config, std::size_t i);

// Sample variance of the last ceil(n/5) values (at least two when n >= 2).
double final_window_variance(std::span<const double> values);
std::size_t final_window_size(std::size_t n);

int cmd_train(const Options& opt, std::ostream& out, std::ostream& err);
int cmd_ablate_k(const Options& opt, std::ostream& out, std::ostream& err);
int cmd_ablate_layers(const Options& opt, std::ostream& out, std::ostream& err);
int cmd_mi_diagnose(const Options& opt, std::ostream& out, std::ostream& err);
int cmd_dump_similarity(const Options& opt, std::ostream& out, std::ostream& err);
int cmd_selftest(const Options& opt, std::ostream& out, std::ostream& err);

}  // namespace ranknce::cli::detail
