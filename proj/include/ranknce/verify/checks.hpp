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
#include <string>
#include <vector>

namespace ranknce::verify {

struct CheckResult {
  std::string module;
  std::string invariant;
  bool passed = false;
  // Headline measurement of the check (max error, agreement rate, ...).
  double value = 0.0;
  std::string detail;
};

// --- gradient suite -------------------------------------------------------

struct GradCaseReport {
  std::string name;
  double max_rel_error = 0.0;
  std::uint64_t worst_seed = 0;
  std::size_t evaluated = 0;
  // Draws rejected because a perturbation crossed a relu, pruning or top-K
  // boundary.
  std::size_t redrawn_kink = 0;
  // Draws rejected because the forward values alone put the central
  // difference truncation above kMaxTruncation (logits at 1/tau that are
  // about to swap order behave like a smoothed kink).
  std::size_t redrawn_stiff = 0;
};

inline constexpr double kMaxTruncation = 1e-7;

std::vector<std::string> gradient_case_names();
// Runs every op and composite loss through fd_check on `seeds` accepted
// draws each.
std::vector<GradCaseReport> gradient_suite(std::size_t seeds, std::uint64_t base_seed,
                                           double eps = 1e-5);
CheckResult check_gradient_suite(std::size_t seeds, std::uint64_t base_seed, double tol);

// --- individual checks ----------------------------------------------------
// Each returns a named result; sizes are parameters so the self-test can run
// reduced versions of the acceptance sweeps.

CheckResult check_conv_oracle(std::uint64_t seed);
CheckResult check_fd_detects_wrong_backward();
CheckResult check_fd_exact_for_linear(std::uint64_t seed);
CheckResult check_backward_contract(std::uint64_t seed);
CheckResult check_backward_linearity(std::uint64_t seed);
CheckResult check_autodiff_determinism(std::uint64_t seed);
CheckResult check_l2_normalize(std::uint64_t seed);

CheckResult check_encode_oracle(std::uint64_t seed);
CheckResult check_sample_locations_fixture();
CheckResult check_sample_locations_properties(std::uint64_t seed);
CheckResult check_project_oracle(std::uint64_t seed);
CheckResult check_location_coupling(std::uint64_t seed);
CheckResult check_gradient_reach(std::uint64_t seed);

CheckResult check_similarity_examples(std::uint64_t seed);
CheckResult check_prune_examples();
CheckResult check_monotone_pruning(std::size_t trials, std::uint64_t seed);
CheckResult check_topk_oracle(std::size_t rows, std::uint64_t seed);
CheckResult check_anti_leak(std::size_t trials, std::uint64_t seed);
CheckResult check_selection_scale_invariance(std::size_t trials, std::uint64_t seed);
CheckResult check_selection_fixture(std::uint64_t seed);

CheckResult check_reduction_identity(std::size_t pairs, std::uint64_t seed);
CheckResult check_closed_forms();
CheckResult check_nce_extended_precision(std::uint64_t seed);
CheckResult check_rank_nce_subset(std::uint64_t seed);
CheckResult check_multilayer_composition(std::uint64_t seed);
CheckResult check_gan_oracle(std::uint64_t seed);
CheckResult check_loss_monotonicity(std::size_t trials, std::uint64_t seed);
CheckResult check_tau_scale(std::size_t trials, std::uint64_t seed);
CheckResult check_breakdown_sums(std::uint64_t seed);
CheckResult check_total_objective_recomputation(std::uint64_t seed);

CheckResult check_negated_loss_is_bound(std::size_t queries, std::uint64_t seed);
CheckResult check_ranking_consistency(std::size_t rows, std::uint64_t seed);
// Returns the measured offset bound in `value`; passes when it lies within
// three standard errors of zero.
CheckResult check_independent_bound(std::size_t queries, std::uint64_t seed, double tau,
                                    std::size_t dim);
CheckResult check_multisample_bound(std::uint64_t seed);
CheckResult check_conditional_probs(std::uint64_t seed);
CheckResult check_bound_dual_route(std::uint64_t seed);

CheckResult check_dataset_fixture();
CheckResult check_dataset_properties();
CheckResult check_mmd(std::uint64_t seed);
CheckResult check_structure_score(std::uint64_t seed);
CheckResult check_training_smoke();
CheckResult check_training_determinism();

struct SuiteSize {
  std::size_t grad_seeds = 10;
  std::size_t sweep_rows = 1000;
  std::size_t reduction_pairs = 100;
  std::size_t independence_queries = 10000;
};

// Every check above, in module order.
std::vector<CheckResult> run_all_checks(const SuiteSize& size, std::uint64_t seed);

}  // namespace ranknce::verify
