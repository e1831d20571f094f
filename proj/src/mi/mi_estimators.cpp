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

#include "ranknce/mi_estimators.hpp"

#include <algorithm>
#include <cmath>

#include "ranknce/error.hpp"

namespace ranknce::mi {
namespace {

void require_tau(double tau) {
  if (!(tau > 0.0) || !std::isfinite(tau)) throw ConfigError("tau must be positive");
}

double log_sum_exp(std::span<const double> z) {
  const double m = *std::max_element(z.begin(), z.end());
  double acc = 0.0;
  for (double v : z) acc += std::exp(v - m);
  return m + std::log(acc);
}

int sign(double v) { return (v > 0.0) - (v < 0.0); }

}  // namespace

std::vector<double> infonce_terms(std::span<const double> positives,
                                  const std::vector<std::vector<double>>& negatives,
                                  double tau, bool with_offset) {
  require_tau(tau);
  if (positives.empty()) throw ShapeError("infonce: no queries");
  if (negatives.size() != positives.size()) {
    throw ShapeError("infonce: positives and negative rows differ in count");
  }
  std::vector<double> terms;
  terms.reserve(positives.size());
  std::vector<double> logits;
  for (std::size_t q = 0; q < positives.size(); ++q) {
    logits.assign(1, positives[q] / tau);
    for (double s : negatives[q]) logits.push_back(s / tau);
    double t = logits[0] - log_sum_exp(logits);
    if (with_offset) t += std::log(static_cast<double>(negatives[q].size() + 1));
    terms.push_back(t);
  }
  return terms;
}

double infonce_bound(std::span<const double> positives,
                     const std::vector<std::vector<double>>& negatives, double tau,
                     bool with_offset) {
  const auto terms = infonce_terms(positives, negatives, tau, with_offset);
  double s = 0.0;
  for (double t : terms) s += t;
  return s / static_cast<double>(terms.size());
}

double multisample_bound(const Tensor& pairing, double tau) {
  require_tau(tau);
  if (pairing.rank() != 2 || pairing.dim(0) != pairing.dim(1) || pairing.dim(0) == 0) {
    throw ShapeError("multisample_bound: pairing matrix must be square, got " +
                     shape_string(pairing.shape()));
  }
  const std::size_t n = pairing.dim(0);
  const double log_n = std::log(static_cast<double>(n));
  std::vector<double> column(n);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < n; ++k) column[k] = pairing.at(k, i) / tau;
    total += pairing.at(i, i) / tau - (log_sum_exp(column) - log_n);
  }
  return total / static_cast<double>(n);
}

std::vector<double> conditional_probs(double positive,
                                      std::span<const double> negatives, double tau) {
  require_tau(tau);
  if (negatives.empty()) throw ShapeError("conditional_probs: no negatives");
  std::vector<double> logits;
  logits.reserve(negatives.size() + 1);
  logits.push_back(positive / tau);
  for (double s : negatives) logits.push_back(s / tau);
  const double lse = log_sum_exp(logits);
  for (double& v : logits) v = std::exp(v - lse);
  return logits;
}

RankingCheck contribution_ranking_check(std::span<const double> negative_scores,
                                        std::span<const double> negative_probs) {
  RankingCheck check;
  const std::size_t n = negative_scores.size();
  if (negative_probs.size() != n) {
    check.consistent = false;
    check.kendall_tau = 0.0;
    return check;
  }
  long long concordant = 0, discordant = 0, ties_s = 0, ties_p = 0, pairs = 0;
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = a + 1; b < n; ++b) {
      const int ss = sign(negative_scores[a] - negative_scores[b]);
      const int sp = sign(negative_probs[a] - negative_probs[b]);
      ++pairs;
      if (ss != sp) check.consistent = false;
      if (ss == 0) ++ties_s;
      if (sp == 0) ++ties_p;
      if (ss != 0 && sp != 0) (ss == sp ? concordant : discordant)++;
    }
  }
  const double denom = std::sqrt(static_cast<double>(pairs - ties_s) *
                                 static_cast<double>(pairs - ties_p));
  if (denom == 0.0) {
    // All pairs tied on at least one side: identical orderings iff consistent.
    check.kendall_tau = check.consistent ? 1.0 : 0.0;
  } else {
    check.kendall_tau = static_cast<double>(concordant - discordant) / denom;
  }
  return check;
}

MiReport mi_report(const Tensor& similarity, double tau) {
  if (similarity.rank() != 2 || similarity.dim(0) != similarity.dim(1) ||
      similarity.dim(0) < 2) {
    throw ShapeError("mi_report: similarity must be square with at least 2 rows");
  }
  const std::size_t s = similarity.dim(0);
  std::vector<double> positives(s);
  std::vector<std::vector<double>> negatives(s);
  MiReport report;
  double p_sum = 0.0;
  for (std::size_t i = 0; i < s; ++i) {
    positives[i] = similarity.at(i, i);
    for (std::size_t j = 0; j < s; ++j) {
      if (j != i) negatives[i].push_back(similarity.at(i, j));
    }
    const auto probs = conditional_probs(positives[i], negatives[i], tau);
    std::size_t n = 0;
    for (std::size_t j = 0; j < s; ++j) {
      if (j == i) continue;
      const double p = probs[++n];
      report.per_negative.push_back(
          {i, j, similarity.at(i, j), p, p > 0.0 ? p * std::log(p) : 0.0});
      report.max_negative_p = std::max(report.max_negative_p, p);
      p_sum += p;
    }
  }
  report.mean_negative_p = p_sum / static_cast<double>(report.per_negative.size());
  report.infonce = infonce_bound(positives, negatives, tau, false);
  report.infonce_offset = infonce_bound(positives, negatives, tau, true);
  // pairing(k, i) = real_k . fake_i = similarity(i, k)
  Tensor pairing(Shape{s, s});
  for (std::size_t i = 0; i < s; ++i)
    for (std::size_t k = 0; k < s; ++k) pairing.at(k, i) = similarity.at(i, k);
  report.multisample = multisample_bound(pairing, tau);
  return report;
}

}  // namespace ranknce::mi
