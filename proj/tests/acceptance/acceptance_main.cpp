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

// One line per acceptance criterion; exit status is nonzero iff any FAILs.
// Soft criteria print WARN for a single-seed violation and do not fail.

#include <stdlib.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

#include "ranknce/cli.hpp"
#include "ranknce/verify/checks.hpp"
#include "ranknce/verify/fixtures.hpp"

namespace {

namespace fs = std::filesystem;
using ranknce::verify::CheckResult;

constexpr std::uint64_t kBaseSeed = 20261016;
constexpr std::size_t kSeeds = 5;
const std::vector<std::string> kSeedFlags{"--seed-data", "100", "--seed-init", "200",
                                          "--seed-sample", "300"};

enum class Verdict { kPass, kWarn, kFail };

int failures = 0;

void report(int id, Verdict v, const std::string& name, const std::string& detail) {
  const char* tag = v == Verdict::kPass ? "PASS" : v == Verdict::kWarn ? "WARN" : "FAIL";
  failures += v == Verdict::kFail;
  std::cout << "criterion " << id << " [" << tag << "] " << name << ": " << detail << std::endl;
}

Verdict of(bool ok) { return ok ? Verdict::kPass : Verdict::kFail; }

class Timer {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

int cli(std::vector<std::string> args, std::string* stdout_text = nullptr) {
  std::ostringstream out, err;
  const int code = ranknce::cli::run(args, out, err);
  if (code != 0) std::cerr << "ranknce " << args.front() << " exited " << code << ": " << err.str();
  if (stdout_text) *stdout_text = out.str();
  return code;
}

std::vector<std::string> with_seeds(std::vector<std::string> args) {
  args.insert(args.end(), kSeedFlags.begin(), kSeedFlags.end());
  return args;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

// All rows of a CSV, header first.
std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
  std::vector<std::vector<std::string>> rows;
  std::ifstream f(p);
  for (std::string line; std::getline(f, line);) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    for (std::string c; std::getline(ss, c, ',');) cells.push_back(c);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    rows.push_back(cells);
  }
  return rows;
}

std::size_t column(const std::vector<std::string>& header, const std::string& name) {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return i;
  throw std::runtime_error("missing column " + name);
}

double final_window_variance(const std::vector<double>& v) {
  const std::size_t w = std::max<std::size_t>((v.size() + 4) / 5, 2);
  double m = 0.0;
  for (std::size_t i = v.size() - w; i < v.size(); ++i) m += v[i];
  m /= static_cast<double>(w);
  double ss = 0.0;
  for (std::size_t i = v.size() - w; i < v.size(); ++i) ss += (v[i] - m) * (v[i] - m);
  return ss / static_cast<double>(w - 1);
}

double final_window_mean(const std::vector<double>& v) {
  const std::size_t w = std::max<std::size_t>((v.size() + 4) / 5, 2);
  double m = 0.0;
  for (std::size_t i = v.size() - w; i < v.size(); ++i) m += v[i];
  return m / static_cast<double>(w);
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::vector<double> history_column(const fs::path& p, const std::string& name) {
  const auto rows = read_csv(p);
  const std::size_t c = column(rows.front(), name);
  std::vector<double> v;
  for (std::size_t r = 1; r < rows.size(); ++r) v.push_back(std::stod(rows[r][c]));
  return v;
}

Verdict soft(std::size_t violations, bool aggregate_ok) {
  if (!aggregate_ok || violations >= 2) return Verdict::kFail;
  return violations == 1 ? Verdict::kWarn : Verdict::kPass;
}

void check_line(int id, const CheckResult& r, const std::string& extra = "") {
  report(id, of(r.passed), r.invariant, r.detail + extra);
}

void criterion_1() {
  Timer t;
  auto r = ranknce::verify::check_reduction_identity(1000, kBaseSeed + 1);
  const double s = t.seconds();
  r.passed = r.passed && r.value <= 1e-12 && s < 5.0;
  check_line(1, r, ", tol 1e-12, " + fmt(s) + " s (limit 5 s)");
}

void criterion_2() {
  check_line(2, ranknce::verify::check_closed_forms(), ", tol 1e-12");
}

void criterion_3() {
  Timer t;
  auto r = ranknce::verify::check_gradient_suite(100, kBaseSeed + 3, 1e-6);
  const double s = t.seconds();
  r.passed = r.passed && s < 120.0;
  check_line(3, r, ", tol 1e-6 at eps 1e-5, " + fmt(s) + " s (limit 120 s)");
}

void criterion_4() {
  check_line(4, ranknce::verify::check_topk_oracle(10000, kBaseSeed + 4), ", required 100%");
}

void criterion_5() {
  using namespace ranknce::verify;
  const auto a = check_negated_loss_is_bound(10000, kBaseSeed + 5);
  const auto b = check_ranking_consistency(10000, kBaseSeed + 6);
  const auto c = check_independent_bound(10000, kBaseSeed + 7, kIndependenceTau, kIndependenceDim);
  const auto at_train_tau = check_independent_bound(10000, kBaseSeed + 7, 0.07, kIndependenceDim);
  report(5, of(a.passed && b.passed && c.passed), "MI consistency",
         "(a) " + a.detail + "; (b) " + b.detail + "; (c) " + c.detail +
             "; for reference tau 0.07 gives mean " + fmt(at_train_tau.value));
}

// Criteria 6 and 7 share the K=5 runs of the ablation.
void criteria_6_7(const fs::path& root) {
  Timer t;
  const fs::path ablate = root / "ablate_k";
  const bool ran = cli(with_seeds({"ablate-k", "--ks", "5,all", "--seeds", std::to_string(kSeeds),
                                   "--out", ablate.string(), "--no-timestamp"})) == 0;
  const double s = t.seconds();
  if (!ran) {
    report(6, Verdict::kFail, "stability methodology", "ablate-k did not complete");
    report(7, Verdict::kFail, "structure preservation", "ablate-k did not complete");
    return;
  }
  // Recomputed from the per-epoch series rather than trusting the summary file.
  const auto rows = read_csv(ablate / "stability.csv");
  const std::size_t c5 = column(rows.front(), "mmd_k5"), call = column(rows.front(), "mmd_kall");
  std::vector<std::vector<double>> k5(kSeeds), kall(kSeeds);
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const std::size_t seed = std::stoul(rows[r][0]);
    k5[seed].push_back(std::stod(rows[r][c5]));
    kall[seed].push_back(std::stod(rows[r][call]));
  }
  std::vector<double> v5, vall;
  std::size_t violations = 0;
  std::string per_seed;
  for (std::size_t i = 0; i < kSeeds; ++i) {
    v5.push_back(final_window_variance(k5[i]));
    vall.push_back(final_window_variance(kall[i]));
    violations += v5.back() > vall.back();
    per_seed += (i ? " " : "") + std::string(v5.back() <= vall.back() ? "ok" : "x");
  }
  const bool median_ok = median(v5) <= median(vall);
  report(6, soft(violations, median_ok && s < 3600.0), "stability methodology",
         "median final-window MMD variance K=5 " + fmt(median(v5)) + " vs K=all " +
             fmt(median(vall)) + ", per seed [" + per_seed + "], " + std::to_string(violations) +
             "/5 violations, " + fmt(s) + " s (limit 3600 s)");

  const fs::path cfg = root / "no_nce.cfg";
  std::ofstream(cfg) << "lambda_x = 0\nlambda_y = 0\nk = 5\n";
  std::vector<double> full, ablated;
  std::size_t worse = 0;
  for (std::size_t i = 0; i < kSeeds; ++i) {
    const fs::path out = root / "no_nce" / ("seed" + std::to_string(i));
    const int code = cli({"train", "--config", cfg.string(), "--seed-data", std::to_string(100 + i),
                          "--seed-init", std::to_string(200 + i), "--seed-sample",
                          std::to_string(300 + i), "--out", out.string(), "--no-timestamp"});
    if (code != 0) {
      report(7, Verdict::kFail, "structure preservation", "lambda 0 run " + std::to_string(i) +
                                                              " did not complete");
      return;
    }
    ablated.push_back(final_window_mean(history_column(out / "history.csv", "structure")));
    full.push_back(final_window_mean(history_column(
        ablate / "k5" / ("seed" + std::to_string(i)) / "history.csv", "structure")));
    worse += ablated.back() >= full.back();
  }
  double mean_full = 0.0, mean_ablated = 0.0;
  for (std::size_t i = 0; i < kSeeds; ++i) {
    mean_full += full[i] / kSeeds;
    mean_ablated += ablated[i] / kSeeds;
  }
  report(7, soft(worse, mean_ablated < mean_full), "structure preservation",
         "final-window structure with lambda_X=lambda_Y=0 " + fmt(mean_ablated) +
             " vs full objective " + fmt(mean_full) + ", " + std::to_string(worse) +
             "/5 seeds not lower");
}

void criterion_8(const fs::path& root) {
  const fs::path cfg = root / "small.cfg";
  std::ofstream(cfg) << "epochs = 4\ndataset_size = 8\neval_size = 8\n";
  const std::string c = cfg.string();
  const std::vector<std::vector<std::string>> commands{
      {"train", "--config", c},
      {"ablate-k", "--config", c, "--seeds", "2", "--ks", "3,all"},
      {"ablate-layers", "--config", c, "--seeds", "2"},
      {"mi-diagnose", "--config", c},
      {"dump-similarity", "--config", c, "--image", "2", "--theta", "0.2"},
  };
  std::size_t files = 0, differing = 0;
  std::string bad;
  for (const auto& base : commands) {
    std::string outputs[2];
    const fs::path run_dir = root / "determinism" / base.front();
    for (int r = 0; r < 2; ++r) {
      auto args = with_seeds(base);
      args.insert(args.end(), {"--out", run_dir.string(), "--no-timestamp"});
      if (cli(args, &outputs[r]) != 0) {
        report(8, Verdict::kFail, "determinism", base.front() + " failed");
        return;
      }
      fs::rename(run_dir, run_dir.string() + (r ? ".b" : ".a"));
    }
    const fs::path a = run_dir.string() + ".a", b = run_dir.string() + ".b";
    std::vector<fs::path> fa, fb;
    for (const auto& e : fs::recursive_directory_iterator(a))
      if (e.is_regular_file()) fa.push_back(fs::relative(e.path(), a));
    for (const auto& e : fs::recursive_directory_iterator(b))
      if (e.is_regular_file()) fb.push_back(fs::relative(e.path(), b));
    std::sort(fa.begin(), fa.end());
    std::sort(fb.begin(), fb.end());
    bool same = fa == fb && outputs[0] == outputs[1];
    for (const auto& p : fa) {
      ++files;
      if (fa == fb && slurp(a / p) != slurp(b / p)) {
        ++differing;
        same = false;
      }
    }
    if (!same) bad += " " + base.front();
  }
  report(8, of(bad.empty() && files > 0), "determinism",
         std::to_string(commands.size()) + " commands run twice, " + std::to_string(files) +
             " files byte-compared, " + std::to_string(differing) + " differ" +
             (bad.empty() ? "" : ", mismatched:" + bad));
}

}  // namespace

int main() {
  std::string tmpl = (fs::temp_directory_path() / "ranknce-acceptance-XXXXXX").string();
  if (!mkdtemp(tmpl.data())) {
    std::cerr << "cannot create a scratch directory\n";
    return 2;
  }
  const fs::path root = tmpl;
  try {
    criterion_1();
    criterion_2();
    criterion_3();
    criterion_4();
    criterion_5();
    criteria_6_7(root);
    criterion_8(root);
  } catch (const std::exception& e) {
    std::cerr << "acceptance aborted: " << e.what() << '\n';
    ++failures;
  }
  std::error_code ec;
  fs::remove_all(root, ec);
  std::cout << (failures ? std::to_string(failures) + " criteria failed" : "all criteria met")
            << std::endl;
  return failures ? 1 : 0;
}
