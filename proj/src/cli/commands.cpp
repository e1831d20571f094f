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

#include "commands.hpp"

#include <stdlib.h>

#include <algorithm>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <numeric>
#include <ostream>
#include <sstream>

#include "json.hpp"
#include "ranknce/cli.hpp"
#include "ranknce/error.hpp"
#include "ranknce/negative_selection.hpp"
#include "ranknce/tensor_io.hpp"
#include "ranknce/toy/trainer.hpp"
#include "ranknce/verify/checks.hpp"

namespace ranknce::cli::detail {
namespace fs = std::filesystem;
namespace {

using toy::format_k;

void prepare_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());
  }
}

void write_file(const fs::path& path, const std::function<void(std::ostream&)>& body) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot write " + path.string());
  body(f);
  f.close();
  if (!f) throw IoError("write failed for " + path.string());
}

std::string iso_timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm utc{};
  gmtime_r(&now, &utc);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &utc);
  return buf;
}

// run_meta.json; the timestamp sits on its own line so it can be diffed out.
void write_meta(const fs::path& dir, const Options& opt, const std::vector<std::string>& outputs) {
  nlohmann::ordered_json meta;
  meta["tool"] = "ranknce";
  meta["verb"] = opt.verb;
  meta["args"] = opt.args;
  meta["outputs"] = outputs;
  if (!opt.no_timestamp) meta["timestamp"] = iso_timestamp();
  write_file(dir / "run_meta.json", [&](std::ostream& f) { f << meta.dump(2) << '\n'; });
}

void write_config_file(const fs::path& dir, const toy::TrainConfig& config) {
  write_file(dir / "config.txt", [&](std::ostream& f) { toy::write_config(f, config); });
}

std::string join_layers(const std::vector<std::size_t>& layers) {
  std::string s;
  for (std::size_t l : layers) s += (s.empty() ? "" : " ") + std::to_string(l);
  return s;
}

double median(std::vector<double> v) {
  if (v.empty()) return std::nan("");
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double mean(std::span<const double> v) {
  if (v.empty()) return std::nan("");
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

std::vector<double> mmd_series(const toy::RunHistory& h) {
  std::vector<double> v;
  for (const auto& e : h.epochs) v.push_back(e.eval.mmd);
  return v;
}

std::vector<double> structure_series(const toy::RunHistory& h) {
  std::vector<double> v;
  for (const auto& e : h.epochs) v.push_back(e.eval.structure);
  return v;
}

std::vector<double> tail(const std::vector<double>& v) {
  return {v.end() - static_cast<std::ptrdiff_t>(final_window_size(v.size())), v.end()};
}

// One training run with its standard artifacts in `dir`.
toy::RunHistory run_training(const toy::TrainConfig& config, const fs::path& dir,
                             std::function<void(std::size_t, const toy::EvalMetrics&)> on_eval = {}) {
  prepare_dir(dir);
  write_config_file(dir, config);
  std::vector<toy::StepLosses> steps;
  toy::TrainHooks hooks;
  hooks.on_step = [&](const toy::StepLosses& s) { steps.push_back(s); };
  hooks.on_eval = std::move(on_eval);
  hooks.diagnostics_dir = dir / "abort";
  const toy::RunHistory history = toy::train(config, hooks);

  write_file(dir / "history.csv", [&](std::ostream& f) { history.write_csv(f); });
  write_file(dir / "loss_steps.csv", [&](std::ostream& f) {
    f << "step,term,layer,value\n";
    for (const auto& s : steps) {
      f << s.step << ",loss_d,," << format_double(s.loss_d) << '\n';
      f << s.step << ",gan,," << format_double(s.gan) << '\n';
      f << s.step << ",total,," << format_double(s.total) << '\n';
      for (std::size_t l = 0; l < s.nce_x_layers.size(); ++l)
        f << s.step << ",nce_x," << s.layers[l] << ',' << format_double(s.nce_x_layers[l]) << '\n';
      for (std::size_t l = 0; l < s.nce_y_layers.size(); ++l)
        f << s.step << ",nce_y," << s.layers[l] << ',' << format_double(s.nce_y_layers[l]) << '\n';
    }
  });
  save_tensors(dir / "checkpoint.bin", history.final_params.to_named());
  return history;
}

const std::vector<std::string> kRunOutputs{"config.txt", "history.csv", "loss_steps.csv",
                                           "checkpoint.bin"};

std::vector<std::size_t> parse_k_list(const std::string& text) {
  std::vector<std::size_t> ks;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ',');) {
    if (item.empty()) throw ConfigError("empty entry in K list '" + text + "'");
    ks.push_back(toy::parse_k(item));
  }
  if (ks.empty()) throw ConfigError("K list is empty");
  return ks;
}

std::string seed_dir(std::size_t i) { return "seed" + std::to_string(i); }

}  // namespace

toy::TrainConfig build_config(const Options& opt) {
  toy::TrainConfig config = opt.config.empty() ? toy::TrainConfig{} : toy::load_config(opt.config);
  if (opt.seed_data) config.seed_data = *opt.seed_data;
  if (opt.seed_init) config.seed_init = *opt.seed_init;
  if (opt.seed_sample) config.seed_sample = *opt.seed_sample;
  if (opt.k) toy::apply_config_value(config, "k", *opt.k);
  if (opt.theta) toy::apply_config_value(config, "theta", *opt.theta);
  if (opt.epochs) config.epochs = *opt.epochs;
  config.validate();
  return config;
}

toy::TrainConfig with_seed_offset(toy::TrainConfig config, std::size_t i) {
  config.seed_data += i;
  config.seed_init += i;
  config.seed_sample += i;
  return config;
}

std::size_t final_window_size(std::size_t n) {
  const std::size_t w = (n + 4) / 5;
  return n >= 2 ? std::max<std::size_t>(w, 2) : n;
}

double final_window_variance(std::span<const double> values) {
  const std::size_t w = final_window_size(values.size());
  if (w < 2) return 0.0;
  const auto window = values.last(w);
  const double m = mean(window);
  double ss = 0.0;
  for (double v : window) ss += (v - m) * (v - m);
  return ss / static_cast<double>(w - 1);
}

int cmd_train(const Options& opt, std::ostream& out, std::ostream& err) {
  const toy::TrainConfig config = build_config(opt);
  const fs::path dir = opt.out;
  try {
    const auto history = run_training(config, dir);
    write_meta(dir, opt, kRunOutputs);
    const auto& last = history.epochs.back();
    out << "trained " << history.epochs.size() << " epochs, final mmd "
        << format_double(last.eval.mmd) << ", structure " << format_double(last.eval.structure)
        << '\n';
  } catch (const toy::TrainingAborted& e) {
    err << e.what() << "\ndiagnostics written to " << (dir / "abort").string() << '\n';
    return 1;
  }
  return 0;
}

int cmd_ablate_k(const Options& opt, std::ostream& out, std::ostream& err) {
  const toy::TrainConfig base = build_config(opt);
  const auto ks = parse_k_list(opt.ks);
  if (opt.seeds < 1) throw ConfigError("--seeds must be at least 1");
  const fs::path dir = opt.out;
  prepare_dir(dir);
  write_config_file(dir, base);

  // mmd[k][seed] is empty when that run aborted
  std::vector<std::vector<std::vector<double>>> mmd(ks.size(),
                                                    std::vector<std::vector<double>>(opt.seeds));
  bool failed = false;
  for (std::size_t s = 0; s < opt.seeds; ++s) {
    for (std::size_t i = 0; i < ks.size(); ++i) {
      toy::TrainConfig config = with_seed_offset(base, s);
      config.weights.k = ks[i];
      const fs::path run_dir = dir / ("k" + format_k(ks[i])) / seed_dir(s);
      try {
        mmd[i][s] = mmd_series(run_training(config, run_dir));
      } catch (const toy::TrainingAborted& e) {
        err << "K=" << format_k(ks[i]) << " seed " << s << ": " << e.what() << '\n';
        failed = true;
      }
    }
  }

  write_file(dir / "stability.csv", [&](std::ostream& f) {
    f << "seed,epoch";
    for (std::size_t k : ks) f << ",mmd_k" << format_k(k);
    f << '\n';
    for (std::size_t s = 0; s < opt.seeds; ++s) {
      for (std::size_t e = 0; e < base.epochs; ++e) {
        f << s << ',' << e + 1;
        for (std::size_t i = 0; i < ks.size(); ++i) {
          f << ',';
          if (!mmd[i][s].empty()) f << format_double(mmd[i][s][e]);
        }
        f << '\n';
      }
    }
  });
  std::vector<double> medians(ks.size());
  write_file(dir / "final_window.csv", [&](std::ostream& f) {
    f << "k,seed,window_epochs,mmd_variance,mmd_mean\n";
    for (std::size_t i = 0; i < ks.size(); ++i) {
      for (std::size_t s = 0; s < opt.seeds; ++s) {
        if (mmd[i][s].empty()) continue;
        f << format_k(ks[i]) << ',' << s << ',' << final_window_size(base.epochs) << ','
          << format_double(final_window_variance(mmd[i][s])) << ','
          << format_double(mean(tail(mmd[i][s]))) << '\n';
      }
    }
  });
  write_file(dir / "final_window_summary.csv", [&](std::ostream& f) {
    f << "k,seeds,median_mmd_variance,mean_mmd_variance\n";
    for (std::size_t i = 0; i < ks.size(); ++i) {
      std::vector<double> vars;
      for (const auto& series : mmd[i])
        if (!series.empty()) vars.push_back(final_window_variance(series));
      medians[i] = median(vars);
      f << format_k(ks[i]) << ',' << vars.size() << ',' << format_double(medians[i]) << ','
        << format_double(mean(vars)) << '\n';
    }
  });
  write_meta(dir, opt, {"config.txt", "stability.csv", "final_window.csv",
                        "final_window_summary.csv"});
  out << "final-window MMD variance (last " << final_window_size(base.epochs) << " of "
      << base.epochs << " epochs), median over " << opt.seeds << " seeds\n";
  for (std::size_t i = 0; i < ks.size(); ++i)
    out << "  K=" << format_k(ks[i]) << ": " << format_double(medians[i]) << '\n';
  return failed ? 1 : 0;
}

int cmd_ablate_layers(const Options& opt, std::ostream& out, std::ostream& err) {
  const toy::TrainConfig base = build_config(opt);
  const auto& taps = base.arch.encoder.tap_layers;
  if (taps.size() < 2) throw ConfigError("ablate-layers needs at least two tap layers");
  if (opt.seeds < 1) throw ConfigError("--seeds must be at least 1");
  const fs::path dir = opt.out;
  prepare_dir(dir);
  write_config_file(dir, base);

  struct Arm {
    std::string name;
    std::vector<std::size_t> taps;
    std::vector<std::vector<double>> mmd, structure;
  };
  std::vector<Arm> arms{{"solo", {taps.front()}, {}, {}}, {"multi", taps, {}, {}}};
  bool failed = false;
  for (auto& arm : arms) {
    arm.mmd.resize(opt.seeds);
    arm.structure.resize(opt.seeds);
    for (std::size_t s = 0; s < opt.seeds; ++s) {
      toy::TrainConfig config = with_seed_offset(base, s);
      config.arch.encoder.tap_layers = arm.taps;
      try {
        const auto h = run_training(config, dir / arm.name / seed_dir(s));
        arm.mmd[s] = mmd_series(h);
        arm.structure[s] = structure_series(h);
      } catch (const toy::TrainingAborted& e) {
        err << arm.name << " seed " << s << ": " << e.what() << '\n';
        failed = true;
      }
    }
  }

  write_file(dir / "layers.csv", [&](std::ostream& f) {
    f << "seed,epoch,mmd_solo,mmd_multi,structure_solo,structure_multi\n";
    for (std::size_t s = 0; s < opt.seeds; ++s) {
      for (std::size_t e = 0; e < base.epochs; ++e) {
        f << s << ',' << e + 1;
        for (const auto* series : {&arms[0].mmd, &arms[1].mmd, &arms[0].structure,
                                   &arms[1].structure}) {
          f << ',';
          if (!(*series)[s].empty()) f << format_double((*series)[s][e]);
        }
        f << '\n';
      }
    }
  });
  write_file(dir / "layers_summary.csv", [&](std::ostream& f) {
    f << "arm,tap_layers,seeds,final_mmd_mean,final_structure_mean,median_mmd_variance\n";
    for (const auto& arm : arms) {
      std::vector<double> mmds, structures, vars;
      for (std::size_t s = 0; s < opt.seeds; ++s) {
        if (arm.mmd[s].empty()) continue;
        mmds.push_back(mean(tail(arm.mmd[s])));
        structures.push_back(mean(tail(arm.structure[s])));
        vars.push_back(final_window_variance(arm.mmd[s]));
      }
      f << arm.name << ',' << join_layers(arm.taps) << ',' << mmds.size() << ','
        << format_double(mean(mmds)) << ',' << format_double(mean(structures)) << ','
        << format_double(median(vars)) << '\n';
      out << arm.name << " (taps " << join_layers(arm.taps) << "): final-window mmd "
          << format_double(mean(mmds)) << ", structure " << format_double(mean(structures))
          << '\n';
    }
  });
  write_meta(dir, opt, {"config.txt", "layers.csv", "layers_summary.csv"});
  return failed ? 1 : 0;
}

int cmd_mi_diagnose(const Options& opt, std::ostream& out, std::ostream& err) {
  const toy::TrainConfig config = build_config(opt);
  const fs::path dir = opt.out;
  const std::size_t steps_per_epoch = config.dataset_size / config.batch;
  std::ostringstream rows;
  std::size_t evals = 0;
  auto on_eval = [&](std::size_t epoch, const toy::EvalMetrics& m) {
    ++evals;
    for (const auto& l : m.mi) {
      rows << epoch * steps_per_epoch << ',' << l.layer << ',' << format_double(l.infonce) << ','
           << format_double(l.infonce_offset) << ',' << format_double(l.multisample) << ','
           << format_double(l.max_negative_p) << ',' << format_double(l.mean_negative_p)
           << '\n';
    }
  };
  try {
    run_training(config, dir, on_eval);
  } catch (const toy::TrainingAborted& e) {
    err << e.what() << "\ndiagnostics written to " << (dir / "abort").string() << '\n';
    return 1;
  }
  write_file(dir / "mi.csv", [&](std::ostream& f) {
    f << "step,layer,bound_eq5,bound_eq5_offset,bound_eq6,max_neg_p,mean_neg_p\n" << rows.str();
  });
  auto outputs = kRunOutputs;
  outputs.push_back("mi.csv");
  write_meta(dir, opt, outputs);
  out << "wrote " << evals << " evaluations x " << config.arch.encoder.tap_layers.size()
      << " layers to " << (dir / "mi.csv").string() << '\n';
  return 0;
}

int cmd_dump_similarity(const Options& opt, std::ostream& out, std::ostream&) {
  const toy::TrainConfig config = build_config(opt);
  const fs::path dir = opt.out;
  prepare_dir(dir);
  const toy::ParameterSet params =
      opt.checkpoint.empty() ? toy::init_parameters(config.arch, config.seed_init)
                             : toy::ParameterSet::from_named(load_tensors(opt.checkpoint));
  if (opt.image >= config.eval_size) {
    throw ConfigError("--image " + std::to_string(opt.image) + " is outside the " +
                      std::to_string(config.eval_size) + " evaluation images");
  }
  const auto data = toy::make_datasets(config);

  Tape tape;
  toy::BoundModel model(tape, params, config.arch, toy::Trainable::kNone);
  auto [fake_img, real_taps] = model.translate_with_taps(tape.constant(data.eval_x[opt.image]));
  const auto fake_taps = model.encode(fake_img);
  // Same stream as evaluation, so image 0 gets the locations it is evaluated on.
  Rng rng(config.seed_sample, toy::kEvalLocationStream);
  std::vector<std::vector<std::size_t>> locs;
  for (std::size_t i = 0; i <= opt.image; ++i)
    locs = features::sample_stack_locations(real_taps, config.samples_per_layer, rng);
  const auto taps = model.tap_layers();
  const auto real = features::project(real_taps, locs, model.heads(), taps,
                                      config.normalize_features);
  const auto fake = features::project(fake_taps, locs, model.heads(), taps,
                                      config.normalize_features);

  std::vector<std::string> outputs{"config.txt", "features.csv"};
  write_config_file(dir, config);
  for (std::size_t l = 0; l < taps.size(); ++l) {
    const auto sim = selection::similarity_matrix(fake.layers[l].features,
                                                  real.layers[l].features);
    const auto pruned = selection::prune(sim, config.weights.theta);
    const auto negatives =
        selection::rank_topk(pruned, config.weights.k, selection::EmptyRowPolicy::kKeep);
    const std::string name = "similarity_layer" + std::to_string(taps[l]) + ".csv";
    outputs.push_back(name);
    write_file(dir / name, [&](std::ostream& f) {
      f << "query_index,candidate_index,score,selected,pruned\n";
      const std::size_t n = sim.size();
      for (std::size_t i = 0; i < n; ++i) {
        const auto& chosen = negatives.rows[i].indices;
        for (std::size_t j = 0; j < n; ++j) {
          if (i == j) continue;
          const bool is_pruned = pruned.is_pruned(i, j);
          const bool selected = std::find(chosen.begin(), chosen.end(), j) != chosen.end();
          f << i << ',' << j << ',' << format_double(is_pruned ? 0.0 : sim.score(i, j)) << ','
            << (selected ? "true" : "false") << ',' << (is_pruned ? "true" : "false") << '\n';
        }
      }
    });
  }
  write_file(dir / "features.csv", [&](std::ostream& f) {
    const std::size_t width = config.arch.head_width;
    f << "layer,role,location";
    for (std::size_t c = 0; c < width; ++c) f << ",c" << c;
    f << '\n';
    for (std::size_t l = 0; l < taps.size(); ++l) {
      for (const auto* stack : {&fake, &real}) {
        const auto& layer = stack->layers[l];
        const Tensor& v = layer.features.value();
        for (std::size_t r = 0; r < layer.locations.size(); ++r) {
          f << taps[l] << ',' << (stack == &fake ? "query" : "key") << ','
            << layer.locations[r];
          for (std::size_t c = 0; c < v.dim(1); ++c) f << ',' << format_double(v.at(r, c));
          f << '\n';
        }
      }
    }
  });
  write_meta(dir, opt, outputs);
  out << "dumped " << taps.size() << " similarity layers for evaluation image " << opt.image
      << '\n';
  return 0;
}

namespace {

std::vector<fs::path> files_under(const fs::path& root) {
  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(root))
    if (e.is_regular_file()) files.push_back(fs::relative(e.path(), root));
  std::sort(files.begin(), files.end());
  return files;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

// Two `train` invocations with identical flags must leave identical trees.
verify::CheckResult check_cli_idempotence() {
  verify::CheckResult r{"cli_harness", "identical invocations give byte-identical outputs",
                        false, 0.0, ""};
  std::string tmpl = (fs::temp_directory_path() / "ranknce-selftest-XXXXXX").string();
  if (!mkdtemp(tmpl.data())) {
    r.detail = "cannot create a temporary directory";
    return r;
  }
  const fs::path root = tmpl;
  write_file(root / "tiny.cfg", [](std::ostream& f) {
    f << "image_size = 8\nepochs = 2\nbatch = 2\ndataset_size = 4\neval_size = 4\n"
         "samples_per_layer = 8\nhead_width = 8\n";
  });
  // Both runs write to the same --out so run_meta.json is comparable too.
  std::ostringstream sink;
  const std::vector<std::string> args{"train", "--config", (root / "tiny.cfg").string(), "--out",
                                      (root / "run").string(), "--no-timestamp"};
  int codes = run(args, sink, sink);
  fs::rename(root / "run", root / "a");
  codes |= run(args, sink, sink);
  fs::rename(root / "run", root / "b");
  const auto fa = files_under(root / "a"), fb = files_under(root / "b");
  std::size_t differing = 0;
  if (fa == fb) {
    for (const auto& p : fa) differing += slurp(root / "a" / p) != slurp(root / "b" / p);
  }
  r.passed = codes == 0 && fa == fb && !fa.empty() && differing == 0;
  r.value = static_cast<double>(differing);
  r.detail = std::to_string(fa.size()) + " files compared, " + std::to_string(differing) +
             " differ, exit codes " + (codes == 0 ? "0" : "nonzero");
  std::error_code ec;
  fs::remove_all(root, ec);
  return r;
}

}  // namespace

int cmd_selftest(const Options& opt, std::ostream& out, std::ostream&) {
  auto results = verify::run_all_checks(verify::SuiteSize{}, opt.selftest_seed);
  results.push_back(check_cli_idempotence());
  std::size_t passed = 0;
  for (const auto& r : results) {
    passed += r.passed;
    out << (r.passed ? "PASS " : "FAIL ") << r.module << ": " << r.invariant << " ("
        << r.detail << ")\n";
  }
  out << passed << "/" << results.size() << " checks passed\n";
  return passed == results.size() ? 0 : 1;
}

}  // namespace ranknce::cli::detail
