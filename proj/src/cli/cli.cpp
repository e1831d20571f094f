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

#include "ranknce/cli.hpp"

#include <exception>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "commands.hpp"

namespace ranknce::cli {
namespace {

using detail::Options;

void add_common(CLI::App& sub, Options& opt) {
  sub.add_option("--config", opt.config, "key = value config file")->check(CLI::ExistingFile);
  sub.add_option("--out", opt.out, "output directory");
  sub.add_option("--seed-data", opt.seed_data, "dataset seed");
  sub.add_option("--seed-init", opt.seed_init, "parameter init seed");
  sub.add_option("--seed-sample", opt.seed_sample, "shuffle and patch sampling seed");
  sub.add_option("--k", opt.k, "negatives per query, or 'all'");
  sub.add_option("--theta", opt.theta, "pruning threshold (inf and -inf allowed)");
  sub.add_option("--epochs", opt.epochs, "training epochs");
  sub.add_flag("--no-timestamp", opt.no_timestamp, "omit the timestamp from run_meta.json");
}

}  // namespace

int run(std::span<const std::string> args, std::ostream& out, std::ostream& err) {
  Options opt;
  opt.args.assign(args.begin(), args.end());

  CLI::App app{"RankNCE negative pruning on a toy unpaired translation task", "ranknce"};
  app.require_subcommand(1);
  auto* train = app.add_subcommand("train", "train one model");
  auto* ablate_k = app.add_subcommand("ablate-k", "final-window MMD variance across K");
  auto* ablate_layers =
      app.add_subcommand("ablate-layers", "first tap layer alone vs all tap layers");
  auto* mi = app.add_subcommand("mi-diagnose", "train and log MI bounds per evaluation");
  auto* dump = app.add_subcommand("dump-similarity", "similarity, pruning and selection of one image");
  auto* selftest = app.add_subcommand("selftest", "run the invariant checks");
  for (auto* sub : {train, ablate_k, ablate_layers, mi, dump}) add_common(*sub, opt);
  for (auto* sub : {ablate_k, ablate_layers}) sub->add_option("--seeds", opt.seeds, "seed triples");
  ablate_k->add_option("--ks", opt.ks, "comma-separated K values");
  dump->add_option("--checkpoint", opt.checkpoint, "checkpoint.bin from train")
      ->check(CLI::ExistingFile);
  dump->add_option("--image", opt.image, "evaluation image index");
  selftest->add_option("--seed", opt.selftest_seed, "base seed of the checks");

  // CLI11 parses a reversed argv-style vector.
  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    std::ostringstream help, fail;
    const int code = app.exit(e, help, fail);
    if (code == 0) {
      out << help.str();
      return 0;
    }
    err << fail.str() << app.help();
    return 2;
  }

  const auto* chosen = app.get_subcommands().front();
  opt.verb = chosen->get_name();
  try {
    if (chosen == train) return detail::cmd_train(opt, out, err);
    if (chosen == ablate_k) return detail::cmd_ablate_k(opt, out, err);
    if (chosen == ablate_layers) return detail::cmd_ablate_layers(opt, out, err);
    if (chosen == mi) return detail::cmd_mi_diagnose(opt, out, err);
    if (chosen == dump) return detail::cmd_dump_similarity(opt, out, err);
    return detail::cmd_selftest(opt, out, err);
  } catch (const std::exception& e) {
    err << "ranknce " << opt.verb << ": " << e.what() << '\n';
    return 1;
  }
}

}  // namespace ranknce::cli
