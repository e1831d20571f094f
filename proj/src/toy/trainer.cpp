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

#include "ranknce/toy/trainer.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <ostream>

#include "ranknce/mi_estimators.hpp"
#include "ranknce/negative_selection.hpp"
#include "ranknce/ops.hpp"
#include "ranknce/tensor_io.hpp"
#include "ranknce/toy/metrics.hpp"

namespace ranknce::toy {
namespace {

enum Stream : std::uint64_t {
  kTrainX = 0,
  kTrainY = 1,
  kEvalX = 2,
  kEvalY = 3,
  kShuffle = 10,
  kLocations = 11,
  kEvalLocations = kEvalLocationStream,
};

std::vector<Tensor> gradients(const Tape& tape, const BoundModel& model,
                              const ParameterSet& params) {
  std::vector<Tensor> grads;
  grads.reserve(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    grads.push_back(tape.grad(model.param(i).id()));
  }
  return grads;
}

std::vector<std::size_t> shuffled(std::size_t n, Rng& rng) {
  std::vector<std::size_t> p(n);
  std::iota(p.begin(), p.end(), std::size_t{0});
  for (std::size_t i = n; i > 1; --i) {
    std::swap(p[i - 1], p[static_cast<std::size_t>(rng.index(i))]);
  }
  return p;
}

void write_images_csv(const std::filesystem::path& path, std::span<const Tensor> images) {
  std::ofstream out(path);
  out << "image,pixel,value\n";
  for (std::size_t i = 0; i < images.size(); ++i)
    for (std::size_t p = 0; p < images[i].numel(); ++p)
      out << i << ',' << p << ',' << format_double(images[i][p]) << '\n';
}

// Best-effort dump of the batch and the similarity matrices of its first
// image. Any failure while recomputing is recorded in the note file.
void dump_diagnostics(const std::filesystem::path& dir, const TrainConfig& config,
                      const ParameterSet& params, std::span<const Tensor> xs,
                      std::span<const Tensor> ys, const std::string& reason) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  std::ofstream note(dir / "abort_reason.txt");
  note << reason << '\n';
  write_images_csv(dir / "abort_batch_x.csv", xs);
  write_images_csv(dir / "abort_batch_y.csv", ys);
  try {
    Tape tape;
    BoundModel model(tape, params, config.arch, Trainable::kNone);
    Var x = tape.constant(xs.front());
    auto [fake_img, real_taps] = model.translate_with_taps(x);
    const auto fake_taps = model.encode(fake_img);
    Rng rng(config.seed_sample, kEvalLocations);
    const auto locs = features::sample_stack_locations(real_taps, config.samples_per_layer, rng);
    const auto taps = model.tap_layers();
    const auto real = features::project(real_taps, locs, model.heads(), taps,
                                        config.normalize_features);
    const auto fake = features::project(fake_taps, locs, model.heads(), taps,
                                        config.normalize_features);
    for (std::size_t l = 0; l < taps.size(); ++l) {
      const auto sim = selection::similarity_matrix(fake.layers[l].features,
                                                    real.layers[l].features);
      std::ofstream out(dir / ("abort_similarity_layer" + std::to_string(taps[l]) + ".csv"));
      write_tensor_csv(out, sim.scores.value());
    }
  } catch (const std::exception& e) {
    note << "similarity recomputation failed: " << e.what() << '\n';
  }
}

}  // namespace

const char* RunHistory::csv_header() {
  return "epoch,lr,loss_d,loss_gan,nce_x,nce_y,total,skipped_queries,mmd,structure,"
         "infonce,infonce_offset";
}

void RunHistory::write_csv(std::ostream& out) const {
  out << csv_header() << '\n';
  for (const auto& e : epochs) {
    double info = 0.0, info_off = 0.0;
    for (const auto& m : e.eval.mi) {
      info += m.infonce;
      info_off += m.infonce_offset;
    }
    if (!e.eval.mi.empty()) {
      info /= static_cast<double>(e.eval.mi.size());
      info_off /= static_cast<double>(e.eval.mi.size());
    }
    out << e.epoch << ',' << format_double(e.lr) << ',' << format_double(e.loss_d) << ','
        << format_double(e.loss_gan) << ',' << format_double(e.nce_x) << ','
        << format_double(e.nce_y) << ',' << format_double(e.total) << ','
        << e.skipped_queries << ',' << format_double(e.eval.mmd) << ','
        << format_double(e.eval.structure) << ',' << format_double(info) << ','
        << format_double(info_off) << '\n';
  }
}

Datasets make_datasets(const TrainConfig& config) {
  Datasets d;
  d.train_x = make_dataset(config.domain_x, config.dataset_size, mix_seed(config.seed_data, kTrainX));
  d.train_y = make_dataset(config.domain_y, config.dataset_size, mix_seed(config.seed_data, kTrainY));
  d.eval_x = make_dataset(config.domain_x, config.eval_size, mix_seed(config.seed_data, kEvalX));
  d.eval_y = make_dataset(config.domain_y, config.eval_size, mix_seed(config.seed_data, kEvalY));
  return d;
}

double learning_rate(const TrainConfig& config, std::size_t epoch) {
  const std::size_t half = config.epochs / 2;
  const double decay = static_cast<double>(epoch + 1 > half ? epoch + 1 - half : 0) /
                       static_cast<double>(config.epochs - half + 1);
  return config.lr * (1.0 - decay);
}

EvalMetrics evaluate(const ParameterSet& params, const TrainConfig& config,
                     std::span<const Tensor> eval_x, std::span<const Tensor> eval_y) {
  EvalMetrics metrics;
  std::vector<Tensor> generated;
  Rng rng(config.seed_sample, kEvalLocations);
  const auto& taps = config.arch.encoder.tap_layers;
  metrics.mi.resize(taps.size());
  double structure_sum = 0.0;
  for (const Tensor& img : eval_x) {
    Tape tape;
    BoundModel model(tape, params, config.arch, Trainable::kNone);
    Var x = tape.constant(img);
    auto [fake_img, real_taps] = model.translate_with_taps(x);
    generated.push_back(fake_img.value());
    try {
      structure_sum += structure_score(img, fake_img.value());
    } catch (const NumericError&) {
      // A flat translation preserves no structure.
    }
    const auto fake_taps = model.encode(fake_img);
    const auto locs = features::sample_stack_locations(real_taps, config.samples_per_layer, rng);
    const auto real = features::project(real_taps, locs, model.heads(), taps,
                                        config.normalize_features);
    const auto fake = features::project(fake_taps, locs, model.heads(), taps,
                                        config.normalize_features);
    for (std::size_t l = 0; l < taps.size(); ++l) {
      Var sim = ops::matmul(fake.layers[l].features, ops::transpose(real.layers[l].features));
      const auto report = mi::mi_report(sim.value(), config.weights.tau);
      auto& m = metrics.mi[l];
      m.layer = taps[l];
      m.infonce += report.infonce;
      m.infonce_offset += report.infonce_offset;
      m.multisample += report.multisample;
      m.max_negative_p = std::max(m.max_negative_p, report.max_negative_p);
      m.mean_negative_p += report.mean_negative_p;
    }
  }
  const double n = static_cast<double>(eval_x.size());
  for (auto& m : metrics.mi) {
    m.infonce /= n;
    m.infonce_offset /= n;
    m.multisample /= n;
    m.mean_negative_p /= n;
  }
  metrics.structure = structure_sum / n;
  metrics.mmd = mmd_metric(generated, eval_y);
  return metrics;
}

RunHistory train(const TrainConfig& config, const TrainHooks& hooks) {
  config.validate();
  const Datasets data = make_datasets(config);
  const auto objective = config.objective();
  const auto& w = config.weights;

  RunHistory history;
  ParameterSet params = init_parameters(config.arch, config.seed_init);
  Adam adam_g(params, in_generator_group, config.beta1, config.beta2);
  Adam adam_d(params, in_discriminator_group, config.beta1, config.beta2);
  Rng shuffle_rng(config.seed_sample, kShuffle);
  Rng location_rng(config.seed_sample, kLocations);

  if (hooks.on_eval) hooks.on_eval(0, evaluate(params, config, data.eval_x, data.eval_y));

  const std::size_t steps_per_epoch = config.dataset_size / config.batch;
  std::size_t step = 0;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    const double lr = learning_rate(config, epoch);
    const auto order_x = shuffled(config.dataset_size, shuffle_rng);
    const auto order_y = shuffled(config.dataset_size, shuffle_rng);
    EpochRecord rec;
    rec.epoch = epoch + 1;
    rec.lr = lr;
    for (std::size_t b = 0; b < steps_per_epoch; ++b) {
      ++step;
      std::vector<Tensor> xs, ys;
      for (std::size_t k = 0; k < config.batch; ++k) {
        xs.push_back(data.train_x[order_x[b * config.batch + k]]);
        ys.push_back(data.train_y[order_y[b * config.batch + k]]);
      }
      StepLosses sl;
      sl.step = step;
      sl.layers = config.arch.encoder.tap_layers;
      try {
        if (w.lambda_gan > 0.0) {
          Tape tape;
          BoundModel model(tape, params, config.arch, Trainable::kDiscriminator);
          std::vector<Var> real_logits, fake_logits;
          for (std::size_t k = 0; k < xs.size(); ++k) {
            const Var fake = tape.constant(model.translate(tape.constant(xs[k])).value());
            fake_logits.push_back(model.discriminate(fake));
            real_logits.push_back(model.discriminate(tape.constant(ys[k])));
          }
          const auto loss = losses::gan_loss_d(ops::concat(real_logits),
                                               ops::concat(fake_logits), config.gan);
          tape.backward(loss.value);
          adam_d.step(params, gradients(tape, model, params), lr);
          sl.loss_d = loss.item();
        }
        {
          Tape tape;
          BoundModel model(tape, params, config.arch, Trainable::kGenerator);
          std::vector<Var> xv, yv;
          for (const auto& t : xs) xv.push_back(tape.constant(t));
          for (const auto& t : ys) yv.push_back(tape.constant(t));
          const auto terms = losses::total_objective(model, xv, yv, objective, location_rng);
          if (terms.total.value().data().empty() || !terms.total.value().all_finite()) {
            throw NumericError("generator objective is not finite");
          }
          tape.backward(terms.total);
          adam_g.step(params, gradients(tape, model, params), lr);
          sl.gan = terms.gan;
          sl.total = terms.total.item();
          sl.nce_x_layers = terms.nce_x.per_layer;
          sl.nce_y_layers = terms.nce_y.per_layer;
          rec.nce_x += terms.nce_x.item();
          rec.nce_y += terms.nce_y.item();
          rec.skipped_queries += terms.nce_x.skipped_queries + terms.nce_y.skipped_queries;
        }
      } catch (const NumericError& e) {
        const std::string reason = "epoch " + std::to_string(epoch + 1) + ", step " +
                                   std::to_string(step) + ": " + e.what();
        if (!hooks.diagnostics_dir.empty()) {
          dump_diagnostics(hooks.diagnostics_dir, config, params, xs, ys, reason);
        }
        throw TrainingAborted("training aborted at " + reason);
      }
      for (const auto& p : params) {
        if (!p.value.all_finite()) {
          throw TrainingAborted("parameter " + p.name + " became non-finite at step " +
                                std::to_string(step));
        }
      }
      rec.loss_d += sl.loss_d;
      rec.loss_gan += sl.gan;
      rec.total += sl.total;
      if (hooks.on_step) hooks.on_step(sl);
    }
    const double n = static_cast<double>(steps_per_epoch);
    rec.loss_d /= n;
    rec.loss_gan /= n;
    rec.nce_x /= n;
    rec.nce_y /= n;
    rec.total /= n;
    rec.eval = evaluate(params, config, data.eval_x, data.eval_y);
    if (hooks.on_eval) hooks.on_eval(rec.epoch, rec.eval);
    history.epochs.push_back(std::move(rec));
  }
  history.final_params = std::move(params);
  return history;
}

}  // namespace ranknce::toy
