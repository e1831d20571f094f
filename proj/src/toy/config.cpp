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

#include "ranknce/toy/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "ranknce/error.hpp"
#include "ranknce/tensor_io.hpp"

namespace ranknce::toy {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& key, const std::string& text) {
  double v = 0.0;
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end) {
    throw ConfigError("config key '" + key + "': invalid number '" + text + "'");
  }
  return v;
}

std::size_t parse_size(const std::string& key, const std::string& text) {
  std::size_t v = 0;
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end) {
    throw ConfigError("config key '" + key + "': invalid integer '" + text + "'");
  }
  return v;
}

bool parse_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1") return true;
  if (text == "false" || text == "0") return false;
  throw ConfigError("config key '" + key + "': expected true/false, got '" + text + "'");
}

std::vector<std::size_t> parse_list(const std::string& key, const std::string& text) {
  std::vector<std::size_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_size(key, trim(item)));
  return out;
}

std::string join(const std::vector<std::size_t>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ',';
    s += std::to_string(v[i]);
  }
  return s;
}

std::string gan_name(losses::GanVariant g) {
  switch (g) {
    case losses::GanVariant::kNonSaturating: return "non-saturating";
    case losses::GanVariant::kMinimax: return "minimax";
    case losses::GanVariant::kLeastSquares: return "least-squares";
  }
  return "?";
}

void apply_domain(DomainSpec& d, const std::string& key, const std::string& field,
                  const std::string& value) {
  if (field == "kind") d.kind = parse_texture(value);
  else if (field == "period") d.period = parse_double(key, value);
  else if (field == "contrast") d.contrast = parse_double(key, value);
  else if (field == "noise") d.noise_sigma = parse_double(key, value);
  else throw ConfigError("unknown config key '" + key + "'");
}

void write_domain(std::ostream& out, const std::string& prefix, const DomainSpec& d) {
  out << prefix << ".kind = " << texture_name(d.kind) << '\n'
      << prefix << ".period = " << format_double(d.period) << '\n'
      << prefix << ".contrast = " << format_double(d.contrast) << '\n'
      << prefix << ".noise = " << format_double(d.noise_sigma) << '\n';
}

}  // namespace

std::string format_k(std::size_t k) {
  return k == selection::kAllNegatives ? "all" : std::to_string(k);
}

std::size_t parse_k(const std::string& text) {
  if (text == "all") return selection::kAllNegatives;
  const std::size_t k = parse_size("k", text);
  if (k < 1) throw ConfigError("K must be at least 1");
  return k;
}

double parse_theta(const std::string& text) {
  if (text == "-inf") return -std::numeric_limits<double>::infinity();
  if (text == "inf" || text == "+inf") return std::numeric_limits<double>::infinity();
  const double v = parse_double("theta", text);
  if (std::isnan(v)) throw ConfigError("theta is NaN");
  return v;
}

void TrainConfig::validate() const {
  weights.validate();
  arch.validate();
  domain_x.validate();
  domain_y.validate();
  if (epochs < 1) throw ConfigError("epochs must be at least 1");
  if (batch < 1) throw ConfigError("batch must be at least 1");
  if (dataset_size < batch) throw ConfigError("dataset_size must be at least batch");
  if (eval_size < 2) throw ConfigError("eval_size must be at least 2");
  if (!(lr > 0.0)) throw ConfigError("learning rate must be positive");
  if (!(beta1 > 0.0 && beta1 < 1.0) || !(beta2 > 0.0 && beta2 < 1.0)) {
    throw ConfigError("Adam betas must lie in (0, 1)");
  }
  if (samples_per_layer < 2) throw ConfigError("samples_per_layer must be at least 2");
  if (domain_x.height != arch.encoder.height || domain_x.width != arch.encoder.width ||
      domain_x.channels != arch.encoder.in_channels || domain_y.height != domain_x.height ||
      domain_y.width != domain_x.width || domain_y.channels != domain_x.channels) {
    throw ConfigError("domain image extents do not match the encoder input");
  }
  if (samples_per_layer > arch.encoder.height * arch.encoder.width) {
    throw ConfigError("samples_per_layer exceeds spatial positions");
  }
}

void TrainConfig::set_image_size(std::size_t n) {
  arch.encoder.height = arch.encoder.width = n;
  domain_x.height = domain_x.width = n;
  domain_y.height = domain_y.width = n;
}

losses::ObjectiveConfig TrainConfig::objective() const {
  losses::ObjectiveConfig c;
  c.weights = weights;
  c.aggregation = aggregation;
  c.gan = gan;
  c.samples_per_layer = samples_per_layer;
  c.normalize_features = normalize_features;
  c.empty_rows = selection::EmptyRowPolicy::kKeep;
  return c;
}

void apply_config_value(TrainConfig& c, const std::string& key, const std::string& value) {
  if (key == "epochs") c.epochs = parse_size(key, value);
  else if (key == "batch") c.batch = parse_size(key, value);
  else if (key == "dataset_size") c.dataset_size = parse_size(key, value);
  else if (key == "eval_size") c.eval_size = parse_size(key, value);
  else if (key == "lr") c.lr = parse_double(key, value);
  else if (key == "beta1") c.beta1 = parse_double(key, value);
  else if (key == "beta2") c.beta2 = parse_double(key, value);
  else if (key == "tau") c.weights.tau = parse_double(key, value);
  else if (key == "k") c.weights.k = parse_k(value);
  else if (key == "theta") c.weights.theta = parse_theta(value);
  else if (key == "lambda_gan") c.weights.lambda_gan = parse_double(key, value);
  else if (key == "lambda_x") c.weights.lambda_x = parse_double(key, value);
  else if (key == "lambda_y") c.weights.lambda_y = parse_double(key, value);
  else if (key == "normalize_features") c.normalize_features = parse_bool(key, value);
  else if (key == "samples_per_layer") c.samples_per_layer = parse_size(key, value);
  else if (key == "aggregation") {
    if (value == "mean") c.aggregation = losses::NceAggregation::kMeanOverLocations;
    else if (value == "sum") c.aggregation = losses::NceAggregation::kSum;
    else throw ConfigError("aggregation must be mean or sum");
  } else if (key == "gan_variant") {
    if (value == "non-saturating") c.gan = losses::GanVariant::kNonSaturating;
    else if (value == "minimax") c.gan = losses::GanVariant::kMinimax;
    else if (value == "least-squares") c.gan = losses::GanVariant::kLeastSquares;
    else throw ConfigError("unknown gan_variant '" + value + "'");
  } else if (key == "image_size") {
    c.set_image_size(parse_size(key, value));
  } else if (key == "encoder_channels") c.arch.encoder.stage_channels = parse_list(key, value);
  else if (key == "tap_layers") c.arch.encoder.tap_layers = parse_list(key, value);
  else if (key == "decoder_channels") c.arch.decoder_channels = parse_list(key, value);
  else if (key == "disc_channels") c.arch.disc_channels = parse_list(key, value);
  else if (key == "head_width") c.arch.head_width = parse_size(key, value);
  else if (key == "seed_data") c.seed_data = parse_size(key, value);
  else if (key == "seed_init") c.seed_init = parse_size(key, value);
  else if (key == "seed_sample") c.seed_sample = parse_size(key, value);
  else if (key.starts_with("x.")) apply_domain(c.domain_x, key, key.substr(2), value);
  else if (key.starts_with("y.")) apply_domain(c.domain_y, key, key.substr(2), value);
  else throw ConfigError("unknown config key '" + key + "'");
}

TrainConfig parse_config(std::istream& in) {
  TrainConfig c;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
    }
    apply_config_value(c, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  c.validate();
  return c;
}

TrainConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  return parse_config(in);
}

void write_config(std::ostream& out, const TrainConfig& c) {
  auto theta = [](double t) {
    if (std::isinf(t)) return std::string(t < 0 ? "-inf" : "inf");
    return format_double(t);
  };
  out << "epochs = " << c.epochs << '\n'
      << "batch = " << c.batch << '\n'
      << "dataset_size = " << c.dataset_size << '\n'
      << "eval_size = " << c.eval_size << '\n'
      << "lr = " << format_double(c.lr) << '\n'
      << "beta1 = " << format_double(c.beta1) << '\n'
      << "beta2 = " << format_double(c.beta2) << '\n'
      << "tau = " << format_double(c.weights.tau) << '\n'
      << "k = " << format_k(c.weights.k) << '\n'
      << "theta = " << theta(c.weights.theta) << '\n'
      << "lambda_gan = " << format_double(c.weights.lambda_gan) << '\n'
      << "lambda_x = " << format_double(c.weights.lambda_x) << '\n'
      << "lambda_y = " << format_double(c.weights.lambda_y) << '\n'
      << "normalize_features = " << (c.normalize_features ? "true" : "false") << '\n'
      << "samples_per_layer = " << c.samples_per_layer << '\n'
      << "aggregation = "
      << (c.aggregation == losses::NceAggregation::kSum ? "sum" : "mean") << '\n'
      << "gan_variant = " << gan_name(c.gan) << '\n'
      << "image_size = " << c.arch.encoder.height << '\n'
      << "encoder_channels = " << join(c.arch.encoder.stage_channels) << '\n'
      << "tap_layers = " << join(c.arch.encoder.tap_layers) << '\n'
      << "decoder_channels = " << join(c.arch.decoder_channels) << '\n'
      << "disc_channels = " << join(c.arch.disc_channels) << '\n'
      << "head_width = " << c.arch.head_width << '\n';
  write_domain(out, "x", c.domain_x);
  write_domain(out, "y", c.domain_y);
  out << "seed_data = " << c.seed_data << '\n'
      << "seed_init = " << c.seed_init << '\n'
      << "seed_sample = " << c.seed_sample << '\n';
}

}  // namespace ranknce::toy
