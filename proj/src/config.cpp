// Copyright 2026 The cycledcn Authors.
// SPDX-License-Identifier: Apache-2.0

#include "cycledcn/config.hpp"

#include <yaml-cpp/yaml.h>

#include <fstream>
#include <functional>
#include <sstream>

#include "cycledcn/error.hpp"

namespace cdn {
namespace {

template <typename T>
T as(const YAML::Node& n, const std::string& key) {
  try {
    return n.as<T>();
  } catch (const YAML::Exception&) {
    throw ValidationError("config key '" + key + "' has an invalid value");
  }
}

std::size_t as_count(const YAML::Node& n, const std::string& key) {
  const auto v = as<long long>(n, key);
  if (v < 0) throw ValidationError("config key '" + key + "' must be non-negative");
  return static_cast<std::size_t>(v);
}

LossSet parse_losses(const YAML::Node& n, const std::string& key) {
  LossSet s;
  if (n.IsSequence()) {
    for (const auto& item : n) s.insert(parse_loss_term(as<std::string>(item, key)));
  } else {
    // Comma-separated scalar, e.g. "gan,cyc,sup".
    std::stringstream ss(as<std::string>(n, key));
    std::string part;
    while (std::getline(ss, part, ',')) {
      part.erase(0, part.find_first_not_of(" \t"));
      part.erase(part.find_last_not_of(" \t") + 1);
      if (!part.empty()) s.insert(parse_loss_term(part));
    }
  }
  return s;
}

std::vector<WeightOverride> parse_overrides(const YAML::Node& n, const std::string& key) {
  if (!n.IsSequence()) throw ValidationError("config key '" + key + "' must be a list");
  std::vector<WeightOverride> out;
  for (const auto& item : n) {
    WeightOverride o;
    o.from_epoch = as_count(item["from_epoch"], key + ".from_epoch");
    o.to_epoch = as_count(item["to_epoch"], key + ".to_epoch");
    const YAML::Node w = item["weights"];
    if (!w.IsMap()) throw ValidationError("config key '" + key + ".weights' must be a mapping");
    for (const auto& kv : w) {
      o.weights[parse_loss_term(kv.first.as<std::string>())] = as<double>(kv.second, key + ".weights");
    }
    out.push_back(std::move(o));
  }
  return out;
}

using Setter = std::function<void(TrainConfig&, const YAML::Node&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"dataset", [](TrainConfig& c, const YAML::Node& n, const std::string& k) { c.dataset = as<std::string>(n, k); }},
      {"dose_fraction", [](TrainConfig& c, const YAML::Node& n, const std::string& k) {
         c.dose_fraction = DoseFraction::parse(as<std::string>(n, k));
       }},
      {"epochs", [](TrainConfig& c, const YAML::Node& n, const std::string& k) { c.epochs = as_count(n, k); }},
      {"batch_size", [](TrainConfig& c, const YAML::Node& n, const std::string& k) { c.batch_size = as_count(n, k); }},
      {"steps_per_epoch", [](TrainConfig& c, const YAML::Node& n, const std::string& k) { c.steps_per_epoch = as_count(n, k); }},
      {"patch_size", [](TrainConfig& c, const YAML::Node& n, const std::string& k) { c.patch_size = as_count(n, k); }},
      {"learning_rate_G", [](TrainConfig& c, const YAML::Node& n, const std::string& k) { c.learning_rate_G = as<double>(n, k); }},
      {"learning_rate_D", [](TrainConfig& c, const YAML::Node& n, const std::string& k) { c.learning_rate_D = as<double>(n, k); }},
      {"beta1", [](TrainConfig& c, const YAML::Node& n, const std::string& k) { c.beta1 = as<double>(n, k); }},
      {"beta2", [](TrainConfig& c, const YAML::Node& n, const std::string& k) { c.beta2 = as<double>(n, k); }},
      {"seed", [](TrainConfig& c, const YAML::Node& n, const std::string& k) { c.seed = as<std::uint64_t>(n, k); }},
      {"enabled_losses", [](TrainConfig& c, const YAML::Node& n, const std::string& k) { c.enabled_losses = parse_losses(n, k); }},
      {"epsilon", [](TrainConfig& c, const YAML::Node& n, const std::string& k) { c.epsilon = as<double>(n, k); }},
      {"checkpoint_every", [](TrainConfig& c, const YAML::Node& n, const std::string& k) { c.checkpoint_every = as_count(n, k); }},
      {"neighbor_k", [](TrainConfig& c, const YAML::Node& n, const std::string& k) { c.model.neighbor_k = as_count(n, k); }},
      {"fuse_mode", [](TrainConfig& c, const YAML::Node& n, const std::string& k) {
         c.model.fuse_mode = parse_fuse_mode(as<std::string>(n, k));
       }},
      {"predictor_depth", [](TrainConfig& c, const YAML::Node& n, const std::string& k) { c.model.predictor_depth = as_count(n, k); }},
      {"predictor_width", [](TrainConfig& c, const YAML::Node& n, const std::string& k) { c.model.predictor_width = as_count(n, k); }},
      {"consistency_width", [](TrainConfig& c, const YAML::Node& n, const std::string& k) { c.model.consistency_width = as_count(n, k); }},
      {"discriminator_depth", [](TrainConfig& c, const YAML::Node& n, const std::string& k) { c.model.discriminator_depth = as_count(n, k); }},
      {"discriminator_width", [](TrainConfig& c, const YAML::Node& n, const std::string& k) { c.model.discriminator_width = as_count(n, k); }},
      {"val_max_cases", [](TrainConfig& c, const YAML::Node& n, const std::string& k) { c.val_max_cases = as_count(n, k); }},
      {"val_every", [](TrainConfig& c, const YAML::Node& n, const std::string& k) { c.val_every = as_count(n, k); }},
      {"deterministic", [](TrainConfig& c, const YAML::Node& n, const std::string& k) { c.deterministic = as<bool>(n, k); }},
      {"threads", [](TrainConfig& c, const YAML::Node& n, const std::string& k) { c.threads = as_count(n, k); }},
      {"weight_overrides", [](TrainConfig& c, const YAML::Node& n, const std::string& k) { c.weight_overrides = parse_overrides(n, k); }},
  };
  return table;
}

void apply_node(TrainConfig& c, const std::string& key, const YAML::Node& value) {
  const auto it = setters().find(key);
  if (it == setters().end()) throw ValidationError("unknown config key '" + key + "'");
  if (value.IsNull()) return;
  it->second(c, value, key);
}

}  // namespace

void TrainConfig::validate() const {
  dose_fraction.validate();
  model.validate();
  if (batch_size < 1) throw ValidationError("batch_size must be >= 1");
  if (enabled_losses.empty()) throw ValidationError("enabled_losses must not be empty");
  if (!(learning_rate_G >= 0.0) || !(learning_rate_D >= 0.0)) {
    throw ValidationError("learning rates must be non-negative");
  }
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw ValidationError("beta1 and beta2 must lie in [0, 1)");
  }
  if (!(epsilon > 0.0)) throw ValidationError("epsilon must be > 0");
  if (checkpoint_every < 1) throw ValidationError("checkpoint_every must be >= 1");
  if (val_every < 1) throw ValidationError("val_every must be >= 1");
  if (model.fuse_mode == FuseMode::Network && model.neighbor_k == 0) {
    throw ValidationError("fuse_mode network needs neighbor_k >= 1");
  }
  if (patch_size != 0 && patch_size < 16) {
    throw ValidationError("patch_size must be 0 (whole slices) or >= 16");
  }
  if (enabled_losses.contains(LossTerm::SsimPlanes)) {
    const SsimOptions o;
    if (batch_size < o.window) {
      throw ValidationError("the ssim_planes loss needs batch_size >= " + std::to_string(o.window) +
                            " consecutive slices");
    }
  }
  for (const auto& o : weight_overrides) {
    if (o.to_epoch <= o.from_epoch) throw ValidationError("weight override has an empty epoch range");
    double sum = 0.0;
    for (const auto& [term, w] : o.weights) {
      if (!enabled_losses.contains(term)) {
        throw ValidationError("weight override names disabled loss '" + to_string(term) + "'");
      }
      if (!(w >= 0.0)) throw ValidationError("weight override values must be >= 0");
      sum += w;
    }
    if (!(sum > 0.0)) throw ValidationError("weight override must have a positive weight");
  }
}

TrainConfig config_from_yaml(const std::string& text) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    throw ValidationError(std::string("config is not valid YAML: ") + e.what());
  }
  TrainConfig c;
  if (root.IsNull()) return c;
  if (!root.IsMap()) throw ValidationError("config must be a key/value mapping");
  for (const auto& kv : root) apply_node(c, kv.first.as<std::string>(), kv.second);
  c.validate();
  return c;
}

TrainConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot read config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return config_from_yaml(ss.str());
}

void apply_config_override(TrainConfig& config, const std::string& key, const std::string& value) {
  YAML::Node n;
  try {
    n = YAML::Load(value);
  } catch (const YAML::Exception& e) {
    throw ValidationError("cannot parse value for '" + key + "': " + e.what());
  }
  apply_node(config, key, n);
}

std::string config_to_yaml(const TrainConfig& c) {
  YAML::Emitter out;
  out.SetDoublePrecision(17);
  out << YAML::BeginMap;
  out << YAML::Key << "dataset" << YAML::Value << c.dataset;
  out << YAML::Key << "dose_fraction" << YAML::Value << c.dose_fraction.label;
  out << YAML::Key << "epochs" << YAML::Value << c.epochs;
  out << YAML::Key << "batch_size" << YAML::Value << c.batch_size;
  out << YAML::Key << "steps_per_epoch" << YAML::Value << c.steps_per_epoch;
  out << YAML::Key << "patch_size" << YAML::Value << c.patch_size;
  out << YAML::Key << "learning_rate_G" << YAML::Value << c.learning_rate_G;
  out << YAML::Key << "learning_rate_D" << YAML::Value << c.learning_rate_D;
  out << YAML::Key << "beta1" << YAML::Value << c.beta1;
  out << YAML::Key << "beta2" << YAML::Value << c.beta2;
  out << YAML::Key << "seed" << YAML::Value << c.seed;
  out << YAML::Key << "enabled_losses" << YAML::Value << YAML::Flow << c.enabled_losses.names();
  out << YAML::Key << "epsilon" << YAML::Value << c.epsilon;
  out << YAML::Key << "checkpoint_every" << YAML::Value << c.checkpoint_every;
  out << YAML::Key << "neighbor_k" << YAML::Value << c.model.neighbor_k;
  out << YAML::Key << "fuse_mode" << YAML::Value << to_string(c.model.fuse_mode);
  out << YAML::Key << "predictor_depth" << YAML::Value << c.model.predictor_depth;
  out << YAML::Key << "predictor_width" << YAML::Value << c.model.predictor_width;
  out << YAML::Key << "consistency_width" << YAML::Value << c.model.consistency_width;
  out << YAML::Key << "discriminator_depth" << YAML::Value << c.model.discriminator_depth;
  out << YAML::Key << "discriminator_width" << YAML::Value << c.model.discriminator_width;
  out << YAML::Key << "val_max_cases" << YAML::Value << c.val_max_cases;
  out << YAML::Key << "val_every" << YAML::Value << c.val_every;
  out << YAML::Key << "deterministic" << YAML::Value << c.deterministic;
  out << YAML::Key << "threads" << YAML::Value << c.threads;
  if (!c.weight_overrides.empty()) {
    out << YAML::Key << "weight_overrides" << YAML::Value << YAML::BeginSeq;
    for (const auto& o : c.weight_overrides) {
      out << YAML::BeginMap;
      out << YAML::Key << "from_epoch" << YAML::Value << o.from_epoch;
      out << YAML::Key << "to_epoch" << YAML::Value << o.to_epoch;
      out << YAML::Key << "weights" << YAML::Value << YAML::BeginMap;
      for (const auto& [t, w] : o.weights) out << YAML::Key << to_string(t) << YAML::Value << w;
      out << YAML::EndMap << YAML::EndMap;
    }
    out << YAML::EndSeq;
  }
  out << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

}  // namespace cdn
