// Copyright 2026 The usr-spectral Authors
// SPDX-License-Identifier: Apache-2.0

#include "core/config.hpp"

#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <sstream>

#include "core/error.hpp"

namespace usr {

using nlohmann::json;

void TrainConfig::validate() const {
  if (epochs < 1) throw_usage("train.epochs must be >= 1");
  if (!(lr_init > 0.0)) throw_usage("train.lr_init must be positive");
  if (batch_size < 1) throw_usage("train.batch_size must be >= 1");
  if (!(plateau.factor > 0.0 && plateau.factor < 1.0)) throw_usage("train.plateau_factor must be in (0, 1)");
  if (plateau.patience < 1) throw_usage("train.plateau_patience must be >= 1");
  if (!(plateau.lr_min >= 0.0)) throw_usage("train.lr_min must be >= 0");
  if (sensors_per_batch < 1) throw_usage("train.sensors_per_batch must be >= 1");
  if (loss != "cosine") throw_usage("train.loss: only 'cosine' is supported");
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw_usage("train.train_fraction must be in (0, 1)");
  if (val_sensors < 1) throw_usage("train.val_sensors must be >= 1");
  if (checkpoint_every < 1) throw_usage("train.checkpoint_every must be >= 1");
}

void GlobalConfig::validate() const {
  model.validate();
  random_sensor.validate();
  train.validate();
}

namespace {

using Setter = std::function<void(const json&, const std::string&)>;

Setter int_field(int& out) {
  return [&out](const json& v, const std::string& key) {
    if (!v.is_number_integer()) throw_usage("config key '" + key + "' must be an integer");
    out = v.get<int>();
  };
}
Setter u64_field(std::uint64_t& out) {
  return [&out](const json& v, const std::string& key) {
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0))
      throw_usage("config key '" + key + "' must be a non-negative integer");
    out = v.get<std::uint64_t>();
  };
}
Setter double_field(double& out) {
  return [&out](const json& v, const std::string& key) {
    if (!v.is_number()) throw_usage("config key '" + key + "' must be a number");
    out = v.get<double>();
  };
}
Setter bool_field(bool& out) {
  return [&out](const json& v, const std::string& key) {
    if (!v.is_boolean()) throw_usage("config key '" + key + "' must be a boolean");
    out = v.get<bool>();
  };
}
Setter string_field(std::string& out) {
  return [&out](const json& v, const std::string& key) {
    if (!v.is_string()) throw_usage("config key '" + key + "' must be a string");
    out = v.get<std::string>();
  };
}

void apply_section(const json& section, const std::string& name, const std::map<std::string, Setter>& setters) {
  if (!section.is_object()) throw_usage("config section '" + name + "' must be an object");
  for (auto it = section.begin(); it != section.end(); ++it) {
    const std::string key = name + "." + it.key();
    auto s = setters.find(it.key());
    if (s == setters.end()) throw_usage("unknown config key '" + key + "'");
    s->second(it.value(), key);
  }
}

struct Loader {
  GlobalConfig cfg;
  bool token_dim_explicit = false;

  void apply(const json& doc) {
    if (!doc.is_object()) throw_usage("config must be a JSON object");
    std::optional<std::uint64_t> seed;
    for (auto it = doc.begin(); it != doc.end(); ++it) {
      const std::string& k = it.key();
      const json& v = it.value();
      if (k == "seed") {
        std::uint64_t s = 0;
        u64_field(s)(v, "seed");
        seed = s;
      } else if (k == "encoding") {
        auto& e = cfg.model.encoding;
        apply_section(v, k, {{"sigma", double_field(e.sigma)},
                             {"r", double_field(e.r)},
                             {"n", int_field(e.n)},
                             {"sample_step_nm", double_field(e.sample_step_nm)}});
      } else if (k == "encoder") {
        auto& e = cfg.model.encoder;
        if (v.is_object() && v.contains("token_dim")) token_dim_explicit = true;
        apply_section(v, k, {{"layers", int_field(e.layers)},
                             {"hidden_dim", int_field(e.hidden_dim)},
                             {"heads", int_field(e.heads)},
                             {"embed_dim", int_field(e.embed_dim)},
                             {"token_dim", int_field(e.token_dim)},
                             {"ff_multiplier", int_field(e.ff_multiplier)}});
      } else if (k == "decoder") {
        auto& d = cfg.model.decoder;
        std::string trunk = to_string(d.trunk_input);
        std::string arch = to_string(d.architecture);
        apply_section(v, k, {{"layers", int_field(d.layers)},
                             {"hidden_dim", int_field(d.hidden_dim)},
                             {"trunk_input", string_field(trunk)},
                             {"architecture", string_field(arch)}});
        d.trunk_input = trunk_input_from_string(trunk);
        d.architecture = decoder_arch_from_string(arch);
      } else if (k == "random_sensor") {
        auto& r = cfg.random_sensor;
        apply_section(v, k, {{"min_bands", int_field(r.min_bands)},
                             {"max_bands", int_field(r.max_bands)},
                             {"band_count_decay", double_field(r.band_count_decay)},
                             {"center_min_nm", double_field(r.center_min_nm)},
                             {"center_max_nm", double_field(r.center_max_nm)},
                             {"center_step_nm", double_field(r.center_step_nm)},
                             {"width_min_nm", double_field(r.width_min_nm)},
                             {"width_max_nm", double_field(r.width_max_nm)},
                             {"seed", u64_field(r.seed)}});
      } else if (k == "train") {
        auto& t = cfg.train;
        std::string monitor = t.monitor == MonitorSignal::Train ? "train" : "val";
        apply_section(v, k, {{"epochs", int_field(t.epochs)},
                             {"lr_init", double_field(t.lr_init)},
                             {"batch_size", int_field(t.batch_size)},
                             {"plateau_patience", int_field(t.plateau.patience)},
                             {"plateau_factor", double_field(t.plateau.factor)},
                             {"plateau_threshold", double_field(t.plateau.threshold)},
                             {"lr_min", double_field(t.plateau.lr_min)},
                             {"adam_beta1", double_field(t.adam.beta1)},
                             {"adam_beta2", double_field(t.adam.beta2)},
                             {"adam_eps", double_field(t.adam.eps)},
                             {"sensors_per_batch", int_field(t.sensors_per_batch)},
                             {"per_sample_sensors", bool_field(t.per_sample_sensors)},
                             {"seed", u64_field(t.seed)},
                             {"loss", string_field(t.loss)},
                             {"monitor", string_field(monitor)},
                             {"train_fraction", double_field(t.train_fraction)},
                             {"include_unlabeled", bool_field(t.include_unlabeled)},
                             {"val_sensors", int_field(t.val_sensors)},
                             {"checkpoint_every", int_field(t.checkpoint_every)},
                             {"record_timing", bool_field(t.record_timing)}});
        if (monitor == "train") {
          t.monitor = MonitorSignal::Train;
        } else if (monitor == "val") {
          t.monitor = MonitorSignal::Validation;
        } else {
          throw_usage("train.monitor must be 'train' or 'val'");
        }
      } else {
        throw_usage("unknown config key '" + k + "'");
      }
    }
    if (seed) {
      cfg.train.seed = *seed;
      cfg.random_sensor.seed = *seed;
    }
  }

  GlobalConfig finish(bool validate) {
    if (!token_dim_explicit) cfg.model.encoder.token_dim = cfg.model.encoding.n;
    if (validate) cfg.validate();
    return cfg;
  }
};

}  // namespace

GlobalConfig default_config() {
  GlobalConfig cfg;
  cfg.model.encoder.token_dim = cfg.model.encoding.n;
  return cfg;
}

GlobalConfig parse_config(const json& doc, bool validate) {
  Loader loader;
  loader.cfg = default_config();
  loader.apply(doc);
  return loader.finish(validate);
}

GlobalConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw_usage("cannot open config " + path.string());
  json doc;
  try {
    doc = json::parse(in, nullptr, true, true);
  } catch (const json::parse_error& e) {
    throw_usage(path.string() + ": invalid JSON: " + e.what());
  }
  return parse_config(doc);
}

json config_to_json(const GlobalConfig& c) {
  const auto& e = c.model.encoding;
  const auto& en = c.model.encoder;
  const auto& d = c.model.decoder;
  const auto& r = c.random_sensor;
  const auto& t = c.train;
  return json{
      {"encoding", {{"sigma", e.sigma}, {"r", e.r}, {"n", e.n}, {"sample_step_nm", e.sample_step_nm}}},
      {"encoder",
       {{"layers", en.layers},
        {"hidden_dim", en.hidden_dim},
        {"heads", en.heads},
        {"embed_dim", en.embed_dim},
        {"token_dim", en.token_dim},
        {"ff_multiplier", en.ff_multiplier}}},
      {"decoder",
       {{"layers", d.layers},
        {"hidden_dim", d.hidden_dim},
        {"trunk_input", to_string(d.trunk_input)},
        {"architecture", to_string(d.architecture)}}},
      {"random_sensor",
       {{"min_bands", r.min_bands},
        {"max_bands", r.max_bands},
        {"band_count_decay", r.band_count_decay},
        {"center_min_nm", r.center_min_nm},
        {"center_max_nm", r.center_max_nm},
        {"center_step_nm", r.center_step_nm},
        {"width_min_nm", r.width_min_nm},
        {"width_max_nm", r.width_max_nm},
        {"seed", r.seed}}},
      {"train",
       {{"epochs", t.epochs},
        {"lr_init", t.lr_init},
        {"batch_size", t.batch_size},
        {"plateau_patience", t.plateau.patience},
        {"plateau_factor", t.plateau.factor},
        {"plateau_threshold", t.plateau.threshold},
        {"lr_min", t.plateau.lr_min},
        {"adam_beta1", t.adam.beta1},
        {"adam_beta2", t.adam.beta2},
        {"adam_eps", t.adam.eps},
        {"sensors_per_batch", t.sensors_per_batch},
        {"per_sample_sensors", t.per_sample_sensors},
        {"seed", t.seed},
        {"loss", t.loss},
        {"monitor", t.monitor == MonitorSignal::Train ? "train" : "val"},
        {"train_fraction", t.train_fraction},
        {"include_unlabeled", t.include_unlabeled},
        {"val_sensors", t.val_sensors},
        {"checkpoint_every", t.checkpoint_every},
        {"record_timing", t.record_timing}}}};
}

void apply_override(GlobalConfig& cfg, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) throw_usage("override '" + assignment + "' is not of the form key=value");
  const std::string key = assignment.substr(0, eq);
  const std::string raw = assignment.substr(eq + 1);
  json value;
  try {
    value = json::parse(raw);
  } catch (const json::parse_error&) {
    value = raw;
  }
  json patch;
  const auto dot = key.find('.');
  if (dot == std::string::npos) {
    patch[key] = value;
  } else {
    patch[key.substr(0, dot)][key.substr(dot + 1)] = value;
  }
  // Re-derive from the full document so token_dim follows encoding.n unless
  // it is pinned explicitly.
  json doc = config_to_json(cfg);
  const bool token_follows = cfg.model.encoder.token_dim == cfg.model.encoding.n;
  if (token_follows) doc["encoder"].erase("token_dim");
  doc.merge_patch(patch);
  cfg = parse_config(doc, false);
}

GlobalConfig desk_config() {
  GlobalConfig cfg = default_config();
  cfg.model.encoding.n = 64;
  cfg.model.encoder = {2, 64, 4, 3, 64, 2};
  cfg.model.decoder.layers = 3;
  cfg.model.decoder.hidden_dim = 64;
  cfg.train.epochs = 300;
  cfg.train.batch_size = 16;
  cfg.train.plateau.patience = 20;
  return cfg;
}

}  // namespace usr
