// Copyright 2026 The usr-spectral Authors
// SPDX-License-Identifier: Apache-2.0

#include "core/checkpoint.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <map>

#include "core/error.hpp"

namespace usr {
namespace {

using nlohmann::json;

constexpr char kMagic[8] = {'U', 'S', 'R', 'S', 'P', 'C', 'K', '1'};

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

struct TensorTable {
  json entries = json::array();
  std::vector<const Mat*> tensors;
  std::size_t total = 0;

  void add(const std::string& group, const ModelWeights& w) {
    visit_weights(w, [&](const std::string& name, const Mat& m) {
      entries.push_back({{"name", group + "/" + name}, {"rows", m.rows()}, {"cols", m.cols()}, {"offset", total}});
      tensors.push_back(&m);
      total += static_cast<std::size_t>(m.size());
    });
  }
};

json nan_to_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }
double null_to_nan(const json& v) { return v.is_null() ? std::nan("") : v.get<double>(); }

void read_group(const json& table, const std::vector<double>& payload, const std::string& group, ModelWeights& w) {
  std::map<std::string, const json*> by_name;
  for (const auto& e : table) by_name[e.at("name").get<std::string>()] = &e;
  visit_weights(w, [&](const std::string& name, Mat& m) {
    auto it = by_name.find(group + "/" + name);
    if (it == by_name.end()) throw_data("checkpoint is missing tensor " + group + "/" + name);
    const json& e = *it->second;
    const auto rows = e.at("rows").get<Eigen::Index>();
    const auto cols = e.at("cols").get<Eigen::Index>();
    const auto offset = e.at("offset").get<std::size_t>();
    if (rows != m.rows() || cols != m.cols())
      throw_data("checkpoint tensor " + group + "/" + name + " has shape " + std::to_string(rows) + "x" +
                 std::to_string(cols) + ", expected " + std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
    if (offset + static_cast<std::size_t>(m.size()) > payload.size())
      throw_data("checkpoint payload truncated at " + group + "/" + name);
    std::memcpy(m.data(), payload.data() + offset, sizeof(double) * static_cast<std::size_t>(m.size()));
  });
}

}  // namespace

void save_checkpoint(const Checkpoint& c, const std::filesystem::path& path) {
  TensorTable table;
  table.add("param", c.weights);
  table.add("adam_m", c.adam.m);
  table.add("adam_v", c.adam.v);

  json history = json::array();
  for (const auto& r : c.history)
    history.push_back({{"epoch", r.epoch},
                       {"train_loss", r.train_loss},
                       {"val_loss", nan_to_null(r.val_loss)},
                       {"lr", r.lr},
                       {"seconds", r.seconds}});
  json header = {{"format", "usr-spectral-checkpoint"},
                 {"version", kCheckpointVersion},
                 {"config", config_to_json(c.config)},
                 {"init_seed", c.init_seed},
                 {"epoch", c.epoch},
                 {"adam_step", c.adam.step},
                 {"rng", c.rng},
                 {"scheduler", {{"lr", c.scheduler.lr}, {"best", nan_to_null(c.scheduler.best)}, {"bad_epochs", c.scheduler.bad_epochs}}},
                 {"best_monitor", nan_to_null(c.best_monitor)},
                 {"history", history},
                 {"train_ids", c.train_ids},
                 {"test_ids", c.test_ids},
                 {"tensors", table.entries}};
  const std::string text = header.dump();

  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw_data("cannot write checkpoint " + tmp.string());
    out.write(kMagic, sizeof(kMagic));
    const std::uint64_t len = text.size();
    out.write(reinterpret_cast<const char*>(&len), sizeof(len));
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    for (const Mat* m : table.tensors)
      out.write(reinterpret_cast<const char*>(m->data()), static_cast<std::streamsize>(sizeof(double) * m->size()));
    if (!out) throw_data("failed writing checkpoint " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw_data("cannot open checkpoint " + path.string());
  char magic[8];
  std::uint64_t len = 0;
  in.read(magic, sizeof(magic));
  in.read(reinterpret_cast<char*>(&len), sizeof(len));
  if (!in || std::memcmp(magic, kMagic, sizeof(magic)) != 0) throw_data(path.string() + " is not a checkpoint");
  if (len > (1ULL << 32)) throw_data(path.string() + ": checkpoint header too large");
  std::string text(len, '\0');
  in.read(text.data(), static_cast<std::streamsize>(len));
  if (!in) throw_data(path.string() + ": truncated checkpoint header");
  json header;
  try {
    header = json::parse(text);
  } catch (const json::parse_error& e) {
    throw_data(path.string() + ": corrupt checkpoint header: " + e.what());
  }
  try {
    if (header.at("version").get<int>() != kCheckpointVersion)
      throw_data(path.string() + ": unsupported checkpoint version " + header.at("version").dump());
    std::vector<double> payload;
    {
      std::size_t total = 0;
      for (const auto& e : header.at("tensors"))
        total = std::max(total, e.at("offset").get<std::size_t>() +
                                    e.at("rows").get<std::size_t>() * e.at("cols").get<std::size_t>());
      payload.resize(total);
      in.read(reinterpret_cast<char*>(payload.data()), static_cast<std::streamsize>(sizeof(double) * total));
      if (!in) throw_data(path.string() + ": truncated checkpoint payload");
    }
    Checkpoint c;
    c.config = parse_config(header.at("config"));
    c.init_seed = header.at("init_seed").get<std::uint64_t>();
    c.weights = Model(c.config.model, c.init_seed).weights();
    c.adam = make_adam_state(c.weights);
    read_group(header.at("tensors"), payload, "param", c.weights);
    read_group(header.at("tensors"), payload, "adam_m", c.adam.m);
    read_group(header.at("tensors"), payload, "adam_v", c.adam.v);
    c.adam.step = header.at("adam_step").get<long long>();
    c.rng = header.at("rng").get<Rng::State>();
    const auto& s = header.at("scheduler");
    c.scheduler.lr = s.at("lr").get<double>();
    c.scheduler.best = s.at("best").is_null() ? std::numeric_limits<double>::infinity() : s.at("best").get<double>();
    c.scheduler.bad_epochs = s.at("bad_epochs").get<int>();
    c.epoch = header.at("epoch").get<int>();
    c.best_monitor = header.at("best_monitor").is_null() ? std::numeric_limits<double>::infinity()
                                                         : header.at("best_monitor").get<double>();
    for (const auto& r : header.at("history"))
      c.history.push_back({r.at("epoch").get<int>(), r.at("train_loss").get<double>(), null_to_nan(r.at("val_loss")),
                           r.at("lr").get<double>(), r.at("seconds").get<double>()});
    c.train_ids = header.at("train_ids").get<std::vector<long long>>();
    c.test_ids = header.at("test_ids").get<std::vector<long long>>();
    return c;
  } catch (const json::exception& e) {
    throw_data(path.string() + ": malformed checkpoint: " + e.what());
  }
}

}  // namespace usr
