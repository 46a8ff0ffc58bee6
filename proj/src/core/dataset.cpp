// Copyright 2026 The usr-spectral Authors
// SPDX-License-Identifier: Apache-2.0

#include "core/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_set>

#include "core/error.hpp"
#include "core/rng.hpp"

namespace usr {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_row(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t pos = 0;
  while (true) {
    const std::size_t comma = line.find(',', pos);
    cells.push_back(trim(line.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos)));
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  return cells;
}

bool parse_double(std::string_view s, double& out) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc() && res.ptr == s.data() + s.size();
}

bool parse_int(std::string_view s, long long& out) {
  const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc() && res.ptr == s.data() + s.size();
}

std::string where(const std::string& origin, std::size_t row, std::size_t col) {
  return origin + ": row " + std::to_string(row) + ", column " + std::to_string(col + 1);
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::size_t Dataset::labeled_count() const {
  return static_cast<std::size_t>(
      std::count_if(pixels.begin(), pixels.end(), [](const LabeledPixel& p) { return p.labeled(); }));
}

std::vector<LabeledPixel> Dataset::select(const std::vector<long long>& ids) const {
  const std::unordered_set<long long> wanted(ids.begin(), ids.end());
  std::vector<LabeledPixel> out;
  for (const auto& p : pixels) {
    if (wanted.count(p.pixel_id)) out.push_back(p);
  }
  return out;
}

Dataset parse_dataset(const std::string& text, const std::string& origin) {
  std::istringstream in(text);
  std::string line;
  std::size_t row = 0;
  std::vector<std::string_view> header;
  std::string header_line;
  while (std::getline(in, header_line)) {
    ++row;
    if (!trim(header_line).empty()) break;
  }
  if (trim(header_line).empty()) throw_data(origin + ": empty file");
  header = split_row(header_line);

  std::ptrdiff_t class_col = -1;
  std::ptrdiff_t id_col = -1;
  std::size_t n_wl = header.size();
  // Label columns may only trail the wavelength columns.
  while (n_wl > 0 && (header[n_wl - 1] == "class_id" || header[n_wl - 1] == "pixel_id")) {
    auto& col = header[n_wl - 1] == "class_id" ? class_col : id_col;
    if (col >= 0) throw_data(origin + ": duplicate column '" + std::string(header[n_wl - 1]) + "'");
    col = static_cast<std::ptrdiff_t>(n_wl - 1);
    --n_wl;
  }
  if (n_wl < 2) throw_data(origin + ": need at least two wavelength columns");
  std::vector<double> wl(n_wl);
  for (std::size_t c = 0; c < n_wl; ++c) {
    if (!parse_double(header[c], wl[c]) || !std::isfinite(wl[c]))
      throw_data(where(origin, row, c) + ": header '" + std::string(header[c]) + "' is not a wavelength");
    if (c > 0 && !(wl[c] > wl[c - 1]))
      throw_data(where(origin, row, c) + ": wavelengths must be strictly increasing");
  }
  Dataset ds{WavelengthGrid::from_points(std::move(wl)), {}, {}};

  std::set<long long> seen_ids;
  int max_class = -1;
  long long next_id = 0;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    const auto cells = split_row(line);
    if (cells.size() != header.size())
      throw_data(origin + ": row " + std::to_string(row) + " has " + std::to_string(cells.size()) +
                 " columns, header has " + std::to_string(header.size()));
    std::vector<double> values(n_wl);
    for (std::size_t c = 0; c < n_wl; ++c) {
      if (!parse_double(cells[c], values[c]) || !std::isfinite(values[c]))
        throw_data(where(origin, row, c) + ": value '" + std::string(cells[c]) + "' is not a finite number");
      if (values[c] < 0.0) throw_data(where(origin, row, c) + ": negative radiance");
    }
    LabeledPixel px{Spectrum(ds.grid, std::move(values)), -1, next_id};
    if (class_col >= 0) {
      const auto cell = cells[static_cast<std::size_t>(class_col)];
      if (!cell.empty()) {
        long long cls;
        if (!parse_int(cell, cls) || cls < 0 || cls > 1'000'000)
          throw_data(where(origin, row, static_cast<std::size_t>(class_col)) + ": bad class_id '" +
                     std::string(cell) + "'");
        px.class_id = static_cast<int>(cls);
        max_class = std::max(max_class, px.class_id);
      }
    }
    if (id_col >= 0) {
      const auto cell = cells[static_cast<std::size_t>(id_col)];
      if (!parse_int(cell, px.pixel_id))
        throw_data(where(origin, row, static_cast<std::size_t>(id_col)) + ": bad pixel_id '" + std::string(cell) +
                   "'");
    }
    if (!seen_ids.insert(px.pixel_id).second)
      throw_data(origin + ": row " + std::to_string(row) + ": duplicate pixel_id " + std::to_string(px.pixel_id));
    next_id = std::max(next_id, px.pixel_id) + 1;
    ds.pixels.push_back(std::move(px));
  }
  if (ds.pixels.empty()) throw_data(origin + ": no pixel rows");
  for (int k = 0; k <= max_class; ++k) ds.class_names.push_back("class_" + std::to_string(k));
  return ds;
}

Dataset load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw_data("cannot open dataset " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_dataset(ss.str(), path.string());
}

std::string format_dataset(const Dataset& ds) {
  std::string out;
  const auto pts = ds.grid.points();
  for (std::size_t c = 0; c < pts.size(); ++c) {
    if (c) out += ',';
    out += format_double(pts[c]);
  }
  out += ",class_id,pixel_id\n";
  for (const auto& p : ds.pixels) {
    const auto v = p.spectrum.values();
    for (std::size_t c = 0; c < v.size(); ++c) {
      if (c) out += ',';
      out += format_double(v[c]);
    }
    out += ',';
    if (p.labeled()) out += std::to_string(p.class_id);
    out += ',';
    out += std::to_string(p.pixel_id);
    out += '\n';
  }
  return out;
}

void save_dataset(const Dataset& ds, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw_data("cannot write dataset " + path.string());
  out << format_dataset(ds);
  if (!out) throw_data("failed writing dataset " + path.string());
}

SplitSpec class_balanced_split(const Dataset& ds, std::uint64_t seed, double fraction, int trial_index) {
  if (!(fraction > 0.0 && fraction < 1.0)) throw_usage("split fraction must be in (0, 1)");
  std::map<int, std::vector<long long>> by_class;
  for (const auto& p : ds.pixels) {
    if (p.labeled()) by_class[p.class_id].push_back(p.pixel_id);
  }
  if (by_class.empty()) throw_data("class-balanced split needs labeled pixels");
  SplitSpec split;
  split.seed = seed;
  split.trial_index = trial_index;
  Rng rng(seed);
  for (auto& [cls, ids] : by_class) {
    if (ids.size() < 2)
      throw_data("class " + std::to_string(cls) + " has " + std::to_string(ids.size()) +
                 " pixel(s); a split needs at least 2");
    for (std::size_t i = ids.size() - 1; i > 0; --i) std::swap(ids[i], ids[rng.uniform_index(i + 1)]);
    const auto n_train = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(ids.size()) + 0.5));
    split.train_ids.insert(split.train_ids.end(), ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(n_train));
    split.test_ids.insert(split.test_ids.end(), ids.begin() + static_cast<std::ptrdiff_t>(n_train), ids.end());
  }
  std::sort(split.train_ids.begin(), split.train_ids.end());
  std::sort(split.test_ids.begin(), split.test_ids.end());
  return split;
}

namespace {

struct Bump {
  double center, width, amplitude;
};

std::vector<Bump> random_bumps(Rng& rng, int count, double lo, double hi, double amp_lo, double amp_hi) {
  std::vector<Bump> bumps;
  for (int i = 0; i < count; ++i) {
    bumps.push_back({rng.uniform(lo, hi), rng.uniform(20.0, 150.0), rng.uniform(amp_lo, amp_hi)});
  }
  return bumps;
}

double eval_bumps(const std::vector<Bump>& bumps, double lambda) {
  double s = 0.0;
  for (const auto& b : bumps) {
    const double z = (lambda - b.center) / b.width;
    s += b.amplitude * std::exp(-0.5 * z * z);
  }
  return s;
}

}  // namespace

WavelengthGrid default_scene_grid() { return WavelengthGrid::linspace(380.0, 1050.0, 144); }

Dataset generate_synthetic(std::size_t n_pixels, std::size_t n_classes, const WavelengthGrid& grid,
                           std::uint64_t seed) {
  if (n_classes < 1) throw_usage("synthetic data needs at least one class");
  Rng rng(seed);
  const auto pts = grid.points();
  std::vector<std::vector<double>> endmembers(n_classes, std::vector<double>(pts.size()));
  for (auto& em : endmembers) {
    const int count = 3 + static_cast<int>(rng.uniform_index(4));
    const auto bumps = random_bumps(rng, count, grid.start(), grid.end(), 0.2, 1.0);
    const double floor = rng.uniform(0.05, 0.2);
    for (std::size_t i = 0; i < pts.size(); ++i) em[i] = floor + eval_bumps(bumps, pts[i]);
  }
  Dataset ds{grid, {}, {}};
  for (std::size_t k = 0; k < n_classes; ++k) ds.class_names.push_back("class_" + std::to_string(k));
  ds.pixels.reserve(n_pixels);
  for (std::size_t p = 0; p < n_pixels; ++p) {
    const std::size_t cls = p % n_classes;
    const double scale = rng.uniform(0.5, 1.5);
    // Perturbation stays within +-0.1 so the pixel remains positive.
    auto wiggle = random_bumps(rng, 2, grid.start(), grid.end(), -0.05, 0.05);
    std::vector<double> values(pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i)
      values[i] = scale * endmembers[cls][i] * (1.0 + eval_bumps(wiggle, pts[i]));
    ds.pixels.push_back({Spectrum(grid, std::move(values)), static_cast<int>(cls), static_cast<long long>(p)});
  }
  return ds;
}

}  // namespace usr
