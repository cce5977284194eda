#pragma once

#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "sdprune/errors.hpp"
#include "sdprune/model.hpp"
#include "sdprune/rng.hpp"

namespace sdprune {

namespace detail {

inline std::uint32_t read_be_u32(std::istream& in, const std::string& what) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4))
    throw ConfigError("idx: truncated file while reading " + what);
  return (std::uint32_t(b[0]) << 24) | (std::uint32_t(b[1]) << 16) |
         (std::uint32_t(b[2]) << 8) | std::uint32_t(b[3]);
}

}  // namespace detail

/// IDX image/label pair (big-endian, magic 0x803 / 0x801); pixels scaled to [0,1].
inline Dataset load_idx(const std::string& images_path, const std::string& labels_path) {
  std::ifstream img(images_path, std::ios::binary);
  if (!img) throw ConfigError("idx: cannot open " + images_path);
  std::uint32_t magic = detail::read_be_u32(img, "image magic");
  if (magic != 0x00000803u)
    throw ConfigError("idx: bad image magic " + std::to_string(magic) + " in " + images_path);
  std::uint32_t count = detail::read_be_u32(img, "image count");
  std::uint32_t rows = detail::read_be_u32(img, "rows");
  std::uint32_t cols = detail::read_be_u32(img, "cols");

  std::ifstream lbl(labels_path, std::ios::binary);
  if (!lbl) throw ConfigError("idx: cannot open " + labels_path);
  std::uint32_t lmagic = detail::read_be_u32(lbl, "label magic");
  if (lmagic != 0x00000801u)
    throw ConfigError("idx: bad label magic " + std::to_string(lmagic) + " in " + labels_path);
  std::uint32_t lcount = detail::read_be_u32(lbl, "label count");
  if (lcount != count)
    throw ConfigError("idx: image count " + std::to_string(count) + " != label count " +
                      std::to_string(lcount));

  Dataset data;
  data.name = images_path;
  const std::size_t pixels = std::size_t(rows) * cols;
  std::vector<unsigned char> buf(pixels);
  for (std::uint32_t i = 0; i < count; ++i) {
    if (!img.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(pixels)))
      throw ConfigError("idx: truncated image data at sample " + std::to_string(i));
    Vec x(pixels);
    for (std::size_t p = 0; p < pixels; ++p) x[p] = buf[p] / 255.0;
    data.inputs.push_back(std::move(x));
    char c;
    if (!lbl.read(&c, 1))
      throw ConfigError("idx: truncated label data at sample " + std::to_string(i));
    data.class_labels.push_back(static_cast<unsigned char>(c));
  }
  if (data.inputs.empty()) throw ConfigError("idx: empty dataset");
  return data;
}

/// CSV: header row, feature columns then one target column.
inline Dataset load_csv(const std::string& path, bool classification = false) {
  std::ifstream in(path);
  if (!in) throw ConfigError("csv: cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("csv: missing header in " + path);
  Dataset data;
  data.name = path;
  std::size_t ncols = 0;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    Vec row;
    while (std::getline(ss, cell, ',')) {
      try {
        row.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw ConfigError("csv: bad number '" + cell + "' at line " + std::to_string(lineno));
      }
    }
    if (row.size() < 2) throw ConfigError("csv: need at least one feature and one target");
    if (ncols == 0) ncols = row.size();
    if (row.size() != ncols)
      throw ConfigError("csv: ragged row at line " + std::to_string(lineno));
    double target = row.back();
    row.pop_back();
    data.inputs.push_back(std::move(row));
    if (classification)
      data.class_labels.push_back(static_cast<std::size_t>(target));
    else
      data.targets.push_back({target});
  }
  if (data.inputs.empty()) throw ConfigError("csv: no data rows in " + path);
  return data;
}

/// Two interleaved half circles, the usual 2-class toy problem.
inline Dataset make_two_moons(std::uint64_t seed, std::size_t n_samples, double noise_std) {
  Rng rng(Rng::derive(seed, "two_moons"));
  Dataset data;
  data.name = "two_moons";
  const double pi = 3.14159265358979323846;
  for (std::size_t i = 0; i < n_samples; ++i) {
    std::size_t cls = i % 2;
    double t = pi * rng.uniform();
    double x, y;
    if (cls == 0) {
      x = std::cos(t);
      y = std::sin(t);
    } else {
      x = 1.0 - std::cos(t);
      y = 0.5 - std::sin(t);
    }
    x += noise_std * rng.normal();
    y += noise_std * rng.normal();
    data.inputs.push_back({x, y});
    data.class_labels.push_back(cls);
  }
  return data;
}

/// Least-squares data with a coordinate-aligned null space: the last
/// `n_flat_cols` feature columns are identically zero, so the quadratic loss
/// has that many exact zero Hessian eigenvalues.
inline std::pair<std::vector<Vec>, Vec> make_overparam_regression(std::uint64_t seed,
                                                                  std::size_t n_samples,
                                                                  std::size_t dim,
                                                                  std::size_t n_flat_cols) {
  if (n_flat_cols >= dim) throw ConfigError("overparam fixture: flat cols must be < dim");
  Rng xr(Rng::derive(seed, "fixture_x"));
  Rng yr(Rng::derive(seed, "fixture_y"));
  std::vector<Vec> x(n_samples, Vec(dim, 0.0));
  for (std::size_t i = 0; i < n_samples; ++i)
    for (std::size_t j = 0; j + n_flat_cols < dim; ++j) x[i][j] = xr.normal();
  Vec y(n_samples);
  for (double& v : y) v = yr.normal();
  return {std::move(x), std::move(y)};
}

}  // namespace sdprune
