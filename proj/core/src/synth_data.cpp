// Copyright 2026 The prosfda Authors
// SPDX-License-Identifier: Apache-2.0

#include "prosfda/synth_data.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>

#include "kv_text.hpp"
#include "prosfda/binary_io.hpp"

namespace prosfda {
namespace {

constexpr std::string_view kDatasetMagic = "PSFDADS1";
constexpr std::uint64_t kHeaderBytes = 8 + 5 * 8;

// Determinant by Gaussian elimination with partial pivoting.
double determinant(const RealArray& a) {
  const std::size_t n = a.dim(0);
  std::vector<double> m(a.values());
  double det = 1.0;
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < n; ++r) {
      if (std::abs(m[r * n + col]) > std::abs(m[piv * n + col])) piv = r;
    }
    if (m[piv * n + col] == 0.0) return 0.0;
    if (piv != col) {
      for (std::size_t k = 0; k < n; ++k) std::swap(m[piv * n + k], m[col * n + k]);
      det = -det;
    }
    det *= m[col * n + col];
    for (std::size_t r = col + 1; r < n; ++r) {
      const double f = m[r * n + col] / m[col * n + col];
      for (std::size_t k = col; k < n; ++k) m[r * n + k] -= f * m[col * n + k];
    }
  }
  return det;
}

LabelMap voronoi_labels(const DomainSpec& spec, Rng& rng) {
  const std::size_t k = spec.regions_per_image;
  double total = 0.0;
  for (double w : spec.class_weights) total += w;

  std::vector<double> sy(k), sx(k);
  std::vector<std::int32_t> cls(k);
  for (std::size_t s = 0; s < k; ++s) {
    sy[s] = rng.uniform(0.0, static_cast<double>(spec.height));
    sx[s] = rng.uniform(0.0, static_cast<double>(spec.width));
    double u = rng.uniform() * total;
    std::size_t c = 0;
    while (c + 1 < spec.num_classes && u >= spec.class_weights[c]) {
      u -= spec.class_weights[c];
      ++c;
    }
    cls[s] = static_cast<std::int32_t>(c);
  }

  LabelMap out(spec.height, spec.width);
  for (std::size_t y = 0; y < spec.height; ++y) {
    for (std::size_t x = 0; x < spec.width; ++x) {
      const double py = static_cast<double>(y) + 0.5, px = static_cast<double>(x) + 0.5;
      std::size_t best = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (std::size_t s = 0; s < k; ++s) {
        const double d = (py - sy[s]) * (py - sy[s]) + (px - sx[s]) * (px - sx[s]);
        if (d < best_d) {
          best_d = d;
          best = s;
        }
      }
      out[y * spec.width + x] = cls[best];
    }
  }
  return out;
}

std::uint64_t image_bytes(std::uint64_t h, std::uint64_t w, std::uint64_t ch) {
  return h * w * ch * 8 + h * w * 4;
}

struct DatasetHeader {
  std::uint64_t num_classes, height, width, channels, count;
};

DatasetHeader read_header(std::istream& is, const std::string& path) {
  io::expect_magic(is, kDatasetMagic, "dataset '" + path + "'");
  DatasetHeader h{};
  const std::uint64_t limit = std::uint64_t{1} << 24;
  h.num_classes = io::read_count(is, limit, "dataset num_classes");
  h.height = io::read_count(is, limit, "dataset height");
  h.width = io::read_count(is, limit, "dataset width");
  h.channels = io::read_count(is, limit, "dataset channels");
  h.count = io::read_count(is, limit, "dataset image count");
  if (h.num_classes == 0 || h.height == 0 || h.width == 0 || h.channels == 0) {
    throw DataError("dataset '" + path + "': zero dimension in header");
  }
  const std::uint64_t expected = kHeaderBytes + h.count * image_bytes(h.height, h.width, h.channels);
  const std::uint64_t actual = std::filesystem::file_size(path);
  if (actual != expected) {
    throw DataError("dataset '" + path + "': header describes " + std::to_string(expected) +
                    " bytes but file has " + std::to_string(actual) +
                    (actual < expected ? " (truncated)" : " (trailing data)"));
  }
  return h;
}

std::ifstream open_dataset(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open dataset '" + path + "'");
  return is;
}

const std::set<std::string> kRecipeKeys = {
    "num_classes", "input_dim",         "height",     "width",      "num_images",
    "seed",        "mean_spread",       "noise_std",  "rotation_deg", "offset",
    "regions_per_image", "rare_class", "rare_weight"};

}  // namespace

void DomainSpec::validate() const {
  if (num_classes < 2) throw ValueError("DomainSpec: need at least 2 classes");
  if (input_dim == 0 || height == 0 || width == 0) throw ValueError("DomainSpec: zero dimension");
  if (class_means.shape() != Shape{num_classes, input_dim}) {
    throw ShapeError("DomainSpec: class_means must be C x input_dim");
  }
  if (shift_matrix.shape() != Shape{input_dim, input_dim} || shift_offset.size() != input_dim) {
    throw ShapeError("DomainSpec: shift must be input_dim x input_dim plus an offset");
  }
  if (!(noise_std >= 0.0)) throw ValueError("DomainSpec: noise_std must be >= 0");
  if (regions_per_image == 0) throw ValueError("DomainSpec: regions_per_image must be positive");
  if (class_weights.size() != num_classes) throw ShapeError("DomainSpec: one weight per class");
  double total = 0.0;
  for (double w : class_weights) {
    if (!(w >= 0.0)) throw ValueError("DomainSpec: class weights must be >= 0");
    total += w;
  }
  if (!(total > 0.0)) throw ValueError("DomainSpec: class weights sum to zero");
  if (std::abs(determinant(shift_matrix)) < 1e-12) {
    throw ValueError("DomainSpec: shift matrix is singular");
  }
}

DomainSpec build_domain(const DomainRecipe& r) {
  DomainSpec s;
  s.num_classes = r.num_classes;
  s.input_dim = r.input_dim;
  s.height = r.height;
  s.width = r.width;
  s.num_images = r.num_images;
  s.noise_std = r.noise_std;
  s.regions_per_image = r.regions_per_image;

  Rng rng(r.seed, 0);
  s.class_means = RealArray({r.num_classes, r.input_dim});
  for (double& v : s.class_means.data()) v = r.mean_spread * rng.normal();

  const double theta = r.rotation_deg * std::numbers::pi / 180.0;
  const double cs = std::cos(theta), sn = std::sin(theta);
  s.shift_matrix = RealArray({r.input_dim, r.input_dim});
  const std::size_t n = r.input_dim;
  for (std::size_t i = 0; i + 1 < n; i += 2) {
    s.shift_matrix[i * n + i] = cs;
    s.shift_matrix[i * n + i + 1] = -sn;
    s.shift_matrix[(i + 1) * n + i] = sn;
    s.shift_matrix[(i + 1) * n + i + 1] = cs;
  }
  if (n % 2 == 1) s.shift_matrix[(n - 1) * n + n - 1] = 1.0;
  s.shift_offset.assign(n, r.offset);

  s.class_weights.assign(r.num_classes, 1.0);
  if (r.rare_class >= 0) {
    if (static_cast<std::size_t>(r.rare_class) >= r.num_classes) {
      throw ValueError("DomainRecipe: rare_class out of range");
    }
    s.class_weights[static_cast<std::size_t>(r.rare_class)] = r.rare_weight;
  }
  s.validate();
  return s;
}

DomainRecipe parse_domain_recipe(std::string_view text) {
  const auto kvs = kv::parse(text, kRecipeKeys, "dataset spec");
  DomainRecipe r;
  for (const auto& [k, v] : kvs) {
    if (k == "num_classes") r.num_classes = kv::to_u64(k, v);
    else if (k == "input_dim") r.input_dim = kv::to_u64(k, v);
    else if (k == "height") r.height = kv::to_u64(k, v);
    else if (k == "width") r.width = kv::to_u64(k, v);
    else if (k == "num_images") r.num_images = kv::to_u64(k, v);
    else if (k == "seed") r.seed = kv::to_u64(k, v);
    else if (k == "mean_spread") r.mean_spread = kv::to_double(k, v);
    else if (k == "noise_std") r.noise_std = kv::to_double(k, v);
    else if (k == "rotation_deg") r.rotation_deg = kv::to_double(k, v);
    else if (k == "offset") r.offset = kv::to_double(k, v);
    else if (k == "regions_per_image") r.regions_per_image = kv::to_u64(k, v);
    else if (k == "rare_class") r.rare_class = static_cast<int>(kv::to_i64(k, v));
    else if (k == "rare_weight") r.rare_weight = kv::to_double(k, v);
  }
  return r;
}

DomainRecipe load_domain_recipe(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw DataError("cannot open dataset spec '" + path + "'");
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_domain_recipe(ss.str());
}

std::string to_text(const DomainRecipe& r) {
  std::ostringstream os;
  os << "num_classes = " << r.num_classes << '\n'
     << "input_dim = " << r.input_dim << '\n'
     << "height = " << r.height << '\n'
     << "width = " << r.width << '\n'
     << "num_images = " << r.num_images << '\n'
     << "seed = " << r.seed << '\n'
     << "mean_spread = " << kv::format(r.mean_spread) << '\n'
     << "noise_std = " << kv::format(r.noise_std) << '\n'
     << "rotation_deg = " << kv::format(r.rotation_deg) << '\n'
     << "offset = " << kv::format(r.offset) << '\n'
     << "regions_per_image = " << r.regions_per_image << '\n'
     << "rare_class = " << r.rare_class << '\n'
     << "rare_weight = " << kv::format(r.rare_weight) << '\n';
  return os.str();
}

std::vector<LabeledImage> generate_domain(const DomainSpec& spec, Rng& rng, bool is_target) {
  spec.validate();
  const std::size_t d = spec.input_dim;
  std::vector<LabeledImage> out;
  out.reserve(spec.num_images);
  std::vector<double> x(d);
  for (std::size_t i = 0; i < spec.num_images; ++i) {
    LabeledImage img;
    img.labels = voronoi_labels(spec, rng);
    img.pixels = RealArray({spec.height, spec.width, d});
    for (std::size_t px = 0; px < img.labels.size(); ++px) {
      auto mean = spec.class_means.row(static_cast<std::size_t>(img.labels[px]));
      for (std::size_t k = 0; k < d; ++k) x[k] = mean[k] + spec.noise_std * rng.normal();
      auto dst = img.pixels.row(px);
      if (!is_target) {
        std::copy(x.begin(), x.end(), dst.begin());
        continue;
      }
      for (std::size_t r = 0; r < d; ++r) {
        double acc = spec.shift_offset[r];
        for (std::size_t k = 0; k < d; ++k) acc += spec.shift_matrix[r * d + k] * x[k];
        dst[r] = acc;
      }
    }
    out.push_back(std::move(img));
  }
  return out;
}

Dataset generate_source(const DomainRecipe& recipe) {
  const DomainSpec spec = build_domain(recipe);
  Rng rng(recipe.seed, 1);
  return Dataset{spec.num_classes, generate_domain(spec, rng, false)};
}

Dataset generate_target(const DomainRecipe& recipe) {
  const DomainSpec spec = build_domain(recipe);
  Rng rng(recipe.seed, 2);
  return Dataset{spec.num_classes, generate_domain(spec, rng, true)};
}

void save_dataset(const std::string& path, const Dataset& ds) {
  std::size_t h = 0, w = 0, ch = 0;
  if (!ds.images.empty()) {
    const RealArray& p0 = ds.images.front().pixels;
    if (p0.rank() != 3) throw ShapeError("save_dataset: images must be H x W x channels");
    h = p0.dim(0);
    w = p0.dim(1);
    ch = p0.dim(2);
  }
  for (const auto& img : ds.images) {
    if (img.pixels.shape() != Shape{h, w, ch} || img.labels.height != h || img.labels.width != w) {
      throw ShapeError("save_dataset: images differ in shape");
    }
  }
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("cannot open '" + path + "' for writing");
  io::write_magic(os, kDatasetMagic);
  io::write_u64(os, ds.num_classes);
  io::write_u64(os, h);
  io::write_u64(os, w);
  io::write_u64(os, ch);
  io::write_u64(os, ds.images.size());
  for (const auto& img : ds.images) {
    io::write_f64s(os, img.pixels.data());
    io::write_i32s(os, img.labels.labels);
  }
  if (!os) throw DataError("failed writing '" + path + "'");
}

Dataset load_dataset(const std::string& path) {
  auto is = open_dataset(path);
  const DatasetHeader h = read_header(is, path);
  Dataset ds;
  ds.num_classes = h.num_classes;
  ds.images.reserve(h.count);
  for (std::uint64_t i = 0; i < h.count; ++i) {
    LabeledImage img;
    img.pixels = RealArray({h.height, h.width, h.channels});
    io::read_f64s(is, img.pixels.data(), "dataset pixels");
    img.labels = LabelMap(h.height, h.width);
    io::read_i32s(is, img.labels.labels, "dataset labels");
    for (std::int32_t l : img.labels.labels) {
      if (l < 0 || static_cast<std::uint64_t>(l) >= h.num_classes) {
        throw DataError("dataset '" + path + "': label " + std::to_string(l) + " out of range");
      }
    }
    if (!img.pixels.all_finite()) throw DataError("dataset '" + path + "': non-finite pixel");
    ds.images.push_back(std::move(img));
  }
  return ds;
}

UnlabeledDataset load_dataset_pixels(const std::string& path) {
  auto is = open_dataset(path);
  const DatasetHeader h = read_header(is, path);
  UnlabeledDataset ds;
  ds.num_classes = h.num_classes;
  ds.images.reserve(h.count);
  const auto label_bytes = static_cast<std::streamoff>(h.height * h.width * 4);
  for (std::uint64_t i = 0; i < h.count; ++i) {
    RealArray px({h.height, h.width, h.channels});
    io::read_f64s(is, px.data(), "dataset pixels");
    if (!px.all_finite()) throw DataError("dataset '" + path + "': non-finite pixel");
    is.seekg(label_bytes, std::ios::cur);
    ds.images.push_back(std::move(px));
  }
  return ds;
}

std::string source_dataset_path(std::string_view prefix) { return std::string(prefix) + ".src.bin"; }
std::string target_dataset_path(std::string_view prefix) { return std::string(prefix) + ".tgt.bin"; }

}  // namespace prosfda
