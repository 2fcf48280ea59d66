// Copyright 2026 The prosfda Authors
// SPDX-License-Identifier: Apache-2.0

#include "prosfda/segmenter.hpp"

#include <cmath>
#include <fstream>

#include "prosfda/binary_io.hpp"

namespace prosfda {
namespace {

constexpr std::string_view kModelMagic = "PSFDAMD1";
constexpr std::uint64_t kMaxDim = 1u << 20;

void check_image(const ModelSpec& spec, const RealArray& image) {
  if (image.rank() != 3 || image.dim(2) != spec.input_dim) {
    throw ShapeError("segmenter: image must be H x W x " + std::to_string(spec.input_dim));
  }
}

void check_params(const ModelSpec& spec, const ParamVector& params) {
  if (params.size() != spec.param_count()) {
    throw ShapeError("segmenter: expected " + std::to_string(spec.param_count()) +
                     " parameters, got " + std::to_string(params.size()));
  }
}

void check_upstream(const RealArray& g, std::size_t h, std::size_t w, std::size_t k,
                    const char* what) {
  if (g.empty()) return;
  if (g.rank() != 3 || g.dim(0) != h || g.dim(1) != w || g.dim(2) != k) {
    throw ShapeError(std::string("segmenter::backward: ") + what + " has wrong shape");
  }
}

// y = tanh?(x * W + b) for one pixel.
void affine(const ParamVector& p, const LayerSlot& s, std::span<const double> x,
            std::span<double> y) {
  for (std::size_t o = 0; o < s.out; ++o) y[o] = p[s.biases + o];
  for (std::size_t i = 0; i < s.in; ++i) {
    const double xi = x[i];
    const double* wrow = &p.values[s.weights + i * s.out];
    for (std::size_t o = 0; o < s.out; ++o) y[o] += xi * wrow[o];
  }
}

}  // namespace

std::size_t ModelSpec::param_count() const {
  std::size_t n = 0;
  std::size_t in = input_dim;
  for (std::size_t h : hidden_dims) {
    n += in * h + h;
    in = h;
  }
  return n + in * num_classes + num_classes;
}

void ModelSpec::validate() const {
  if (input_dim == 0) throw ValueError("ModelSpec: input_dim must be positive");
  if (hidden_dims.empty()) throw ValueError("ModelSpec: at least one hidden layer is required");
  for (std::size_t h : hidden_dims) {
    if (h == 0) throw ValueError("ModelSpec: hidden widths must be positive");
  }
  if (num_classes == 0) throw ValueError("ModelSpec: num_classes must be positive");
}

std::vector<LayerSlot> param_layout(const ModelSpec& spec) {
  std::vector<LayerSlot> slots;
  std::size_t offset = 0;
  std::size_t in = spec.input_dim;
  auto add = [&](std::size_t out) {
    LayerSlot s{in, out, offset, offset + in * out};
    offset = s.biases + out;
    slots.push_back(s);
    in = out;
  };
  for (std::size_t h : spec.hidden_dims) add(h);
  add(spec.num_classes);
  return slots;
}

ForwardResult forward(const ModelSpec& spec, const ParamVector& params, const RealArray& image) {
  spec.validate();
  check_image(spec, image);
  check_params(spec, params);
  const auto slots = param_layout(spec);
  const std::size_t h = image.dim(0), w = image.dim(1);
  const std::size_t d = spec.feature_dim(), c = spec.num_classes;

  ForwardResult out{RealArray({h, w, d}), RealArray({h, w, c})};
  std::vector<double> a, b;
  for (std::size_t px = 0; px < h * w; ++px) {
    auto x = image.row(px);
    a.assign(x.begin(), x.end());
    for (std::size_t l = 0; l + 1 < slots.size(); ++l) {
      b.resize(slots[l].out);
      affine(params, slots[l], a, b);
      for (double& v : b) v = std::tanh(v);
      std::swap(a, b);
    }
    std::copy(a.begin(), a.end(), out.features.row(px).begin());
    affine(params, slots.back(), a, out.logits.row(px));
  }
  return out;
}

ParamVector backward(const ModelSpec& spec, const ParamVector& params, const RealArray& image,
                     const RealArray& upstream_feature_grad, const RealArray& upstream_logit_grad) {
  spec.validate();
  check_image(spec, image);
  check_params(spec, params);
  const std::size_t h = image.dim(0), w = image.dim(1);
  check_upstream(upstream_feature_grad, h, w, spec.feature_dim(), "feature grad");
  check_upstream(upstream_logit_grad, h, w, spec.num_classes, "logit grad");

  const auto slots = param_layout(spec);
  const std::size_t num_hidden = slots.size() - 1;
  const LayerSlot& head = slots.back();
  ParamVector grad(params.size(), 0.0);

  // acts[0] = input, acts[l + 1] = tanh output of hidden layer l.
  std::vector<std::vector<double>> acts(num_hidden + 1);
  std::vector<double> delta, delta_prev;

  for (std::size_t px = 0; px < h * w; ++px) {
    auto x = image.row(px);
    acts[0].assign(x.begin(), x.end());
    for (std::size_t l = 0; l < num_hidden; ++l) {
      acts[l + 1].resize(slots[l].out);
      affine(params, slots[l], acts[l], acts[l + 1]);
      for (double& v : acts[l + 1]) v = std::tanh(v);
    }

    // dL/dfeatures = W_head * g_logits + upstream feature grad.
    const auto& feat = acts[num_hidden];
    delta.assign(head.in, 0.0);
    if (!upstream_logit_grad.empty()) {
      auto g = upstream_logit_grad.row(px);
      for (std::size_t i = 0; i < head.in; ++i) {
        const double* wrow = &params.values[head.weights + i * head.out];
        double* gw = &grad.values[head.weights + i * head.out];
        double acc = 0.0;
        for (std::size_t o = 0; o < head.out; ++o) {
          gw[o] += feat[i] * g[o];
          acc += wrow[o] * g[o];
        }
        delta[i] = acc;
      }
      for (std::size_t o = 0; o < head.out; ++o) grad[head.biases + o] += g[o];
    }
    if (!upstream_feature_grad.empty()) {
      auto gf = upstream_feature_grad.row(px);
      for (std::size_t i = 0; i < head.in; ++i) delta[i] += gf[i];
    }

    for (std::size_t l = num_hidden; l-- > 0;) {
      const LayerSlot& s = slots[l];
      const auto& y = acts[l + 1];
      const auto& in = acts[l];
      for (std::size_t o = 0; o < s.out; ++o) delta[o] *= 1.0 - y[o] * y[o];
      delta_prev.assign(s.in, 0.0);
      for (std::size_t i = 0; i < s.in; ++i) {
        const double* wrow = &params.values[s.weights + i * s.out];
        double* gw = &grad.values[s.weights + i * s.out];
        double acc = 0.0;
        for (std::size_t o = 0; o < s.out; ++o) {
          gw[o] += in[i] * delta[o];
          acc += wrow[o] * delta[o];
        }
        delta_prev[i] = acc;
      }
      for (std::size_t o = 0; o < s.out; ++o) grad[s.biases + o] += delta[o];
      std::swap(delta, delta_prev);
    }
  }
  return grad;
}

ParamVector init_params(const ModelSpec& spec, Rng& rng, double scale) {
  spec.validate();
  if (!(scale > 0.0)) throw ValueError("init_params: scale must be positive");
  ParamVector p(spec.param_count(), 0.0);
  for (const LayerSlot& s : param_layout(spec)) {
    const double bound = scale / std::sqrt(static_cast<double>(s.in));
    for (std::size_t k = 0; k < s.in * s.out; ++k) p[s.weights + k] = rng.uniform(-bound, bound);
  }
  return p;
}

void write_model(std::ostream& os, const Model& model) {
  io::write_magic(os, kModelMagic);
  io::write_u64(os, model.spec.input_dim);
  io::write_u64(os, model.spec.hidden_dims.size());
  for (std::size_t hd : model.spec.hidden_dims) io::write_u64(os, hd);
  io::write_u64(os, model.spec.num_classes);
  io::write_u64(os, model.params.size());
  io::write_f64s(os, model.params.values);
}

Model read_model(std::istream& is) {
  io::expect_magic(is, kModelMagic, "model checkpoint");
  Model m;
  m.spec.input_dim = io::read_count(is, kMaxDim, "model input_dim");
  const auto nh = io::read_count(is, 64, "model hidden layer count");
  for (std::uint64_t i = 0; i < nh; ++i) {
    m.spec.hidden_dims.push_back(io::read_count(is, kMaxDim, "model hidden width"));
  }
  m.spec.num_classes = io::read_count(is, kMaxDim, "model num_classes");
  try {
    m.spec.validate();
  } catch (const ValueError& e) {
    throw DataError(std::string("model checkpoint: ") + e.what());
  }
  const auto n = io::read_u64(is, "model param_count");
  if (n != m.spec.param_count()) {
    throw DataError("model checkpoint: param_count " + std::to_string(n) +
                    " does not match architecture (" + std::to_string(m.spec.param_count()) + ")");
  }
  m.params = ParamVector(n);
  io::read_f64s(is, m.params.values, "model parameters");
  return m;
}

void save_model(const std::string& path, const Model& model) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("cannot open '" + path + "' for writing");
  write_model(os, model);
  if (!os) throw DataError("failed writing '" + path + "'");
}

Model load_model(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open model checkpoint '" + path + "'");
  Model m = read_model(is);
  if (is.peek() != std::ifstream::traits_type::eof()) {
    throw DataError("model checkpoint '" + path + "': trailing bytes");
  }
  return m;
}

}  // namespace prosfda
