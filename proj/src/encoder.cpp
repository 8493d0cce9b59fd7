#include "sgcl/encoder.hpp"

#include <cmath>
#include <fstream>

#include "json.hpp"
#include "sgcl/errors.hpp"
#include "sgcl/numerics.hpp"

namespace sgcl {

std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::Prelu: return "prelu";
    case Activation::Relu: return "relu";
    case Activation::Identity: return "identity";
  }
  return "?";
}

Activation activation_from_string(std::string_view s) {
  if (s == "prelu") return Activation::Prelu;
  if (s == "relu") return Activation::Relu;
  if (s == "identity") return Activation::Identity;
  throw ConfigError("unknown activation '" + std::string(s) + "'");
}

void EncoderConfig::validate() const {
  if (in_dim == 0 || hidden_dim == 0 || out_dim == 0) throw ConfigError("encoder: dimensions must be positive");
  if (use_batch_norm && !(bn_eps >= 0.0)) throw ConfigError("encoder: bn_eps must be non-negative");
}

EncoderParams EncoderParams::zeros_like() const {
  EncoderParams z = *this;
  z.visit([](std::string_view, DenseMatrix& m) { m.fill(0.0); });
  return z;
}

std::size_t EncoderParams::parameter_count() const {
  std::size_t n = 0;
  visit([&](std::string_view, const DenseMatrix& m) { n += m.size(); });
  return n;
}

bool EncoderParams::all_finite() const {
  bool ok = true;
  visit([&](std::string_view, const DenseMatrix& m) { ok = ok && m.all_finite(); });
  return ok;
}

EncoderParams init_encoder(const EncoderConfig& config, Rng& rng) {
  config.validate();
  EncoderParams p;
  p.w1 = glorot_init(config.in_dim, config.hidden_dim, rng);
  p.b1 = DenseMatrix(1, config.hidden_dim);
  p.w2 = glorot_init(config.hidden_dim, config.out_dim, rng);
  p.b2 = DenseMatrix(1, config.out_dim);
  p.bn1_scale = DenseMatrix(1, config.hidden_dim, 1.0);
  p.bn1_shift = DenseMatrix(1, config.hidden_dim);
  p.bn2_scale = DenseMatrix(1, config.out_dim, 1.0);
  p.bn2_shift = DenseMatrix(1, config.out_dim);
  p.prelu_slope = DenseMatrix(1, 1, config.prelu_init);
  return p;
}

namespace {

void check_shapes(const EncoderConfig& c, const EncoderParams& p) {
  auto expect = [](const DenseMatrix& m, std::size_t r, std::size_t k, const char* name) {
    if (m.rows() != r || m.cols() != k) {
      throw ShapeError(std::string("encoder: parameter ") + name + " has shape " + m.shape_string() + ", expected (" +
                       std::to_string(r) + "x" + std::to_string(k) + ")");
    }
  };
  expect(p.w1, c.in_dim, c.hidden_dim, "w1");
  expect(p.b1, 1, c.hidden_dim, "b1");
  expect(p.w2, c.hidden_dim, c.out_dim, "w2");
  expect(p.b2, 1, c.out_dim, "b2");
  expect(p.bn1_scale, 1, c.hidden_dim, "bn1_scale");
  expect(p.bn1_shift, 1, c.hidden_dim, "bn1_shift");
  expect(p.bn2_scale, 1, c.out_dim, "bn2_scale");
  expect(p.bn2_shift, 1, c.out_dim, "bn2_shift");
  expect(p.prelu_slope, 1, 1, "prelu_slope");
}

// Â (input W) + b, then optional batch norm. Fills the trace fields and returns
// the pre-activation.
DenseMatrix layer_forward(const EncoderConfig& c, const CsrMatrix& adj, const DenseMatrix& input, const DenseMatrix& w,
                          const DenseMatrix& b, const DenseMatrix& scale, const DenseMatrix& shift, LayerTrace& tr,
                          int layer) {
  DenseMatrix u = spmm(adj, matmul(input, w));
  const std::size_t n = u.rows();
  const std::size_t m = u.cols();
  for (std::size_t i = 0; i < n; ++i) {
    auto r = u.row(i);
    for (std::size_t j = 0; j < m; ++j) r[j] += b(0, j);
  }
  DenseMatrix y;
  if (c.use_batch_norm) {
    const DenseMatrix mean = column_mean(u);
    DenseMatrix var(1, m);
    for (std::size_t i = 0; i < n; ++i) {
      auto r = u.row(i);
      for (std::size_t j = 0; j < m; ++j) {
        const double dlt = r[j] - mean(0, j);
        var(0, j) += dlt * dlt;
      }
    }
    DenseMatrix inv_std(1, m);
    for (std::size_t j = 0; j < m; ++j) inv_std(0, j) = 1.0 / std::sqrt(var(0, j) / static_cast<double>(n) + c.bn_eps);
    DenseMatrix xhat(n, m);
    y = DenseMatrix(n, m);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < m; ++j) {
        xhat(i, j) = (u(i, j) - mean(0, j)) * inv_std(0, j);
        y(i, j) = scale(0, j) * xhat(i, j) + shift(0, j);
      }
    }
    tr.xhat = std::move(xhat);
    tr.inv_std = std::move(inv_std);
  } else {
    y = std::move(u);
  }
  if (!y.all_finite()) throw NumericError("encoder: non-finite values in layer " + std::to_string(layer));
  return y;
}

DenseMatrix activate(Activation a, const DenseMatrix& y, double slope) {
  DenseMatrix out = y;
  if (a == Activation::Identity) return out;
  const double s = a == Activation::Relu ? 0.0 : slope;
  for (double& v : out.values())
    if (!(v > 0.0)) v *= s;
  return out;
}

// Backward through batch norm and the propagation/affine map. Accumulates
// parameter gradients and returns the gradient w.r.t. the layer input.
DenseMatrix layer_backward(const EncoderConfig& c, const CsrMatrix& adj, const LayerTrace& tr, const DenseMatrix& w,
                           const DenseMatrix& scale, const DenseMatrix& d_pre, DenseMatrix& dw, DenseMatrix& db,
                           DenseMatrix& dscale, DenseMatrix& dshift) {
  const std::size_t n = d_pre.rows();
  const std::size_t m = d_pre.cols();
  DenseMatrix du;
  if (c.use_batch_norm) {
    DenseMatrix mean_dxhat(1, m);
    DenseMatrix mean_dxhat_xhat(1, m);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < m; ++j) {
        const double g = d_pre(i, j);
        dscale(0, j) += g * tr.xhat(i, j);
        dshift(0, j) += g;
        const double dxh = g * scale(0, j);
        mean_dxhat(0, j) += dxh;
        mean_dxhat_xhat(0, j) += dxh * tr.xhat(i, j);
      }
    }
    mean_dxhat *= 1.0 / static_cast<double>(n);
    mean_dxhat_xhat *= 1.0 / static_cast<double>(n);
    du = DenseMatrix(n, m);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < m; ++j) {
        const double dxh = d_pre(i, j) * scale(0, j);
        du(i, j) = tr.inv_std(0, j) * (dxh - mean_dxhat(0, j) - tr.xhat(i, j) * mean_dxhat_xhat(0, j));
      }
    }
  } else {
    du = d_pre;
  }
  db += column_sum(du);
  const DenseMatrix dm = spmm_transposed(adj, du);
  dw += matmul_tn(tr.input, dm);
  return matmul_nt(dm, w);
}

}  // namespace

EncoderOutput encoder_forward(const EncoderConfig& config, const EncoderParams& params, const CsrMatrix& norm_adj,
                              const FeatureMatrix& features, ForwardMode mode) {
  config.validate();
  check_shapes(config, params);
  if (features.cols() != config.in_dim) {
    throw ShapeError("encoder: features have " + std::to_string(features.cols()) + " columns, expected " +
                     std::to_string(config.in_dim));
  }
  if (norm_adj.rows() != features.rows() || norm_adj.cols() != features.rows()) {
    throw ShapeError("encoder: adjacency does not match " + std::to_string(features.rows()) + " feature rows");
  }

  EncoderOutput out;
  ForwardTrace& tr = out.trace;
  tr.mode = mode;
  tr.config = config;

  const DenseMatrix y1 = layer_forward(config, norm_adj, features, params.w1, params.b1, params.bn1_scale,
                                       params.bn1_shift, tr.layer1, 1);
  DenseMatrix a1 = activate(config.activation, y1, params.prelu_slope(0, 0));
  DenseMatrix h = layer_forward(config, norm_adj, a1, params.w2, params.b2, params.bn2_scale, params.bn2_shift,
                                tr.layer2, 2);

  if (mode == ForwardMode::Train) {
    tr.params = params;
    tr.norm_adj = norm_adj;
    tr.layer1.input = features;
    tr.layer1.pre_act = y1;
    tr.layer2.input = std::move(a1);
    tr.layer2.pre_act = h;
  } else {
    tr.layer1 = {};
    tr.layer2 = {};
  }
  out.h = std::move(h);
  return out;
}

EncoderParams encoder_backward(const ForwardTrace& trace, const DenseMatrix& dH) {
  if (trace.mode != ForwardMode::Train) throw UsageError("encoder_backward: trace came from an eval-mode forward pass");
  const EncoderConfig& c = trace.config;
  const EncoderParams& p = trace.params;
  if (dH.rows() != trace.layer2.pre_act.rows() || dH.cols() != c.out_dim) {
    throw ShapeError("encoder_backward: dH shape " + dH.shape_string());
  }
  EncoderParams g = p.zeros_like();

  const DenseMatrix da1 =
      layer_backward(c, trace.norm_adj, trace.layer2, p.w2, p.bn2_scale, dH, g.w2, g.b2, g.bn2_scale, g.bn2_shift);

  DenseMatrix dy1 = da1;
  if (c.activation != Activation::Identity) {
    const double slope = c.activation == Activation::Relu ? 0.0 : p.prelu_slope(0, 0);
    double dslope = 0.0;
    const auto y = trace.layer1.pre_act.values();
    auto d = dy1.values();
    for (std::size_t k = 0; k < d.size(); ++k) {
      if (!(y[k] > 0.0)) {
        dslope += d[k] * y[k];
        d[k] *= slope;
      }
    }
    if (c.activation == Activation::Prelu) g.prelu_slope(0, 0) = dslope;
  }
  layer_backward(c, trace.norm_adj, trace.layer1, p.w1, p.bn1_scale, dy1, g.w1, g.b1, g.bn1_scale, g.bn1_shift);
  return g;
}

EncoderParams ema_update(const EncoderParams& online, const EncoderParams& target, double tau) {
  if (!(tau >= 0.0 && tau <= 1.0)) throw ConfigError("ema_update: tau must lie in [0, 1]");
  EncoderParams out = target;
  std::vector<const DenseMatrix*> src;
  online.visit([&](std::string_view, const DenseMatrix& m) { src.push_back(&m); });
  std::size_t i = 0;
  out.visit([&](std::string_view name, DenseMatrix& m) {
    const DenseMatrix& o = *src[i++];
    if (!o.same_shape(m)) throw ShapeError("ema_update: shape mismatch for " + std::string(name));
    auto t = m.values();
    auto ov = o.values();
    for (std::size_t k = 0; k < t.size(); ++k) t[k] = tau * t[k] + (1.0 - tau) * ov[k];
  });
  return out;
}

void save_checkpoint(const std::filesystem::path& dir, const EncoderConfig& config, const EncoderParams& params) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create checkpoint directory " + dir.string() + ": " + ec.message());
  nlohmann::json manifest;
  manifest["format"] = "sgcl-checkpoint-1";
  manifest["config"] = {{"in_dim", config.in_dim},
                        {"hidden_dim", config.hidden_dim},
                        {"out_dim", config.out_dim},
                        {"use_batch_norm", config.use_batch_norm},
                        {"activation", std::string(to_string(config.activation))},
                        {"bn_eps", config.bn_eps},
                        {"prelu_init", config.prelu_init}};
  nlohmann::json tensors = nlohmann::json::array();
  params.visit([&](std::string_view name, const DenseMatrix& m) {
    const std::string file = std::string(name) + ".bin";
    save_matrix(m, dir / file);
    tensors.push_back({{"name", name}, {"file", file}, {"rows", m.rows()}, {"cols", m.cols()}});
  });
  manifest["tensors"] = tensors;
  std::ofstream os(dir / "manifest.json");
  if (!os) throw IoError("cannot write " + (dir / "manifest.json").string());
  os << manifest.dump(2) << '\n';
}

Checkpoint load_checkpoint(const std::filesystem::path& dir) {
  std::ifstream is(dir / "manifest.json");
  if (!is) throw IoError("checkpoint manifest missing in " + dir.string());
  Checkpoint ck;
  try {
    const nlohmann::json manifest = nlohmann::json::parse(is);
    if (manifest.at("format") != "sgcl-checkpoint-1") throw IoError("unknown checkpoint format");
    const auto& c = manifest.at("config");
    ck.config.in_dim = c.at("in_dim").get<std::size_t>();
    ck.config.hidden_dim = c.at("hidden_dim").get<std::size_t>();
    ck.config.out_dim = c.at("out_dim").get<std::size_t>();
    ck.config.use_batch_norm = c.at("use_batch_norm").get<bool>();
    ck.config.activation = activation_from_string(c.at("activation").get<std::string>());
    ck.config.bn_eps = c.at("bn_eps").get<double>();
    ck.config.prelu_init = c.at("prelu_init").get<double>();
    const auto& tensors = manifest.at("tensors");
    ck.params.visit([&](std::string_view name, DenseMatrix& m) {
      for (const auto& t : tensors) {
        if (t.at("name") == name) {
          m = load_matrix(dir / t.at("file").get<std::string>());
          if (m.rows() != t.at("rows").get<std::size_t>() || m.cols() != t.at("cols").get<std::size_t>()) {
            throw IoError("checkpoint tensor " + std::string(name) + " shape disagrees with manifest");
          }
          return;
        }
      }
      throw IoError("checkpoint lacks tensor " + std::string(name));
    });
  } catch (const nlohmann::json::exception& e) {
    throw IoError("corrupt checkpoint manifest in " + dir.string() + ": " + e.what());
  } catch (const ConfigError& e) {
    throw IoError("corrupt checkpoint config in " + dir.string() + ": " + e.what());
  }
  try {
    ck.config.validate();
    check_shapes(ck.config, ck.params);
  } catch (const Error& e) {
    throw IoError("inconsistent checkpoint in " + dir.string() + ": " + e.what());
  }
  if (!ck.params.all_finite()) throw IoError("checkpoint contains non-finite parameters");
  return ck;
}

}  // namespace sgcl
