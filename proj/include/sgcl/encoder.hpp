#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "sgcl/dense_matrix.hpp"
#include "sgcl/rng.hpp"
#include "sgcl/sparse.hpp"

namespace sgcl {

enum class Activation { Prelu, Relu, Identity };

std::string_view to_string(Activation a);
Activation activation_from_string(std::string_view s);

struct EncoderConfig {
  std::size_t in_dim = 0;
  std::size_t hidden_dim = 256;
  std::size_t out_dim = 128;
  bool use_batch_norm = true;
  Activation activation = Activation::Prelu;
  double bn_eps = 1e-5;
  double prelu_init = 0.25;

  void validate() const;
};

// Two-layer GCN parameters. Vectors are stored as 1 x n matrices. The PReLU
// slope belongs to the hidden layer; the output layer has no activation.
struct EncoderParams {
  DenseMatrix w1, b1, w2, b2;
  DenseMatrix bn1_scale, bn1_shift, bn2_scale, bn2_shift;
  DenseMatrix prelu_slope;

  template <class F>
  void visit(F&& f) {
    f("w1", w1), f("b1", b1), f("w2", w2), f("b2", b2);
    f("bn1_scale", bn1_scale), f("bn1_shift", bn1_shift), f("bn2_scale", bn2_scale), f("bn2_shift", bn2_shift);
    f("prelu_slope", prelu_slope);
  }
  template <class F>
  void visit(F&& f) const {
    f("w1", w1), f("b1", b1), f("w2", w2), f("b2", b2);
    f("bn1_scale", bn1_scale), f("bn1_shift", bn1_shift), f("bn2_scale", bn2_scale), f("bn2_shift", bn2_shift);
    f("prelu_slope", prelu_slope);
  }

  // Zero tensors with the same shapes.
  EncoderParams zeros_like() const;
  std::size_t parameter_count() const;
  bool all_finite() const;

  friend bool operator==(const EncoderParams&, const EncoderParams&) = default;
};

// Glorot weights, zero biases, unit BN scale, zero BN shift.
EncoderParams init_encoder(const EncoderConfig& config, Rng& rng);

enum class ForwardMode { Train, Eval };

struct LayerTrace {
  DenseMatrix input;
  DenseMatrix xhat;      // normalized pre-activation (BN on)
  DenseMatrix inv_std;   // 1 x m (BN on)
  DenseMatrix pre_act;   // BN output (or raw propagation when BN is off)
};

// Intermediates retained by a train-mode forward pass.
struct ForwardTrace {
  ForwardMode mode = ForwardMode::Eval;
  EncoderConfig config;
  EncoderParams params;
  CsrMatrix norm_adj;
  LayerTrace layer1, layer2;
};

struct EncoderOutput {
  RepresentationMatrix h;
  ForwardTrace trace;
};

// H = BN(Â (BN-act(Â (X W1) + b1)) W2 + b2). Batch statistics are taken over
// all nodes in both modes; eval mode simply does not retain the trace.
EncoderOutput encoder_forward(const EncoderConfig& config, const EncoderParams& params, const CsrMatrix& norm_adj,
                              const FeatureMatrix& features, ForwardMode mode);

// Exact gradients of sum(dH .* H) with respect to every parameter.
EncoderParams encoder_backward(const ForwardTrace& trace, const DenseMatrix& dH);

// tau * target + (1 - tau) * online, entry-wise.
EncoderParams ema_update(const EncoderParams& online, const EncoderParams& target, double tau);

// Directory of SGCLMAT1 tensors plus manifest.json with shapes and config.
void save_checkpoint(const std::filesystem::path& dir, const EncoderConfig& config, const EncoderParams& params);

struct Checkpoint {
  EncoderConfig config;
  EncoderParams params;
};
Checkpoint load_checkpoint(const std::filesystem::path& dir);

}  // namespace sgcl
