#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string_view>
#include <vector>

#include "sgcl/augment.hpp"
#include "sgcl/encoder.hpp"
#include "sgcl/evaluator.hpp"
#include "sgcl/numerics.hpp"
#include "sgcl/predictor.hpp"

namespace sgcl {

enum class LossSign { MaximizeSimilarity, MinimizeSimilarity };
enum class PredictorSource { PreviousTarget, CurrentOnline };
enum class TrainMode { Sgcl, Bgrl };

std::string_view to_string(LossSign s);
std::string_view to_string(PredictorSource s);
std::string_view to_string(TrainMode m);
LossSign loss_sign_from_string(std::string_view s);
PredictorSource predictor_source_from_string(std::string_view s);
TrainMode train_mode_from_string(std::string_view s);

struct TrainConfig {
  std::size_t epochs = 300;
  AugmentConfig augment{0.3, 0.2};
  AdamHyper optimizer;
  LossSign loss_sign = LossSign::MaximizeSimilarity;
  PredictorKind predictor;
  PredictorSource predictor_source = PredictorSource::PreviousTarget;
  TrainMode mode = TrainMode::Sgcl;
  double bgrl_tau = 0.99;
  bool bgrl_symmetrize = false;
  std::uint64_t seed = 0;
  EncoderConfig encoder;        // in_dim is taken from the dataset
  std::size_t probe_every = 25; // 0 disables periodic probing
  ProbeConfig probe;

  void validate() const;
};

struct MetricsRecord {
  std::size_t iter = 0;
  double loss = 0.0;
  double s_bar = 0.0;
  double d_bar = 0.0;
  std::optional<double> probe_acc;
  double wall_ms = 0.0;
};

struct MetricsLog {
  std::vector<MetricsRecord> records;

  // Header "iter,loss,s_bar,d_bar,probe_acc,wall_ms". Wall time is left empty
  // unless include_wall_time is set, so that reruns compare byte-for-byte.
  void write_csv(const std::filesystem::path& path, bool include_wall_time) const;
};

struct CosineLoss {
  double loss = 0.0;
  DenseMatrix grad;  // dL/dZ
  std::size_t degenerate_rows = 0;
};

// Maximize: 1 - mean cos(Z_i, T_i). Minimize: 1 + mean cos. Rows where either
// side is below kNormGuard contribute cos = 0 and no gradient.
CosineLoss cosine_loss(const DenseMatrix& z, const DenseMatrix& target, LossSign sign);

// 2 - 2 mean cos (or 2 + 2 mean cos when minimizing).
CosineLoss bgrl_loss(const DenseMatrix& z, const DenseMatrix& target, LossSign sign);

// How the online branch maps H to the prediction Z.
struct PredictorInput {
  PredictorVariant variant = PredictorVariant::Inferential;
  const DenseMatrix* fixed_p = nullptr;  // inferential, built from a stop-gradient source
  bool p_from_online = false;            // inferential, built from detached H of this pass
  const MlpParams* mlp = nullptr;
  Activation mlp_activation = Activation::Prelu;
};

struct ObjectiveResult {
  double loss = 0.0;
  EncoderParams encoder_grad;
  std::optional<MlpParams> mlp_grad;
  RepresentationMatrix online;
  std::optional<DenseMatrix> predictor_matrix;
  std::size_t degenerate_rows = 0;
};

// Loss and exact gradients of one online branch: encoder -> predictor ->
// cosine objective against a constant target. loss_scale is 1 for the
// single-view objective and 2 for the two-view baseline.
ObjectiveResult online_objective(const EncoderConfig& config, const EncoderParams& params, const CsrMatrix& norm_adj,
                                 const FeatureMatrix& features, const RepresentationMatrix& target,
                                 const PredictorInput& predictor, LossSign sign, double loss_scale);

struct TrainState {
  EncoderParams online_params;
  std::optional<EncoderParams> target_params;  // two-view baseline only
  std::optional<MlpParams> mlp_params;         // mlp predictor only
  OptimState optimizer;
  RepresentationMatrix prev_target_repr;       // H'_{t-1}
  AugmentedView prev_view;
  std::size_t iteration = 0;
  MetricsLog metrics;
  Rng augment_rng{0};
  std::size_t augment_calls = 0;
  std::size_t degenerate_rows = 0;
  EncoderConfig encoder_config;
  SplitSpec probe_split;
};

// What a step saw, for diagnostics hooks.
struct StepInfo {
  std::size_t iteration;
  const RepresentationMatrix& online;             // H_t (or H̃1)
  const RepresentationMatrix& target;             // H'_{t-1} (or H̃2)
  const std::optional<DenseMatrix>& predictor;    // P_t when inferential
  double loss;
};
using StepObserver = std::function<void(const TrainState&, const StepInfo&)>;

// Glorot initialization and the first target view / representation.
TrainState init_train_state(const DatasetBundle& bundle, const TrainConfig& config);

// One iteration of the single-view, single-encoder loop.
void sgcl_step(TrainState& state, const DatasetBundle& bundle, const TrainConfig& config,
               const StepObserver& observer = nullptr);

// One iteration of the two-view, EMA-target baseline.
void bgrl_step(TrainState& state, const DatasetBundle& bundle, const TrainConfig& config,
               const StepObserver& observer = nullptr);

struct TrainResult {
  EncoderParams params;
  EncoderParams initial_params;
  EncoderConfig encoder_config;
  MetricsLog metrics;
  std::size_t parameter_count = 0;  // encoder + trainable predictor
  std::size_t degenerate_rows = 0;
};

TrainResult train(const DatasetBundle& bundle, const TrainConfig& config, const StepObserver& observer = nullptr);

}  // namespace sgcl
