#include "sgcl/trainer.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <string>

#include "sgcl/csv.hpp"
#include "sgcl/diagnostics.hpp"
#include "sgcl/errors.hpp"

namespace sgcl {

std::string_view to_string(LossSign s) {
  return s == LossSign::MaximizeSimilarity ? "maximize_similarity" : "minimize_similarity";
}
std::string_view to_string(PredictorSource s) {
  return s == PredictorSource::PreviousTarget ? "previous_target" : "current_online";
}
std::string_view to_string(TrainMode m) { return m == TrainMode::Sgcl ? "sgcl" : "bgrl"; }

LossSign loss_sign_from_string(std::string_view s) {
  if (s == "maximize_similarity") return LossSign::MaximizeSimilarity;
  if (s == "minimize_similarity") return LossSign::MinimizeSimilarity;
  throw ConfigError("unknown loss_sign '" + std::string(s) + "'");
}
PredictorSource predictor_source_from_string(std::string_view s) {
  if (s == "previous_target") return PredictorSource::PreviousTarget;
  if (s == "current_online") return PredictorSource::CurrentOnline;
  throw ConfigError("unknown predictor_source '" + std::string(s) + "'");
}
TrainMode train_mode_from_string(std::string_view s) {
  if (s == "sgcl") return TrainMode::Sgcl;
  if (s == "bgrl") return TrainMode::Bgrl;
  throw ConfigError("unknown mode '" + std::string(s) + "'");
}

void TrainConfig::validate() const {
  if (epochs < 1) throw ConfigError("train: epochs must be >= 1");
  augment.validate();
  if (!(optimizer.learning_rate > 0.0)) throw ConfigError("train: learning_rate must be positive");
  if (!(optimizer.beta1 >= 0.0 && optimizer.beta1 < 1.0 && optimizer.beta2 >= 0.0 && optimizer.beta2 < 1.0)) {
    throw ConfigError("train: betas must lie in [0, 1)");
  }
  if (!(optimizer.eps > 0.0)) throw ConfigError("train: eps must be positive");
  if (!(optimizer.weight_decay >= 0.0)) throw ConfigError("train: weight_decay must be non-negative");
  if (mode == TrainMode::Bgrl && !(bgrl_tau >= 0.0 && bgrl_tau <= 1.0)) throw ConfigError("train: bgrl_tau must lie in [0, 1]");
  if (encoder.hidden_dim == 0 || encoder.out_dim == 0) throw ConfigError("train: encoder dimensions must be positive");
  if (predictor.variant == PredictorVariant::Mlp && predictor.mlp_hidden_dim == 0) {
    throw ConfigError("train: mlp predictor hidden dimension must be positive");
  }
  if (probe_every > 0) probe.validate();
}

void MetricsLog::write_csv(const std::filesystem::path& path, bool include_wall_time) const {
  CsvWriter w(path);
  w.row({"iter", "loss", "s_bar", "d_bar", "probe_acc", "wall_ms"});
  for (const auto& r : records) {
    w.row({std::to_string(r.iter), format_double(r.loss), format_double(r.s_bar), format_double(r.d_bar),
           r.probe_acc ? format_double(*r.probe_acc) : std::string(),
           include_wall_time ? format_double(r.wall_ms) : std::string()});
  }
}

namespace {

CosineLoss scaled_cosine_loss(const DenseMatrix& z, const DenseMatrix& target, LossSign sign, double scale) {
  if (!z.same_shape(target)) throw ShapeError("cosine loss: Z " + z.shape_string() + " vs target " + target.shape_string());
  const std::size_t n = z.rows();
  if (n == 0) throw ShapeError("cosine loss: empty input");
  // L = scale * (1 + dir * mean cos), dir = -1 when maximizing similarity.
  const double dir = sign == LossSign::MaximizeSimilarity ? -1.0 : 1.0;
  const double coef = scale * dir / static_cast<double>(n);
  CosineLoss out;
  out.grad = DenseMatrix(n, z.cols());
  double cos_sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto zi = z.row(i);
    const auto ti = target.row(i);
    const double nz = norm2(zi);
    const double nt = norm2(ti);
    if (nz < kNormGuard || nt < kNormGuard) {
      ++out.degenerate_rows;
      continue;
    }
    const double c = dot(zi, ti) / (nz * nt);
    cos_sum += c;
    auto g = out.grad.row(i);
    for (std::size_t j = 0; j < zi.size(); ++j) g[j] = coef * (ti[j] / (nz * nt) - c * zi[j] / (nz * nz));
  }
  out.loss = scale * (1.0 + dir * cos_sum / static_cast<double>(n));
  return out;
}

double elapsed_ms(std::chrono::steady_clock::time_point since) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - since).count();
}

bool probe_due(const TrainConfig& config, std::size_t t) {
  return config.probe_every > 0 && (t % config.probe_every == 0 || t == config.epochs);
}

std::optional<double> run_probe(const TrainState& state, const DatasetBundle& bundle, const TrainConfig& config,
                                std::size_t t) {
  if (!probe_due(config, t)) return std::nullopt;
  const auto h = final_embeddings(state.encoder_config, state.online_params, bundle);
  return fit_linear_probe(h, bundle.labels, bundle.num_classes, state.probe_split, config.probe).accuracy_test;
}

std::vector<ParamSlot> optimizer_slots(TrainState& state, const ObjectiveResult& obj) {
  std::vector<ParamSlot> slots;
  std::vector<const DenseMatrix*> grads;
  obj.encoder_grad.visit([&](std::string_view, const DenseMatrix& g) { grads.push_back(&g); });
  if (state.mlp_params) {
    obj.mlp_grad->visit([&](std::string_view, const DenseMatrix& g) { grads.push_back(&g); });
  }
  std::size_t i = 0;
  state.online_params.visit([&](std::string_view name, DenseMatrix& p) {
    slots.push_back({std::string(name), &p, grads[i++]});
  });
  if (state.mlp_params) {
    state.mlp_params->visit([&](std::string_view name, DenseMatrix& p) {
      slots.push_back({std::string(name), &p, grads[i++]});
    });
  }
  return slots;
}

void accumulate(ObjectiveResult& into, const ObjectiveResult& other) {
  into.loss += other.loss;
  into.degenerate_rows += other.degenerate_rows;
  std::vector<const DenseMatrix*> src;
  other.encoder_grad.visit([&](std::string_view, const DenseMatrix& g) { src.push_back(&g); });
  std::size_t i = 0;
  into.encoder_grad.visit([&](std::string_view, DenseMatrix& g) { g += *src[i++]; });
  if (into.mlp_grad) {
    src.clear();
    other.mlp_grad->visit([&](std::string_view, const DenseMatrix& g) { src.push_back(&g); });
    i = 0;
    into.mlp_grad->visit([&](std::string_view, DenseMatrix& g) { g += *src[i++]; });
  }
}

PredictorInput predictor_input(const TrainState& state, const TrainConfig& config, const DenseMatrix* fixed_p) {
  PredictorInput in;
  in.variant = config.predictor.variant;
  if (in.variant == PredictorVariant::Inferential) {
    if (config.predictor_source == PredictorSource::CurrentOnline) {
      in.p_from_online = true;
    } else {
      in.fixed_p = fixed_p;
    }
  } else if (in.variant == PredictorVariant::Mlp) {
    in.mlp = &*state.mlp_params;
  }
  return in;
}

DenseMatrix covariance_predictor(const RepresentationMatrix& source, std::size_t& degenerate) {
  const CenteredRows c = center_and_normalize(source);
  degenerate += c.degenerate_rows;
  return inferential_predictor(c.values);
}

}  // namespace

CosineLoss cosine_loss(const DenseMatrix& z, const DenseMatrix& target, LossSign sign) {
  return scaled_cosine_loss(z, target, sign, 1.0);
}

CosineLoss bgrl_loss(const DenseMatrix& z, const DenseMatrix& target, LossSign sign) {
  return scaled_cosine_loss(z, target, sign, 2.0);
}

ObjectiveResult online_objective(const EncoderConfig& config, const EncoderParams& params, const CsrMatrix& norm_adj,
                                 const FeatureMatrix& features, const RepresentationMatrix& target,
                                 const PredictorInput& predictor, LossSign sign, double loss_scale) {
  EncoderOutput enc = encoder_forward(config, params, norm_adj, features, ForwardMode::Train);
  ObjectiveResult res;
  DenseMatrix z;
  std::optional<MlpOutput> mlp_out;
  switch (predictor.variant) {
    case PredictorVariant::Inferential: {
      if (predictor.fixed_p) {
        res.predictor_matrix = *predictor.fixed_p;
      } else if (predictor.p_from_online) {
        res.predictor_matrix = covariance_predictor(enc.h, res.degenerate_rows);
      } else {
        throw UsageError("online_objective: inferential predictor without a covariance source");
      }
      z = predict(enc.h, *res.predictor_matrix);
      break;
    }
    case PredictorVariant::Identity:
      z = enc.h;
      break;
    case PredictorVariant::Mlp:
      if (!predictor.mlp) throw UsageError("online_objective: mlp predictor without parameters");
      mlp_out = mlp_predict_forward(*predictor.mlp, enc.h, predictor.mlp_activation);
      z = mlp_out->z;
      break;
  }

  CosineLoss cl = scaled_cosine_loss(z, target, sign, loss_scale);
  res.loss = cl.loss;
  res.degenerate_rows += cl.degenerate_rows;

  DenseMatrix dh;
  switch (predictor.variant) {
    case PredictorVariant::Inferential:
      dh = predict_backward(cl.grad, *res.predictor_matrix);
      break;
    case PredictorVariant::Identity:
      dh = std::move(cl.grad);
      break;
    case PredictorVariant::Mlp: {
      MlpGradients g = mlp_predict_backward(mlp_out->trace, cl.grad);
      res.mlp_grad = std::move(g.params);
      dh = std::move(g.dh);
      break;
    }
  }
  res.encoder_grad = encoder_backward(enc.trace, dh);
  res.online = std::move(enc.h);
  return res;
}

TrainState init_train_state(const DatasetBundle& bundle, const TrainConfig& config) {
  config.validate();
  bundle.validate();
  TrainState state;
  state.encoder_config = config.encoder;
  state.encoder_config.in_dim = bundle.features.cols();

  Rng init_rng(Rng::derive(config.seed, "init"));
  state.online_params = init_encoder(state.encoder_config, init_rng);
  if (config.predictor.variant == PredictorVariant::Mlp) {
    state.mlp_params = init_mlp(state.encoder_config.out_dim, config.predictor.mlp_hidden_dim, init_rng,
                                state.encoder_config.prelu_init);
  }
  if (config.mode == TrainMode::Bgrl) state.target_params = state.online_params;
  state.optimizer.hyper = config.optimizer;
  state.augment_rng = Rng(Rng::derive(config.seed, "augment"));
  if (config.probe_every > 0) state.probe_split = random_split(bundle.num_nodes(), {}, Rng::derive(config.seed, "probe"));

  if (config.mode == TrainMode::Sgcl) {
    // The first target comes from the randomly initialized encoder on its own
    // augmented view.
    state.prev_view = augment(bundle, config.augment, state.augment_rng);
    ++state.augment_calls;
    state.prev_target_repr = encoder_forward(state.encoder_config, state.online_params,
                                             normalized_adjacency(state.prev_view.graph), state.prev_view.features,
                                             ForwardMode::Eval)
                                 .h;
  }
  return state;
}

void sgcl_step(TrainState& state, const DatasetBundle& bundle, const TrainConfig& config,
               const StepObserver& observer) {
  if (config.mode != TrainMode::Sgcl) throw UsageError("sgcl_step: config mode is not sgcl");
  const auto start = std::chrono::steady_clock::now();
  const std::size_t t = state.iteration + 1;
  const std::size_t calls_before = state.augment_calls;

  AugmentedView view = augment(bundle, config.augment, state.augment_rng);
  ++state.augment_calls;
  const CsrMatrix adj = normalized_adjacency(view.graph);

  std::optional<DenseMatrix> p_prev;
  if (config.predictor.variant == PredictorVariant::Inferential &&
      config.predictor_source == PredictorSource::PreviousTarget) {
    p_prev = covariance_predictor(state.prev_target_repr, state.degenerate_rows);
  }
  const PredictorInput pin = predictor_input(state, config, p_prev ? &*p_prev : nullptr);
  ObjectiveResult obj = online_objective(state.encoder_config, state.online_params, adj, view.features,
                                         state.prev_target_repr, pin, config.loss_sign, 1.0);
  state.degenerate_rows += obj.degenerate_rows;
  if (!std::isfinite(obj.loss)) {
    throw NumericError("non-finite loss at iteration " + std::to_string(t), static_cast<long>(t));
  }

  MetricsRecord rec;
  rec.iter = t;
  rec.loss = obj.loss;
  try {
    const AlignmentStats al = alignment_stats(obj.online, state.prev_target_repr);
    rec.s_bar = al.s_bar;
    rec.d_bar = al.d_bar;
  } catch (const EmptyStatisticsError&) {
    rec.s_bar = rec.d_bar = std::numeric_limits<double>::quiet_NaN();
  }
  if (observer) observer(state, StepInfo{t, obj.online, state.prev_target_repr, obj.predictor_matrix, obj.loss});

  try {
    adamw_step(optimizer_slots(state, obj), state.optimizer);
  } catch (const NumericError& e) {
    throw NumericError(std::string(e.what()) + " at iteration " + std::to_string(t), static_cast<long>(t));
  }

  // Target for the next iteration: updated parameters on this iteration's view.
  state.prev_target_repr =
      encoder_forward(state.encoder_config, state.online_params, adj, view.features, ForwardMode::Eval).h;
  state.prev_view = std::move(view);
  state.iteration = t;
  if (state.augment_calls != calls_before + 1) throw std::logic_error("sgcl_step: expected exactly one augmentation");

  rec.probe_acc = run_probe(state, bundle, config, t);
  rec.wall_ms = elapsed_ms(start);
  state.metrics.records.push_back(rec);
}

void bgrl_step(TrainState& state, const DatasetBundle& bundle, const TrainConfig& config,
               const StepObserver& observer) {
  if (config.mode != TrainMode::Bgrl) throw UsageError("bgrl_step: config mode is not bgrl");
  if (!state.target_params) throw UsageError("bgrl_step: state has no target encoder");
  const auto start = std::chrono::steady_clock::now();
  const std::size_t t = state.iteration + 1;

  AugmentedView v1 = augment(bundle, config.augment, state.augment_rng);
  AugmentedView v2 = augment(bundle, config.augment, state.augment_rng);
  state.augment_calls += 2;
  const CsrMatrix adj1 = normalized_adjacency(v1.graph);
  const CsrMatrix adj2 = normalized_adjacency(v2.graph);

  const EncoderConfig& ec = state.encoder_config;
  const RepresentationMatrix h2 = encoder_forward(ec, *state.target_params, adj2, v2.features, ForwardMode::Eval).h;

  std::optional<DenseMatrix> p12;
  if (config.predictor.variant == PredictorVariant::Inferential &&
      config.predictor_source == PredictorSource::PreviousTarget) {
    p12 = covariance_predictor(h2, state.degenerate_rows);
  }
  ObjectiveResult obj = online_objective(ec, state.online_params, adj1, v1.features, h2,
                                         predictor_input(state, config, p12 ? &*p12 : nullptr), config.loss_sign, 2.0);

  if (config.bgrl_symmetrize) {
    const RepresentationMatrix h1_target =
        encoder_forward(ec, *state.target_params, adj1, v1.features, ForwardMode::Eval).h;
    std::optional<DenseMatrix> p21;
    if (p12) p21 = covariance_predictor(h1_target, state.degenerate_rows);
    const ObjectiveResult back =
        online_objective(ec, state.online_params, adj2, v2.features, h1_target,
                         predictor_input(state, config, p21 ? &*p21 : nullptr), config.loss_sign, 2.0);
    accumulate(obj, back);
  }
  state.degenerate_rows += obj.degenerate_rows;
  if (!std::isfinite(obj.loss)) {
    throw NumericError("non-finite loss at iteration " + std::to_string(t), static_cast<long>(t));
  }

  MetricsRecord rec;
  rec.iter = t;
  rec.loss = obj.loss;
  try {
    const AlignmentStats al = alignment_stats(obj.online, h2);
    rec.s_bar = al.s_bar;
    rec.d_bar = al.d_bar;
  } catch (const EmptyStatisticsError&) {
    rec.s_bar = rec.d_bar = std::numeric_limits<double>::quiet_NaN();
  }
  if (observer) observer(state, StepInfo{t, obj.online, h2, obj.predictor_matrix, obj.loss});

  try {
    adamw_step(optimizer_slots(state, obj), state.optimizer);
  } catch (const NumericError& e) {
    throw NumericError(std::string(e.what()) + " at iteration " + std::to_string(t), static_cast<long>(t));
  }
  state.target_params = ema_update(state.online_params, *state.target_params, config.bgrl_tau);

  state.prev_target_repr = h2;
  state.prev_view = std::move(v2);
  state.iteration = t;
  rec.probe_acc = run_probe(state, bundle, config, t);
  rec.wall_ms = elapsed_ms(start);
  state.metrics.records.push_back(rec);
}

TrainResult train(const DatasetBundle& bundle, const TrainConfig& config, const StepObserver& observer) {
  TrainState state = init_train_state(bundle, config);
  TrainResult res;
  res.initial_params = state.online_params;
  for (std::size_t e = 0; e < config.epochs; ++e) {
    if (config.mode == TrainMode::Sgcl) {
      sgcl_step(state, bundle, config, observer);
    } else {
      bgrl_step(state, bundle, config, observer);
    }
  }
  res.params = std::move(state.online_params);
  res.encoder_config = state.encoder_config;
  res.metrics = std::move(state.metrics);
  res.parameter_count = res.params.parameter_count() + (state.mlp_params ? state.mlp_params->parameter_count() : 0);
  res.degenerate_rows = state.degenerate_rows;
  return res;
}

}  // namespace sgcl
