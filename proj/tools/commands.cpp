#include "commands.hpp"

#include <algorithm>
#include <chrono>
#include <ostream>

#include "run_config.hpp"
#include "sgcl/csv.hpp"
#include "sgcl/errors.hpp"
#include "sgcl/evaluator.hpp"
#include "sgcl/predictor.hpp"
#include "svg.hpp"

namespace sgcl::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kManifestFormat = "sgcl-run-1";

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw IoError("cannot create directory " + dir.string());
}

// The manifest is the resolved config plus a "run" block of facts about the
// run; the loader ignores "run", so a manifest is itself a valid config.
void write_manifest(const fs::path& dir, json config, const std::string& command, json facts) {
  facts["format"] = kManifestFormat;
  facts["command"] = command;
  config["run"] = std::move(facts);
  write_json_file(dir / "manifest.json", config);
}

json strip_run_block(json j) {
  if (j.is_object()) j.erase("run");
  return j;
}

void write_probe_report(const fs::path& path, const SplitEvaluation& ev) {
  CsvWriter w(path);
  w.row({"split_seed", "acc_train", "acc_val", "acc_test"});
  for (const auto& r : ev.reports) {
    w.row({std::to_string(r.split_seed), format_double(r.acc_train), format_double(r.acc_val),
           format_double(r.acc_test)});
  }
}

void write_training_plots(const fs::path& dir, const MetricsLog& log) {
  Series loss{"loss", {}, {}}, s_bar{"s_bar", {}, {}}, d_bar{"d_bar", {}, {}}, acc{"probe accuracy", {}, {}};
  for (const auto& r : log.records) {
    const double it = static_cast<double>(r.iter);
    loss.x.push_back(it), loss.y.push_back(r.loss);
    s_bar.x.push_back(it), s_bar.y.push_back(r.s_bar);
    d_bar.x.push_back(it), d_bar.y.push_back(r.d_bar);
    if (r.probe_acc) acc.x.push_back(it), acc.y.push_back(*r.probe_acc);
  }
  write_text_file(dir / "loss.svg", render_svg({"Training loss", "iteration", "loss", {loss}}));
  write_text_file(dir / "similarity.svg",
                  render_svg({"Online vs. previous target", "iteration", "mean cosine", {s_bar}}));
  write_text_file(dir / "distance.svg",
                  render_svg({"Online vs. previous target", "iteration", "mean distance", {d_bar}}));
  if (!acc.x.empty()) {
    write_text_file(dir / "accuracy.svg", render_svg({"Linear probe accuracy", "iteration", "accuracy", {acc}}));
  }
}

struct TrainOutcome {
  TrainResult result;
  SplitEvaluation evaluation;
};

TrainOutcome train_and_evaluate(const DatasetBundle& bundle, const RunConfig& cfg, const fs::path& dir,
                                std::ostream& log) {
  ensure_dir(dir);
  const auto t0 = std::chrono::steady_clock::now();
  TrainOutcome out{train(bundle, cfg.train), {}};
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  out.result.metrics.write_csv(dir / "metrics.csv", cfg.record_wall_time);
  const RepresentationMatrix h = final_embeddings(out.result.encoder_config, out.result.params, bundle);
  out.evaluation = evaluate_over_splits(h, bundle.labels, bundle.num_classes, cfg.eval_splits, cfg.train.probe);
  write_probe_report(dir / "probe_report.csv", out.evaluation);
  log << "  trained " << cfg.train.epochs << " iterations in " << secs << " s, final loss "
      << out.result.metrics.records.back().loss << ", test accuracy " << out.evaluation.mean_test << " +- "
      << out.evaluation.std_test << "\n";
  return out;
}

RunConfig load_run_config(const fs::path& path) { return run_config_from_json(strip_run_block(read_json_file(path))); }

}  // namespace

int exit_code_for(const std::exception& e) {
  const auto* err = dynamic_cast<const Error*>(&e);
  if (!err) return 3;
  switch (err->kind()) {
    case ErrorKind::Config:
    case ErrorKind::Usage:
    case ErrorKind::Range:
    case ErrorKind::Shape:
      return 2;
    case ErrorKind::Io:
    case ErrorKind::Parse:
    case ErrorKind::Consistency:
      return 4;
    case ErrorKind::Divergence:
      return 5;
    case ErrorKind::Numeric:
    case ErrorKind::EmptyStatistics:
    case ErrorKind::DegenerateProbe:
      return 3;
  }
  return 3;
}

int cmd_train(const fs::path& config_path, std::ostream& log) {
  const RunConfig cfg = load_run_config(config_path);
  ensure_dir(cfg.output_dir);
  const DatasetBundle bundle = cfg.dataset.load();
  log << "train: " << bundle.num_nodes() << " nodes, " << bundle.graph.num_entries() / 2 << " edges, "
      << bundle.features.cols() << " features, mode " << to_string(cfg.train.mode) << ", predictor "
      << to_string(cfg.train.predictor.variant) << "\n";
  const TrainOutcome out = train_and_evaluate(bundle, cfg, cfg.output_dir, log);
  save_checkpoint(cfg.output_dir / "checkpoint", out.result.encoder_config, out.result.params);
  save_checkpoint(cfg.output_dir / "checkpoint_init", out.result.encoder_config, out.result.initial_params);
  if (cfg.emit_plots) write_training_plots(cfg.output_dir, out.result.metrics);
  write_manifest(cfg.output_dir, to_json(cfg), "train",
                 {{"num_nodes", bundle.num_nodes()},
                  {"parameter_count", out.result.parameter_count},
                  {"degenerate_rows", out.result.degenerate_rows},
                  {"acc_test_mean", out.evaluation.mean_test},
                  {"acc_test_std", out.evaluation.std_test}});
  return 0;
}

int cmd_ablate(const fs::path& config_path, std::ostream& log) {
  const RunConfig base = load_run_config(config_path);
  ensure_dir(base.output_dir);
  const DatasetBundle bundle = base.dataset.load();

  struct Mode {
    TrainMode mode;
    double tau;
    std::string name;
  };
  struct Pred {
    PredictorVariant variant;
    PredictorSource source;
    std::string name;
  };
  const std::vector<Mode> modes = {{TrainMode::Sgcl, 0.0, "sgcl"},
                                   {TrainMode::Bgrl, 0.0, "bgrl_tau0"},
                                   {TrainMode::Bgrl, 0.95, "bgrl_tau0.95"},
                                   {TrainMode::Bgrl, 0.99, "bgrl_tau0.99"}};
  const std::vector<Pred> preds = {{PredictorVariant::Inferential, PredictorSource::PreviousTarget, "inferential_prev"},
                                   {PredictorVariant::Inferential, PredictorSource::CurrentOnline, "inferential_cur"},
                                   {PredictorVariant::Mlp, PredictorSource::PreviousTarget, "mlp"},
                                   {PredictorVariant::Identity, PredictorSource::PreviousTarget, "identity"}};

  CsvWriter table(base.output_dir / "ablation.csv");
  table.row({"mode", "bgrl_tau", "predictor", "predictor_source", "acc_test_mean", "acc_test_std", "acc_val_mean",
             "final_loss", "cell_dir"});
  json cells = json::array();
  for (const Mode& m : modes) {
    for (const Pred& p : preds) {
      RunConfig cfg = base;
      cfg.train.mode = m.mode;
      cfg.train.bgrl_tau = m.tau;
      cfg.train.predictor.variant = p.variant;
      cfg.train.predictor_source = p.source;
      const std::string cell = m.name + "__" + p.name;
      cfg.output_dir = base.output_dir / "cells" / cell;
      log << "ablate: " << cell << "\n";
      const TrainOutcome out = train_and_evaluate(bundle, cfg, cfg.output_dir, log);
      double val = 0.0;
      for (const auto& r : out.evaluation.reports) val += r.acc_val / static_cast<double>(out.evaluation.reports.size());
      table.row({std::string(to_string(m.mode)), m.mode == TrainMode::Bgrl ? format_double(m.tau) : std::string(),
                 std::string(to_string(p.variant)),
                 p.variant == PredictorVariant::Inferential ? std::string(to_string(p.source)) : std::string(),
                 format_double(out.evaluation.mean_test), format_double(out.evaluation.std_test), format_double(val),
                 format_double(out.result.metrics.records.back().loss), "cells/" + cell});
      // Each cell carries its own manifest so it can be rerun with `train`.
      write_manifest(cfg.output_dir, to_json(cfg), "train", {{"ablation_cell", cell}});
      cells.push_back(cell);
    }
  }
  write_manifest(base.output_dir, to_json(base), "ablate", {{"cells", cells}});
  return 0;
}

int cmd_diagnose(const fs::path& checkpoint_dir, const fs::path& config_path, std::ostream& log) {
  const Checkpoint ckpt = load_checkpoint(checkpoint_dir);
  const RunConfig cfg = load_run_config(config_path);
  ensure_dir(cfg.output_dir);
  const DatasetBundle bundle = cfg.dataset.load();
  if (ckpt.config.in_dim != bundle.features.cols()) {
    throw ConfigError("checkpoint expects " + std::to_string(ckpt.config.in_dim) + " input features, dataset has " +
                      std::to_string(bundle.features.cols()));
  }
  const RepresentationMatrix h = final_embeddings(ckpt.config, ckpt.params, bundle);

  // Alignment between the clean-graph representation and one augmented view.
  Rng rng(Rng::derive(cfg.train.seed, "diagnose"));
  const AugmentedView view = augment(bundle, cfg.train.augment, rng);
  const RepresentationMatrix hv =
      encoder_forward(ckpt.config, ckpt.params, normalized_adjacency(view.graph), view.features, ForwardMode::Eval).h;
  const AlignmentStats align = alignment_stats(h, hv);
  {
    CsvWriter w(cfg.output_dir / "alignment.csv");
    w.row({"node", "cosine", "distance", "length_ratio"});
    for (std::size_t k = 0; k < align.nodes.size(); ++k) {
      w.row({std::to_string(align.nodes[k]), format_double(align.cosines[k]), format_double(align.distances[k]),
             format_double(align.length_ratios[k])});
    }
  }

  Rng sample_rng(Rng::derive(cfg.train.seed, "pearson"));
  const PearsonResult pearson = pearson_offdiag(h, 512, sample_rng, true);
  {
    CsvWriter w(cfg.output_dir / "pearson.csv");
    std::vector<std::string> header{"node"};
    for (std::size_t n : pearson.nodes) header.push_back(std::to_string(n));
    w.row(header);
    for (std::size_t i = 0; i < pearson.nodes.size(); ++i) {
      std::vector<std::string> cells{std::to_string(pearson.nodes[i])};
      for (std::size_t j = 0; j < pearson.nodes.size(); ++j) cells.push_back(format_double((*pearson.matrix)(i, j)));
      w.row(cells);
    }
  }
  if (cfg.emit_plots) {
    write_text_file(cfg.output_dir / "pearson_heatmap.svg",
                    render_heatmap_svg(*pearson.matrix, "Pearson correlation between node representations", -1.0, 1.0));
  }

  const DenseMatrix p = inferential_predictor(center_and_normalize(h).values);
  const EigenResidualReport residuals = eigen_alignment_residual(p, h);
  {
    CsvWriter w(cfg.output_dir / "eigen_residuals.csv");
    w.row({"node", "rayleigh_quotient", "residual"});
    for (const auto& r : residuals.rows) {
      w.row({std::to_string(r.node), format_double(r.lambda), format_double(r.residual)});
    }
  }

  const json summary = {{"checkpoint", checkpoint_dir.string()},
                        {"s_bar", align.s_bar},
                        {"d_bar", align.d_bar},
                        {"alignment_degenerate_rows", align.degenerate_rows},
                        {"pearson_mean_abs_offdiag", pearson.mean_abs_offdiag},
                        {"pearson_nodes", pearson.nodes.size()},
                        {"median_eigen_residual", residuals.median_residual()},
                        {"residual_degenerate_rows", residuals.degenerate_rows}};
  write_json_file(cfg.output_dir / "diagnostics.json", summary);
  log << "diagnose: s_bar " << align.s_bar << ", d_bar " << align.d_bar << ", mean |pearson| "
      << pearson.mean_abs_offdiag << ", median residual " << residuals.median_residual() << "\n";
  return 0;
}

int cmd_dynamics(const fs::path& config_path, std::ostream& log) {
  const DynamicsRunConfig cfg = dynamics_config_from_json(strip_run_block(read_json_file(config_path)));
  ensure_dir(cfg.output_dir);
  TsDynamicsConfig dyn = cfg.dynamics;
  dyn.input = cfg.resolved_input();
  write_manifest(cfg.output_dir, to_json(cfg), "dynamics", json::object());
  const TsResult r = ts_simulate(dyn);
  const std::size_t d = r.teacher_spectrum.size();

  std::vector<std::string> header{"step", "rel_distance", "vector_deviation"};
  for (std::size_t k = 0; k < d; ++k) header.push_back("sv_" + std::to_string(k));
  {
    CsvWriter w(cfg.output_dir / "trajectory.csv");
    w.row(header);
    for (const TsPoint& pt : r.trajectory) {
      std::vector<std::string> cells{std::to_string(pt.step), format_double(pt.rel_distance),
                                     format_double(pt.vector_deviation)};
      for (double s : pt.singular_values) cells.push_back(format_double(s));
      w.row(cells);
    }
  }
  // Continuous-time logistic law from s(0) = epsilon, evaluated at t = lr * step.
  std::vector<std::vector<double>> closed(d);
  {
    CsvWriter w(cfg.output_dir / "closed_form.csv");
    std::vector<std::string> h{"step", "time"};
    for (std::size_t k = 0; k < d; ++k) h.push_back("sv_" + std::to_string(k));
    w.row(h);
    for (const TsPoint& pt : r.trajectory) {
      const double t = dyn.learning_rate * static_cast<double>(pt.step);
      std::vector<std::string> cells{std::to_string(pt.step), format_double(t)};
      for (std::size_t k = 0; k < d; ++k) {
        closed[k].push_back(ts_closed_form_from(r.teacher_spectrum[k], 1.0, t, dyn.epsilon));
        cells.push_back(format_double(closed[k].back()));
      }
      w.row(cells);
    }
  }
  if (cfg.emit_plots) {
    LineChart chart{"Singular values: simulation vs closed form", "step", "singular value", {}, true};
    std::vector<double> steps;
    for (const TsPoint& pt : r.trajectory) steps.push_back(static_cast<double>(pt.step));
    for (std::size_t k = 0; k < d; ++k) {
      Series sim{"sim " + std::to_string(k), steps, {}};
      for (const TsPoint& pt : r.trajectory) sim.y.push_back(pt.singular_values[k]);
      chart.series.push_back(std::move(sim));
      chart.series.push_back({"closed " + std::to_string(k), steps, closed[k], true});
    }
    // Keep the legend readable for wide inputs.
    if (chart.series.size() > 8) chart.series.resize(8);
    write_text_file(cfg.output_dir / "dynamics_overlay.svg", render_svg(chart));
  }
  log << "dynamics: final rel_distance " << r.trajectory.back().rel_distance << ", max vector deviation "
      << r.max_vector_deviation << "\n";
  return 0;
}

}  // namespace sgcl::cli
