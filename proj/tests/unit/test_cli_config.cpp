#include "doctest.h"
#include "commands.hpp"
#include "run_config.hpp"
#include "sgcl/errors.hpp"

using namespace sgcl;
using namespace sgcl::cli;
using nlohmann::json;

TEST_CASE("run config: defaults fill missing keys") {
  const RunConfig c = run_config_from_json(json::parse(R"({"dataset": {"sbm": {}}})"));
  CHECK(c.dataset.sbm.has_value());
  CHECK(c.train.epochs == 300);
  CHECK(c.train.optimizer.learning_rate == 5e-4);
  CHECK(c.train.encoder.hidden_dim == 256);
  CHECK(c.eval_splits == 10);
  CHECK_FALSE(c.record_wall_time);
}

TEST_CASE("run config: JSON round trip is a fixed point") {
  const json in = json::parse(R"({
    "dataset": {"sbm": {"nodes_per_community": 20, "feature_noise": 2.5}, "seed": 9},
    "train": {"epochs": 7, "loss_sign": "minimize_similarity", "mode": "bgrl", "bgrl_tau": 0.95,
              "predictor": {"variant": "mlp", "mlp_hidden_dim": 12}, "predictor_source": "current_online",
              "optimizer": {"learning_rate": 0.003, "weight_decay": 0.0},
              "encoder": {"hidden_dim": 9, "out_dim": 5, "activation": "relu", "use_batch_norm": false},
              "augment": {"p_e": 0.1, "p_f": 0.4}, "seed": 123456789012345, "probe_every": 3},
    "probe": {"l2_lambda": 0.01, "epochs": 50},
    "eval_splits": 4, "output_dir": "somewhere", "emit_plots": false})");
  const RunConfig c = run_config_from_json(in);
  CHECK(c.train.loss_sign == LossSign::MinimizeSimilarity);
  CHECK(c.train.mode == TrainMode::Bgrl);
  CHECK(c.train.predictor.variant == PredictorVariant::Mlp);
  CHECK(c.train.encoder.activation == Activation::Relu);
  CHECK(c.train.seed == 123456789012345ULL);
  CHECK(c.train.probe.l2_lambda == 0.01);
  CHECK(c.dataset.sbm->feature_noise == 2.5);
  const json out = to_json(c);
  CHECK(to_json(run_config_from_json(out)) == out);
}

TEST_CASE("run config: validation errors") {
  auto bad = [](const char* text) { return run_config_from_json(json::parse(text)); };
  CHECK_THROWS_AS(bad(R"({})"), ConfigError);
  CHECK_THROWS_AS(bad(R"({"dataset": {}})"), ConfigError);
  CHECK_THROWS_AS(bad(R"({"dataset": {"sbm": {}}, "bogus": 1})"), ConfigError);
  CHECK_THROWS_AS(bad(R"({"dataset": {"sbm": {"intra": 0.1}}})"), ConfigError);
  CHECK_THROWS_AS(bad(R"({"dataset": {"sbm": {}}, "train": {"epochs": "ten"}})"), ConfigError);
  CHECK_THROWS_AS(bad(R"({"dataset": {"sbm": {}}, "train": {"epochs": -1}})"), ConfigError);
  CHECK_THROWS_AS(bad(R"({"dataset": {"sbm": {}}, "train": {"augment": {"p_e": 1.0}}})"), ConfigError);
  CHECK_THROWS_AS(bad(R"({"dataset": {"sbm": {}}, "train": {"mode": "simclr"}})"), ConfigError);
  CHECK_THROWS_AS(bad(R"({"dataset": {"sbm": {}}, "eval_splits": 0})"), ConfigError);
  CHECK_THROWS_AS(bad(R"({"dataset": {"sbm": {}, "files": {"edges": "e", "features": "f", "labels": "l"}}})"),
                  ConfigError);
  CHECK_THROWS_AS(bad(R"({"dataset": {"files": {"edges": "e"}}})"), ConfigError);
}

TEST_CASE("dynamics config: generated inputs have unit rows and follow the seed") {
  DynamicsRunConfig c = dynamics_config_from_json(json::parse(R"({"rows": 16, "cols": 4, "seed": 2})"));
  const DenseMatrix h = c.resolved_input();
  CHECK(h.rows() == 16);
  for (std::size_t i = 0; i < 16; ++i) CHECK(norm2(h.row(i)) == doctest::Approx(1.0));
  CHECK(c.resolved_input() == h);
  DynamicsRunConfig other = c;
  other.seed = 3;
  CHECK_FALSE(other.resolved_input() == h);
  c.input_kind = "isotropic";
  const DenseMatrix iso = c.resolved_input();
  CHECK(iso(0, 0) == 1.0);
  CHECK(iso(1, 0) == -1.0);
  CHECK(iso(2, 1) == 1.0);
  c.rows = 10;
  CHECK_THROWS_AS(c.resolved_input(), ConfigError);
  CHECK_THROWS_AS(dynamics_config_from_json(json::parse(R"({"epsilon": 0})")), ConfigError);
  CHECK_THROWS_AS(dynamics_config_from_json(json::parse(R"({"learning_rate": -1})")), ConfigError);
  CHECK_THROWS_AS(dynamics_config_from_json(json::parse(R"({"input": [[1, 2], [3]]})")), ConfigError);
}

TEST_CASE("exit codes follow the error kind") {
  CHECK(exit_code_for(ConfigError("x")) == 2);
  CHECK(exit_code_for(IoError("x")) == 4);
  CHECK(exit_code_for(ParseError("f", 1, "x")) == 4);
  CHECK(exit_code_for(NumericError("x", 3)) == 3);
  CHECK(exit_code_for(DivergenceError("x", 1.0, 2)) == 5);
  CHECK(exit_code_for(std::runtime_error("x")) == 3);
}
