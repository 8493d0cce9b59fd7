#include "run_config.hpp"

#include <fstream>
#include <set>

#include "sgcl/errors.hpp"
#include "sgcl/predictor.hpp"

namespace sgcl::cli {

using nlohmann::json;

namespace {

// Reads fields out of one JSON object and rejects keys nobody asked for.
class ObjectReader {
 public:
  ObjectReader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_ + ": expected an object");
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  const json& raw(const std::string& key) {
    seen_.insert(key);
    return j_.at(key);
  }

  template <class T>
  void get(const std::string& key, T& out) {
    if (!j_.contains(key)) return;
    seen_.insert(key);
    const json& v = j_.at(key);
    try {
      if constexpr (std::is_same_v<T, bool>) {
        if (!v.is_boolean()) throw ConfigError("");
        out = v.get<bool>();
      } else if constexpr (std::is_integral_v<T>) {
        if (!v.is_number_integer()) throw ConfigError("");
        if constexpr (std::is_unsigned_v<T>) {
          if (v.is_number_integer() && !v.is_number_unsigned() && v.get<std::int64_t>() < 0) throw ConfigError("");
        }
        out = v.get<T>();
      } else if constexpr (std::is_floating_point_v<T>) {
        if (!v.is_number()) throw ConfigError("");
        out = v.get<T>();
      } else {
        if (!v.is_string()) throw ConfigError("");
        out = v.get<std::string>();
      }
    } catch (const ConfigError&) {
      throw ConfigError(path_ + "." + key + ": wrong type (" + std::string(v.type_name()) + ")");
    }
  }

  std::string path(const std::string& key) const { return path_ + "." + key; }

  void finish() const {
    for (const auto& [key, value] : j_.items()) {
      if (!seen_.count(key)) throw ConfigError(path_ + ": unknown key '" + key + "'");
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

template <class E, class Parse>
void get_enum(ObjectReader& r, const std::string& key, E& out, Parse parse) {
  std::string s;
  if (!r.has(key)) return;
  r.get(key, s);
  out = parse(s);
}

SbmConfig sbm_from_json(const json& j, const std::string& path) {
  SbmConfig c;
  ObjectReader r(j, path);
  r.get("num_communities", c.num_communities);
  r.get("nodes_per_community", c.nodes_per_community);
  r.get("intra_prob", c.intra_prob);
  r.get("inter_prob", c.inter_prob);
  r.get("feature_dim", c.feature_dim);
  r.get("feature_signal", c.feature_signal);
  r.get("feature_noise", c.feature_noise);
  r.finish();
  return c;
}

json to_json(const SbmConfig& c) {
  return {{"num_communities", c.num_communities}, {"nodes_per_community", c.nodes_per_community},
          {"intra_prob", c.intra_prob},           {"inter_prob", c.inter_prob},
          {"feature_dim", c.feature_dim},         {"feature_signal", c.feature_signal},
          {"feature_noise", c.feature_noise}};
}

ProbeConfig probe_from_json(const json& j) {
  ProbeConfig c;
  ObjectReader r(j, "probe");
  r.get("l2_lambda", c.l2_lambda);
  r.get("epochs", c.epochs);
  r.get("learning_rate", c.learning_rate);
  r.get("seed", c.seed);
  r.finish();
  return c;
}

json to_json(const ProbeConfig& c) {
  return {{"l2_lambda", c.l2_lambda}, {"epochs", c.epochs}, {"learning_rate", c.learning_rate}, {"seed", c.seed}};
}

TrainConfig train_from_json(const json& j) {
  TrainConfig c;
  ObjectReader r(j, "train");
  r.get("epochs", c.epochs);
  if (r.has("augment")) {
    ObjectReader a(r.raw("augment"), r.path("augment"));
    a.get("p_e", c.augment.p_e);
    a.get("p_f", c.augment.p_f);
    a.finish();
  }
  if (r.has("optimizer")) {
    ObjectReader o(r.raw("optimizer"), r.path("optimizer"));
    o.get("learning_rate", c.optimizer.learning_rate);
    o.get("beta1", c.optimizer.beta1);
    o.get("beta2", c.optimizer.beta2);
    o.get("eps", c.optimizer.eps);
    o.get("weight_decay", c.optimizer.weight_decay);
    o.finish();
  }
  get_enum(r, "loss_sign", c.loss_sign, loss_sign_from_string);
  if (r.has("predictor")) {
    ObjectReader p(r.raw("predictor"), r.path("predictor"));
    get_enum(p, "variant", c.predictor.variant, predictor_variant_from_string);
    p.get("mlp_hidden_dim", c.predictor.mlp_hidden_dim);
    p.finish();
  }
  get_enum(r, "predictor_source", c.predictor_source, predictor_source_from_string);
  get_enum(r, "mode", c.mode, train_mode_from_string);
  r.get("bgrl_tau", c.bgrl_tau);
  r.get("bgrl_symmetrize", c.bgrl_symmetrize);
  r.get("seed", c.seed);
  if (r.has("encoder")) {
    ObjectReader e(r.raw("encoder"), r.path("encoder"));
    e.get("hidden_dim", c.encoder.hidden_dim);
    e.get("out_dim", c.encoder.out_dim);
    e.get("use_batch_norm", c.encoder.use_batch_norm);
    get_enum(e, "activation", c.encoder.activation, activation_from_string);
    e.get("bn_eps", c.encoder.bn_eps);
    e.get("prelu_init", c.encoder.prelu_init);
    e.finish();
  }
  r.get("probe_every", c.probe_every);
  r.finish();
  return c;
}

json to_json(const TrainConfig& c) {
  return {
      {"epochs", c.epochs},
      {"augment", {{"p_e", c.augment.p_e}, {"p_f", c.augment.p_f}}},
      {"optimizer",
       {{"learning_rate", c.optimizer.learning_rate},
        {"beta1", c.optimizer.beta1},
        {"beta2", c.optimizer.beta2},
        {"eps", c.optimizer.eps},
        {"weight_decay", c.optimizer.weight_decay}}},
      {"loss_sign", to_string(c.loss_sign)},
      {"predictor", {{"variant", to_string(c.predictor.variant)}, {"mlp_hidden_dim", c.predictor.mlp_hidden_dim}}},
      {"predictor_source", to_string(c.predictor_source)},
      {"mode", to_string(c.mode)},
      {"bgrl_tau", c.bgrl_tau},
      {"bgrl_symmetrize", c.bgrl_symmetrize},
      {"seed", c.seed},
      {"encoder",
       {{"hidden_dim", c.encoder.hidden_dim},
        {"out_dim", c.encoder.out_dim},
        {"use_batch_norm", c.encoder.use_batch_norm},
        {"activation", to_string(c.encoder.activation)},
        {"bn_eps", c.encoder.bn_eps},
        {"prelu_init", c.encoder.prelu_init}}},
      {"probe_every", c.probe_every},
  };
}

DenseMatrix matrix_from_json(const json& j, const std::string& path) {
  if (!j.is_array() || j.empty()) throw ConfigError(path + ": expected a non-empty array of rows");
  const std::size_t cols = j.front().is_array() ? j.front().size() : 0;
  if (cols == 0) throw ConfigError(path + ": rows must be non-empty arrays");
  DenseMatrix m(j.size(), cols);
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_array() || j[i].size() != cols) throw ConfigError(path + ": ragged row " + std::to_string(i));
    for (std::size_t k = 0; k < cols; ++k) {
      if (!j[i][k].is_number()) throw ConfigError(path + ": non-numeric entry in row " + std::to_string(i));
      m(i, k) = j[i][k].get<double>();
    }
  }
  return m;
}

}  // namespace

DatasetBundle DatasetSource::load() const {
  if (sbm) return generate_sbm(*sbm, seed);
  return load_dataset(files->edges, files->features, files->labels);
}

void RunConfig::validate() const {
  if (dataset.sbm.has_value() == dataset.files.has_value()) {
    throw ConfigError("dataset: exactly one of 'sbm' or 'files' is required");
  }
  if (dataset.sbm) dataset.sbm->validate();
  if (eval_splits == 0) throw ConfigError("eval_splits must be at least 1");
  if (output_dir.empty()) throw ConfigError("output_dir must be set");
  train.validate();
}

RunConfig run_config_from_json(const json& j) {
  RunConfig c;
  ObjectReader r(j, "config");
  if (!r.has("dataset")) throw ConfigError("config: missing 'dataset'");
  {
    ObjectReader d(r.raw("dataset"), "dataset");
    d.get("seed", c.dataset.seed);
    if (d.has("sbm")) c.dataset.sbm = sbm_from_json(d.raw("sbm"), "dataset.sbm");
    if (d.has("files")) {
      ObjectReader f(d.raw("files"), "dataset.files");
      DatasetFiles files;
      std::string edges, features, labels;
      f.get("edges", edges);
      f.get("features", features);
      f.get("labels", labels);
      f.finish();
      if (edges.empty() || features.empty() || labels.empty()) {
        throw ConfigError("dataset.files: 'edges', 'features' and 'labels' are required");
      }
      c.dataset.files = DatasetFiles{edges, features, labels};
    }
    d.finish();
  }
  if (r.has("train")) c.train = train_from_json(r.raw("train"));
  if (r.has("probe")) c.train.probe = probe_from_json(r.raw("probe"));
  r.get("eval_splits", c.eval_splits);
  std::string out = c.output_dir.string();
  r.get("output_dir", out);
  c.output_dir = out;
  r.get("emit_plots", c.emit_plots);
  r.get("record_wall_time", c.record_wall_time);
  r.finish();
  c.validate();
  return c;
}

json to_json(const RunConfig& c) {
  json dataset = {{"seed", c.dataset.seed}};
  if (c.dataset.sbm) dataset["sbm"] = to_json(*c.dataset.sbm);
  if (c.dataset.files) {
    dataset["files"] = {{"edges", c.dataset.files->edges.string()},
                        {"features", c.dataset.files->features.string()},
                        {"labels", c.dataset.files->labels.string()}};
  }
  return {{"dataset", dataset},
          {"train", to_json(c.train)},
          {"probe", to_json(c.train.probe)},
          {"eval_splits", c.eval_splits},
          {"output_dir", c.output_dir.string()},
          {"emit_plots", c.emit_plots},
          {"record_wall_time", c.record_wall_time}};
}

DenseMatrix DynamicsRunConfig::resolved_input() const {
  if (input) return center_and_normalize(*input).values;
  if (rows < 2 || cols == 0) throw ConfigError("dynamics: need rows >= 2 and cols >= 1");
  if (input_kind == "isotropic") {
    // Rows are +e_j and -e_j in turn: centered, unit norm, equal spectrum.
    if (rows % (2 * cols) != 0) throw ConfigError("dynamics: isotropic input needs rows divisible by 2 * cols");
    DenseMatrix h(rows, cols);
    for (std::size_t i = 0; i < rows; ++i) h(i, (i / 2) % cols) = i % 2 == 0 ? 1.0 : -1.0;
    return h;
  }
  if (input_kind != "random") throw ConfigError("dynamics: unknown input_kind '" + input_kind + "'");
  Rng rng(seed);
  DenseMatrix h(rows, cols);
  for (double& v : h.values()) v = rng.normal();
  return center_and_normalize(h).values;
}

DynamicsRunConfig dynamics_config_from_json(const json& j) {
  DynamicsRunConfig c;
  ObjectReader r(j, "config");
  if (r.has("input")) c.input = matrix_from_json(r.raw("input"), "input");
  r.get("rows", c.rows);
  r.get("cols", c.cols);
  r.get("seed", c.seed);
  r.get("input_kind", c.input_kind);
  r.get("epsilon", c.dynamics.epsilon);
  r.get("learning_rate", c.dynamics.learning_rate);
  r.get("steps", c.dynamics.steps);
  r.get("record_every", c.dynamics.record_every);
  std::string out = c.output_dir.string();
  r.get("output_dir", out);
  c.output_dir = out;
  r.get("emit_plots", c.emit_plots);
  r.finish();
  if (!(c.dynamics.epsilon > 0.0)) throw ConfigError("epsilon must be positive");
  if (!(c.dynamics.learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
  if (c.dynamics.steps == 0) throw ConfigError("steps must be at least 1");
  if (c.dynamics.record_every == 0) throw ConfigError("record_every must be at least 1");
  if (c.output_dir.empty()) throw ConfigError("output_dir must be set");
  return c;
}

json to_json(const DynamicsRunConfig& c) {
  json j = {{"rows", c.rows},
            {"cols", c.cols},
            {"seed", c.seed},
            {"input_kind", c.input_kind},
            {"epsilon", c.dynamics.epsilon},
            {"learning_rate", c.dynamics.learning_rate},
            {"steps", c.dynamics.steps},
            {"record_every", c.dynamics.record_every},
            {"output_dir", c.output_dir.string()},
            {"emit_plots", c.emit_plots}};
  if (c.input) {
    json rows = json::array();
    for (std::size_t i = 0; i < c.input->rows(); ++i) {
      const auto row = c.input->row(i);
      rows.push_back(std::vector<double>(row.begin(), row.end()));
    }
    j["input"] = rows;
  }
  return j;
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot read config " + path.string());
  try {
    return json::parse(is);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

void write_json_file(const std::filesystem::path& path, const json& j) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  os << j.dump(2) << '\n';
  if (!os) throw IoError("write failed: " + path.string());
}

}  // namespace sgcl::cli
