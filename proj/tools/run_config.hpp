#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "json.hpp"
#include "sgcl/diagnostics.hpp"
#include "sgcl/graph.hpp"
#include "sgcl/trainer.hpp"

namespace sgcl::cli {

struct DatasetFiles {
  std::filesystem::path edges;
  std::filesystem::path features;
  std::filesystem::path labels;
};

struct DatasetSource {
  std::optional<SbmConfig> sbm;  // exactly one of sbm / files
  std::optional<DatasetFiles> files;
  std::uint64_t seed = 0;        // sbm generation seed

  DatasetBundle load() const;
};

struct RunConfig {
  DatasetSource dataset;
  TrainConfig train;
  std::size_t eval_splits = 10;
  std::filesystem::path output_dir = "out";
  bool emit_plots = true;
  bool record_wall_time = false;  // off keeps metrics.csv byte-stable across reruns

  void validate() const;
};

// Unknown keys and wrong types are config errors. Missing keys take defaults.
// The probe block lives at top level ("probe") and is copied into train.probe.
RunConfig run_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const RunConfig& c);

struct DynamicsRunConfig {
  // Either an explicit matrix or a generated one.
  std::optional<DenseMatrix> input;
  std::size_t rows = 64;
  std::size_t cols = 8;
  std::uint64_t seed = 0;
  std::string input_kind = "random";  // random | isotropic
  TsDynamicsConfig dynamics;
  std::filesystem::path output_dir = "out";
  bool emit_plots = true;

  // Centered, row-normalized input used by the simulation.
  DenseMatrix resolved_input() const;
};

DynamicsRunConfig dynamics_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const DynamicsRunConfig& c);

nlohmann::json read_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const nlohmann::json& j);

}  // namespace sgcl::cli
