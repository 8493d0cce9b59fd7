#pragma once

#include <filesystem>
#include <iosfwd>

namespace sgcl::cli {

// Each returns the process exit status; library errors propagate and are
// mapped by exit_code_for().
int cmd_train(const std::filesystem::path& config_path, std::ostream& log);
int cmd_ablate(const std::filesystem::path& config_path, std::ostream& log);
int cmd_diagnose(const std::filesystem::path& checkpoint_dir, const std::filesystem::path& config_path,
                 std::ostream& log);
int cmd_dynamics(const std::filesystem::path& config_path, std::ostream& log);

// 0 ok, 2 config, 3 numeric, 4 io, 5 divergence.
int exit_code_for(const std::exception& e);

}  // namespace sgcl::cli
