#include <cstdlib>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "commands.hpp"
#include "sgcl/errors.hpp"
#include "sgcl/parallel.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Single-encoder graph self-supervised learning: training, ablation and diagnostics"};
  app.require_subcommand(1);

  std::string config, checkpoint;
  auto* train = app.add_subcommand("train", "train an encoder and probe it");
  train->add_option("--config", config, "run config (JSON)")->required();
  auto* ablate = app.add_subcommand("ablate", "run the mode x predictor grid");
  ablate->add_option("--config", config, "run config (JSON)")->required();
  auto* diagnose = app.add_subcommand("diagnose", "alignment, correlation and eigen-residual diagnostics");
  diagnose->add_option("--checkpoint", checkpoint, "checkpoint directory")->required();
  diagnose->add_option("--config", config, "run config naming the dataset (JSON)")->required();
  auto* dynamics = app.add_subcommand("dynamics", "simulate the linear teacher-student singular values");
  dynamics->add_option("--config", config, "dynamics config (JSON)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  if (const char* env = std::getenv("SGCL_THREADS")) {
    try {
      const long n = std::stol(env);
      if (n < 1) throw std::invalid_argument("");
      sgcl::set_thread_cap(static_cast<std::size_t>(n));
    } catch (const std::exception&) {
      std::cerr << "error: SGCL_THREADS must be a positive integer\n";
      return 2;
    }
  }

  try {
    if (*train) return sgcl::cli::cmd_train(config, std::cout);
    if (*ablate) return sgcl::cli::cmd_ablate(config, std::cout);
    if (*diagnose) return sgcl::cli::cmd_diagnose(checkpoint, config, std::cout);
    if (*dynamics) return sgcl::cli::cmd_dynamics(config, std::cout);
  } catch (const sgcl::NumericError& e) {
    std::cerr << "numeric error";
    if (e.iteration() >= 0) std::cerr << " at iteration " << e.iteration();
    std::cerr << ": " << e.what() << "\n";
    return 3;
  } catch (const sgcl::DivergenceError& e) {
    std::cerr << "diverged at step " << e.step() << " with learning rate " << e.learning_rate() << ": " << e.what()
              << "\n";
    return 5;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return sgcl::cli::exit_code_for(e);
  }
  return 2;
}
