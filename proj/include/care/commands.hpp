#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>

#include "care/estimation.hpp"

namespace care::cli {

// Process exit codes. Stable; documented in the README.
enum ExitCode : int {
  kExitOk = 0,
  kExitInternal = 1,
  kExitParse = 2,
  kExitConnectivity = 3,
  kExitConvergence = 4,
  kExitConfig = 5,
  kExitData = 6,
};

inline constexpr const char* kVersion = "0.1.0";

struct RunConfig {
  std::string command;
  std::filesystem::path comparisons;
  std::filesystem::path covariates;
  std::filesystem::path output_dir = "care_out";
  bool standardize = true;

  // Fit options; 0 selects the automatic step size / total-trials divisor.
  double step_size = 0.0;
  std::size_t max_iters = 20000;
  double grad_tol = 1e-8;
  double step_tol = 1e-14;
  double ridge_alpha = 0.0;
  double likelihood_scale = 0.0;

  double level = 0.95;
  double quantile_level = 0.995;
  double eigen_cutoff = 1e-10;

  // simulate / experiment
  std::size_t n = 200;
  std::size_t d = 5;
  double p = 0.5;
  std::int64_t trials = 25;
  std::uint64_t seed = 1;
  std::string experiment = "rate";
  std::size_t replications = 0;  // 0: 200 for rate, 250 for distribution
  std::size_t instances = 1;
  std::string pairs;       // "p:L,p:L,..."; empty selects the study defaults
  std::string statistics;  // comma separated; empty selects the defaults
  std::size_t threads = 1;

  FitConfig fit_config() const;
  // Canonical text of every setting that influences results (output paths
  // and thread count excluded).
  std::string canonical() const;
  void validate() const;
};

int cmd_simulate(const RunConfig& config);
int cmd_fit(const RunConfig& config);
int cmd_infer(const RunConfig& config);
int cmd_rank(const RunConfig& config);
int cmd_experiment(const RunConfig& config);

// Dispatches on config.command and maps errors to exit codes with a message
// on stderr.
int run(const RunConfig& config);

// Full command line entry point (CLI11). `--config FILE` reads flat
// key = value settings; flags on the command line take precedence.
int main(int argc, char** argv);

}  // namespace care::cli
