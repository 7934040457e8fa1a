#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "schwarzlab/diagnostics.hpp"
#include "schwarzlab/types.hpp"

namespace schwarzlab::cli {

struct ExperimentConfig {
  int dim = 1;
  int cells_per_side = 32;
  int blocks_per_side = 4;
  int overlap_layers = 2;
  std::vector<std::string> methods = {"AS"};
  std::vector<double> epsilon;
  double tol = 1e-8;
  int max_iter = 400;
  std::uint64_t seed = 20240001;
  int dense_cap = 5000;
  std::string out_dir = "out";
};

ExperimentConfig load_config(const std::filesystem::path& file);

/// Checks the configuration against the decomposition preconditions without
/// producing any output. Throws ConfigError with the offending field named.
void validate_config(const ExperimentConfig& cfg);

struct RunManifest {
  ExperimentConfig config;
  std::string version;
  std::vector<std::pair<std::string, double>> stage_ms;
  std::vector<std::pair<std::string, std::string>> files;  // name, digest
  bool all_asserted_pass = false;
};

/// Runs assembly, decomposition, operators, diagnostics and the solver
/// table, then writes constants.json, bounds.csv, one spectrum CSV per
/// method, solver_table.csv and manifest.json into the output directory.
RunManifest run_experiment(const ExperimentConfig& cfg);

/// Fixed-width summary table read back from an emitted manifest.
std::string summarize(const std::filesystem::path& manifest_file);

/// 17-significant-digit formatting used for every CSV number.
std::string format_double(double v);

std::uint64_t fnv1a64(const std::string& bytes);

}  // namespace schwarzlab::cli
