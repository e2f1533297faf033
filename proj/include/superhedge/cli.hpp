#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "superhedge/costs.hpp"
#include "superhedge/lattice.hpp"
#include "superhedge/payoff.hpp"
#include "superhedge/primal.hpp"

namespace superhedge::cli {

inline constexpr int kSchemaVersion = 1;
inline constexpr const char* kLibraryVersion = "1.0.0";

enum class Mode { price, dual, gap, lift_check, kusuoka_check, scaling_study };

std::string to_string(Mode mode);
Mode parse_mode(const std::string& text);

struct CostParams {
  std::string kind = "zero";  // zero, proportional, quadratic, truncated_quadratic,
                              // piecewise_linear, custom
  double rate = 0.0;
  double lambda = 0.0;
  double cap = 0.0;
  std::vector<double> breakpoints;
  std::vector<double> slopes;
  std::vector<double> beta;    // custom: tabulated grid
  std::vector<double> values;

  CostSpec build() const;
};

struct PayoffParams {
  std::string kind = "call";  // call, put, lookback_max, asian_average, constant
  double strike = 1.0;
  double level = 0.0;

  PayoffSpec build() const;
};

struct CandidateParams {
  std::string kind = "constant";  // constant, tanh, piecewise_constant, running_max
  double sigma = 0.0;
  double base = 0.0;
  double amplitude = 0.0;
  std::vector<double> knots;
  std::vector<double> values;
  double level = 0.0;
  double below = 0.0;
  double above = 0.0;
  std::optional<double> tail_delta;
};

struct ExperimentConfig {
  Mode mode = Mode::price;
  std::uint64_t seed = 0;
  std::string output = "result";  // writes <output>.json and <output>.csv
  int threads = 1;
  std::size_t node_budget = kDefaultNodeBudget;

  ModelParams model;
  CostParams cost;
  PayoffParams payoff;

  std::string backend = "dp";  // price: dp or lp
  std::size_t grid_points = HoldingGridConfig{}.points;
  std::optional<double> grid_extent;

  std::size_t dual_budget = 20000;
  std::size_t dual_starts = 4;

  double cushion = 1e-6;
  std::size_t lift_scenarios = 10000;
  std::vector<int> refinements{1, 2, 4};

  double c = 0.5;  // slope cap of the scaling limit
  CandidateParams candidate;
  std::size_t kusuoka_sample_paths = 10000;

  std::vector<int> scaling_periods{4, 8, 16};
  std::size_t mc_paths = 20000;
  int mc_steps = 256;
  int lower_bound_grid = 5;
  bool skip_limit_estimate = false;

  double weak_duality_tol = 1e-8;
  double strong_duality_tol = 1e-7;
};

/// Throws ValidationError naming the offending field; unknown keys are errors.
ExperimentConfig parse_config(const nlohmann::json& doc);
nlohmann::json config_to_json(const ExperimentConfig& config);

struct RunResult {
  nlohmann::json outputs;
  std::string csv;
};

/// Runs the configured mode without touching the file system.
RunResult execute(const ExperimentConfig& config);

/// Runs and writes <output>.json and <output>.csv. Returns the exit status:
/// 0 success, 2 invalid input, 3 capacity exceeded, 4 numerical contract
/// violated, 1 anything else.
int run(const ExperimentConfig& config, std::ostream& err);

/// Command-line entry point.
int main_entry(int argc, char** argv);

}  // namespace superhedge::cli
