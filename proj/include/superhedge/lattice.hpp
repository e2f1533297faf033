#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace superhedge {

/// Absolute tolerance for membership tests on log-returns.
inline constexpr double kReturnTolerance = 1e-12;

/// Default cap on the number of leaves a tree may have.
inline constexpr std::size_t kDefaultNodeBudget = 10'000'000;

struct ModelParams {
  double s0 = 1.0;
  int periods = 1;          // N
  double sigma_low = 0.0;   // lower bound on |log-return| per period
  double sigma_high = 0.0;  // upper bound on |log-return| per period
  int refinement = 1;       // k, grid level of the multinomial tree

  /// Throws ValidationError naming the offending field.
  void validate() const;
};

/// Sorted, deduplicated one-period log-returns of the multinomial grid.
class BranchSet {
public:
  BranchSet() = default;

  /// Grid {±((j/k)·sigma_low + (1−j/k)·sigma_high) : j = 0..k}.
  static BranchSet grid(double sigma_low, double sigma_high, int k);

  std::span<const double> values() const { return values_; }
  std::size_t size() const { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }

  /// Largest grid value ≤ x. x must lie in the admissible band.
  double floor_value(double x) const;
  std::size_t floor_index(double x) const;

  /// Largest distance between adjacent magnitudes, (σ̂−σ̲)/k.
  double mesh() const { return mesh_; }

private:
  std::vector<double> values_;
  double mesh_ = 0.0;
};

struct TreeNode {
  int time = 0;
  std::size_t node_id = 0;
  double stock = 0.0;
  std::optional<std::size_t> parent;
  std::optional<std::size_t> branch_index;
};

struct ScenarioPath {
  std::vector<double> returns;  // N log-returns
  std::vector<double> prices;   // N+1 prices, prices[0] = s0

  static ScenarioPath from_returns(double s0, std::vector<double> returns);
};

/// Full non-recombining scenario tree over a BranchSet.
///
/// Node ids at level n are mixed-radix numbers over branch indices with the
/// earliest period most significant: child id = parent id · B + branch.
class LatticeModel {
public:
  LatticeModel(ModelParams params, BranchSet branches,
               std::size_t node_budget = kDefaultNodeBudget);

  const ModelParams& params() const { return params_; }
  const BranchSet& branches() const { return branches_; }
  int periods() const { return params_.periods; }
  std::size_t branch_count() const { return branches_.size(); }

  std::size_t level_size(int n) const { return stocks_[static_cast<std::size_t>(n)].size(); }
  std::size_t leaf_count() const { return level_size(params_.periods); }
  std::size_t internal_node_count() const;

  double stock(int n, std::size_t id) const { return stocks_[static_cast<std::size_t>(n)][id]; }
  std::span<const double> level_stocks(int n) const { return stocks_[static_cast<std::size_t>(n)]; }

  TreeNode node(int n, std::size_t id) const;

  std::size_t child(std::size_t id, std::size_t branch) const { return id * branch_count() + branch; }
  std::size_t parent(std::size_t id) const { return id / branch_count(); }
  std::size_t branch_of(std::size_t id) const { return id % branch_count(); }

  /// Prices S_0..S_n along the path into node (n, id).
  std::vector<double> path_prices(int n, std::size_t id) const;
  /// Branch indices of the path into node (n, id), earliest first.
  std::vector<std::size_t> path_branches(int n, std::size_t id) const;

  /// Leaf id of a path whose returns are exactly grid values.
  std::size_t leaf_of(const ScenarioPath& on_tree_path) const;
  /// Node id at level n on the path through the given on-tree returns.
  std::size_t node_on_path(std::span<const double> on_tree_returns, int n) const;

  /// levels → nodes → {stock, parent, branch_index}, for debugging.
  std::string to_json() const;

private:
  ModelParams params_;
  BranchSet branches_;
  std::vector<std::vector<double>> stocks_;
};

LatticeModel build_tree(const ModelParams& params,
                        std::size_t node_budget = kDefaultNodeBudget);

/// Replace each coordinate by the largest grid value not exceeding it.
ScenarioPath project_scenario(const ScenarioPath& path, const LatticeModel& tree);

/// Throws DomainError if any |return| leaves [σ̲, σ̂] beyond kReturnTolerance.
void check_membership(const ScenarioPath& path, double sigma_low, double sigma_high);

/// Random paths in Ω: random sign, magnitude uniform on [σ̲, σ̂].
std::vector<ScenarioPath> sample_scenarios(const ModelParams& params, std::size_t count,
                                           std::uint64_t seed);

}  // namespace superhedge
