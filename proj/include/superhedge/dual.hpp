#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "superhedge/costs.hpp"
#include "superhedge/extended_real.hpp"
#include "superhedge/lattice.hpp"
#include "superhedge/payoff.hpp"
#include "superhedge/primal.hpp"

namespace superhedge {

/// Probability measure on a tree, given by one transition vector per
/// internal node.
struct DualMeasure {
  std::vector<std::vector<std::vector<double>>> transitions;  // [n][id][branch]

  static DualMeasure uniform(const LatticeModel& tree);
  /// Mass on the lowest and highest branch only, chosen so that S is a
  /// martingale.
  static DualMeasure extreme_martingale(const LatticeModel& tree);
  /// Transitions induced by leaf probabilities; nodes without mass get the
  /// uniform vector. `leaf_probabilities` must be nonnegative with sum 1.
  static DualMeasure from_leaf_probabilities(const LatticeModel& tree,
                                             std::span<const double> leaf_probabilities);

  const std::vector<double>& at(int n, std::size_t id) const {
    return transitions[static_cast<std::size_t>(n)][id];
  }

  /// Throws ShapeError for a different tree, ValidationError for entries
  /// that are negative or do not sum to 1 within 1e−12.
  void validate(const LatticeModel& tree) const;

  /// Probability of reaching each node, levels 0..N.
  std::vector<std::vector<double>> node_probabilities(const LatticeModel& tree) const;

  /// {"levels": [[{"node": id, "p": [...]}, ...], ...]}
  std::string to_json() const;
};

/// M_n = E_P[S_N | F_n] and α_n = (M_n − S_n)/S_n on every node, levels 0..N.
struct MartingaleProjection {
  std::vector<std::vector<double>> M;
  std::vector<std::vector<double>> alpha;
};

MartingaleProjection martingale_projection(const DualMeasure& measure, const LatticeModel& tree);

/// E_P[F] − Σ_n E_P[G_n(α_n)], or −∞ when a node with positive probability
/// carries an infinite penalty.
ExtendedReal evaluate_dual(const DualMeasure& measure, const LatticeModel& tree,
                           const CostSpec& cost, const PayoffSpec& payoff);

/// y − U(P) for a strategy that super-replicates on the tree. Throws
/// PreconditionError if the strategy misses the payoff on some leaf.
ExtendedReal weak_duality_check(const DualMeasure& measure, const Strategy& strategy,
                                const LatticeModel& tree, const CostSpec& cost,
                                const PayoffSpec& payoff);

struct ExtractedDual {
  DualMeasure measure;
  /// Multiplier mass was below 1e−12; the uniform measure was returned.
  bool degenerate = false;
};

ExtractedDual extract_dual_from_lp(const LpCertificate& certificate, const LatticeModel& tree);

struct DualSearchResult {
  ExtendedReal best_value = ExtendedReal::minus_infinity();
  DualMeasure best_measure;
  std::size_t evaluations = 0;
  std::size_t starts = 0;
  /// Some start was still improving when its share of the budget ran out.
  bool budget_exhausted = false;
};

/// Multi-start coordinate ascent over nodewise transitions: mass moves
/// between pairs of branches with a step that halves once a sweep fails to
/// improve. Start 0 is the extreme-branch martingale measure; the others are
/// random and derived from `seed`. Ties between starts go to the
/// lexicographically smaller measure.
DualSearchResult dual_search(const LatticeModel& tree, const CostSpec& cost,
                             const PayoffSpec& payoff, std::size_t budget, std::uint64_t seed,
                             std::size_t starts = 4);

}  // namespace superhedge
