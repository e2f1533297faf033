#include "superhedge/dual.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "superhedge/errors.hpp"
#include "superhedge/rng.hpp"

namespace superhedge {

namespace {

CostContext context_for(int n, int horizon, std::span<const double> prices) {
  CostContext ctx;
  ctx.period = n;
  ctx.horizon = horizon;
  ctx.prices = prices;
  return ctx;
}

bool lexicographically_less(const DualMeasure& a, const DualMeasure& b) {
  for (std::size_t n = 0; n < a.transitions.size(); ++n) {
    for (std::size_t id = 0; id < a.transitions[n].size(); ++id) {
      const auto& x = a.transitions[n][id];
      const auto& y = b.transitions[n][id];
      if (x != y) return std::lexicographical_compare(x.begin(), x.end(), y.begin(), y.end());
    }
  }
  return false;
}

}  // namespace

DualMeasure DualMeasure::uniform(const LatticeModel& tree) {
  DualMeasure m;
  const std::size_t b = tree.branch_count();
  m.transitions.resize(static_cast<std::size_t>(tree.periods()));
  for (int n = 0; n < tree.periods(); ++n) {
    m.transitions[static_cast<std::size_t>(n)].assign(tree.level_size(n),
                                                      std::vector<double>(b, 1.0 / b));
  }
  return m;
}

DualMeasure DualMeasure::extreme_martingale(const LatticeModel& tree) {
  DualMeasure m = uniform(tree);
  const auto& br = tree.branches();
  const std::size_t b = br.size();
  if (b < 2 || br[b - 1] <= 0.0 || br[0] >= 0.0) return m;
  const double up = std::exp(br[b - 1]);
  const double down = std::exp(br[0]);
  const double p = (1.0 - down) / (up - down);
  std::vector<double> v(b, 0.0);
  v[0] = 1.0 - p;
  v[b - 1] = p;
  for (auto& level : m.transitions) std::fill(level.begin(), level.end(), v);
  return m;
}

DualMeasure DualMeasure::from_leaf_probabilities(const LatticeModel& tree,
                                                 std::span<const double> leaf_probabilities) {
  if (leaf_probabilities.size() != tree.leaf_count()) {
    throw ShapeError("leaf probability vector does not match the tree");
  }
  const int big_n = tree.periods();
  const std::size_t b = tree.branch_count();
  std::vector<double> mass(leaf_probabilities.begin(), leaf_probabilities.end());
  DualMeasure m;
  m.transitions.resize(static_cast<std::size_t>(big_n));
  for (int n = big_n - 1; n >= 0; --n) {
    std::vector<double> up(tree.level_size(n), 0.0);
    auto& level = m.transitions[static_cast<std::size_t>(n)];
    level.resize(up.size());
    for (std::size_t id = 0; id < up.size(); ++id) {
      double total = 0.0;
      for (std::size_t c = 0; c < b; ++c) total += mass[tree.child(id, c)];
      up[id] = total;
      auto& v = level[id];
      v.resize(b);
      for (std::size_t c = 0; c < b; ++c) {
        v[c] = total > 0.0 ? mass[tree.child(id, c)] / total : 1.0 / b;
      }
    }
    mass = std::move(up);
  }
  return m;
}

void DualMeasure::validate(const LatticeModel& tree) const {
  if (transitions.size() != static_cast<std::size_t>(tree.periods())) {
    throw ShapeError("measure depth does not match the tree");
  }
  for (int n = 0; n < tree.periods(); ++n) {
    const auto& level = transitions[static_cast<std::size_t>(n)];
    if (level.size() != tree.level_size(n)) {
      throw ShapeError("measure level " + std::to_string(n) + " has the wrong node count");
    }
    for (std::size_t id = 0; id < level.size(); ++id) {
      if (level[id].size() != tree.branch_count()) {
        throw ShapeError("transition vector has the wrong branch count");
      }
      double sum = 0.0;
      for (double p : level[id]) {
        if (!(p >= 0.0)) throw ValidationError("transition probabilities must be >= 0");
        sum += p;
      }
      if (std::abs(sum - 1.0) > 1e-12) {
        std::ostringstream os;
        os << "transition vector at level " << n << ", node " << id << " sums to " << sum;
        throw ValidationError(os.str());
      }
    }
  }
}

std::vector<std::vector<double>> DualMeasure::node_probabilities(const LatticeModel& tree) const {
  std::vector<std::vector<double>> prob(static_cast<std::size_t>(tree.periods()) + 1);
  prob[0] = {1.0};
  for (int n = 0; n < tree.periods(); ++n) {
    auto& nxt = prob[static_cast<std::size_t>(n) + 1];
    nxt.assign(tree.level_size(n + 1), 0.0);
    const auto& cur = prob[static_cast<std::size_t>(n)];
    for (std::size_t id = 0; id < cur.size(); ++id) {
      const auto& v = at(n, id);
      for (std::size_t c = 0; c < v.size(); ++c) nxt[tree.child(id, c)] = cur[id] * v[c];
    }
  }
  return prob;
}

std::string DualMeasure::to_json() const {
  std::ostringstream os;
  os.precision(17);
  os << "{\"levels\":[";
  for (std::size_t n = 0; n < transitions.size(); ++n) {
    os << (n ? "," : "") << "[";
    for (std::size_t id = 0; id < transitions[n].size(); ++id) {
      os << (id ? "," : "") << "{\"node\":" << id << ",\"p\":[";
      const auto& v = transitions[n][id];
      for (std::size_t c = 0; c < v.size(); ++c) os << (c ? "," : "") << v[c];
      os << "]}";
    }
    os << "]";
  }
  os << "]}";
  return os.str();
}

MartingaleProjection martingale_projection(const DualMeasure& measure, const LatticeModel& tree) {
  measure.validate(tree);
  const int big_n = tree.periods();
  MartingaleProjection mp;
  mp.M.resize(static_cast<std::size_t>(big_n) + 1);
  mp.alpha.resize(static_cast<std::size_t>(big_n) + 1);
  const auto leaves = tree.level_stocks(big_n);
  mp.M.back().assign(leaves.begin(), leaves.end());
  mp.alpha.back().assign(leaves.size(), 0.0);
  for (int n = big_n - 1; n >= 0; --n) {
    const auto un = static_cast<std::size_t>(n);
    auto& m = mp.M[un];
    auto& a = mp.alpha[un];
    m.resize(tree.level_size(n));
    a.resize(m.size());
    for (std::size_t id = 0; id < m.size(); ++id) {
      const auto& v = measure.at(n, id);
      double e = 0.0;
      for (std::size_t c = 0; c < v.size(); ++c) {
        if (v[c] > 0.0) e += v[c] * mp.M[un + 1][tree.child(id, c)];
      }
      m[id] = e;
      const double s = tree.stock(n, id);
      a[id] = (e - s) / s;
    }
  }
  return mp;
}

ExtendedReal evaluate_dual(const DualMeasure& measure, const LatticeModel& tree,
                           const CostSpec& cost, const PayoffSpec& payoff) {
  const MartingaleProjection mp = martingale_projection(measure, tree);
  const auto prob = measure.node_probabilities(tree);
  const int big_n = tree.periods();
  double expected_payoff = 0.0;
  for (std::size_t id = 0; id < tree.leaf_count(); ++id) {
    const double p = prob.back()[id];
    if (p > 0.0) expected_payoff += p * payoff(tree.path_prices(big_n, id));
  }
  double penalty = 0.0;
  for (int n = 0; n < big_n; ++n) {
    const auto un = static_cast<std::size_t>(n);
    for (std::size_t id = 0; id < tree.level_size(n); ++id) {
      const double p = prob[un][id];
      if (!(p > 0.0)) continue;
      const auto prices = tree.path_prices(n, id);
      const ExtendedReal g = conjugate(cost, context_for(n, big_n, prices), mp.alpha[un][id]);
      if (g.is_plus_infinity()) return ExtendedReal::minus_infinity();
      penalty += p * g.value();
    }
  }
  return ExtendedReal(expected_payoff - penalty);
}

ExtendedReal weak_duality_check(const DualMeasure& measure, const Strategy& strategy,
                                const LatticeModel& tree, const CostSpec& cost,
                                const PayoffSpec& payoff) {
  const WealthLedger ledger = compute_ledger(tree, strategy, cost, payoff);
  if (ledger.min_terminal_slack < -1e-9) {
    std::ostringstream os;
    os << "strategy does not super-replicate on the tree (slack " << ledger.min_terminal_slack
       << ")";
    throw PreconditionError(os.str());
  }
  return ExtendedReal(strategy.initial_capital) - evaluate_dual(measure, tree, cost, payoff);
}

ExtractedDual extract_dual_from_lp(const LpCertificate& certificate, const LatticeModel& tree) {
  if (certificate.status != lp::Status::optimal) {
    throw PreconditionError("dual extraction needs an optimal linear-programming certificate");
  }
  if (certificate.leaf_multipliers.size() != tree.leaf_count()) {
    throw ShapeError("certificate does not match the tree");
  }
  std::vector<double> w(certificate.leaf_multipliers);
  double total = 0.0;
  for (double& x : w) {
    x = std::max(0.0, x);
    total += x;
  }
  ExtractedDual out;
  if (total < 1e-12) {
    out.measure = DualMeasure::uniform(tree);
    out.degenerate = true;
    return out;
  }
  // Multipliers at round-off level would make unreached nodes count, with
  // arbitrary drift ratios there.
  const double floor = 1e-12 * *std::max_element(w.begin(), w.end());
  total = 0.0;
  for (double& x : w) {
    if (x <= floor) x = 0.0;
    total += x;
  }
  for (double& x : w) x /= total;
  out.measure = DualMeasure::from_leaf_probabilities(tree, w);
  return out;
}

DualSearchResult dual_search(const LatticeModel& tree, const CostSpec& cost,
                             const PayoffSpec& payoff, std::size_t budget, std::uint64_t seed,
                             std::size_t starts) {
  if (budget < 1) throw ValidationError("dual search budget must be >= 1");
  if (starts < 1) throw ValidationError("dual search needs at least one start");
  const std::size_t b = tree.branch_count();
  DualSearchResult result;
  result.starts = starts;
  const std::size_t share = std::max<std::size_t>(1, budget / starts);

  for (std::size_t s = 0; s < starts; ++s) {
    DualMeasure m;
    if (s == 0) {
      m = DualMeasure::extreme_martingale(tree);
    } else {
      m = DualMeasure::uniform(tree);
      auto eng = stream_engine(seed, s);
      for (auto& level : m.transitions) {
        for (auto& v : level) {
          double sum = 0.0;
          for (double& p : v) {
            p = -std::log(1.0 - uniform01(eng));
            sum += p;
          }
          for (double& p : v) p /= sum;
        }
      }
    }
    std::size_t used = 0;
    ExtendedReal best = evaluate_dual(m, tree, cost, payoff);
    ++used;
    double step = 0.25;
    bool converged = false;
    while (used < share) {
      bool improved = false;
      for (std::size_t n = 0; n < m.transitions.size() && used < share; ++n) {
        for (std::size_t id = 0; id < m.transitions[n].size() && used < share; ++id) {
          auto& v = m.transitions[n][id];
          for (std::size_t i = 0; i < b && used < share; ++i) {
            for (std::size_t j = 0; j < b && used < share; ++j) {
              if (i == j) continue;
              const double delta = std::min(step, v[j]);
              if (!(delta > 0.0)) continue;
              const double pi = v[i], pj = v[j];
              v[i] = pi + delta;
              v[j] = pj - delta;
              // Keep the vector exactly normalised after the move.
              v[j] = std::max(0.0, 1.0 - (std::accumulate(v.begin(), v.end(), 0.0) - v[j]));
              const ExtendedReal val = evaluate_dual(m, tree, cost, payoff);
              ++used;
              if (val > best) {
                best = val;
                improved = true;
              } else {
                v[i] = pi;
                v[j] = pj;
              }
            }
          }
        }
      }
      if (!improved) {
        step *= 0.5;
        if (step < 1e-12) {
          converged = true;
          break;
        }
      }
    }
    result.evaluations += used;
    if (!converged) result.budget_exhausted = true;
    const bool better = best > result.best_value ||
                        (best == result.best_value && lexicographically_less(m, result.best_measure));
    if (s == 0 || better) {
      result.best_value = best;
      result.best_measure = m;
    }
  }
  return result;
}

}  // namespace superhedge
