#include "superhedge/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "superhedge/errors.hpp"
#include "superhedge/rng.hpp"

namespace superhedge {

void ModelParams::validate() const {
  if (!(s0 > 0.0) || !std::isfinite(s0)) throw ValidationError("model.s0 must be > 0");
  if (periods < 1) throw ValidationError("model.N must be >= 1");
  if (!(sigma_low >= 0.0)) throw ValidationError("model.sigma_low must be >= 0");
  if (!(sigma_high >= sigma_low) || !std::isfinite(sigma_high)) {
    throw ValidationError("model.sigma_high must be finite and >= sigma_low");
  }
  if (refinement < 1) throw ValidationError("model.k must be >= 1");
}

BranchSet BranchSet::grid(double sigma_low, double sigma_high, int k) {
  if (k < 1) throw ValidationError("refinement k must be >= 1");
  if (!(sigma_low >= 0.0) || !(sigma_high >= sigma_low)) {
    throw ValidationError("volatility bounds must satisfy 0 <= sigma_low <= sigma_high");
  }
  BranchSet set;
  for (int j = 0; j <= k; ++j) {
    const double w = static_cast<double>(j) / k;
    const double magnitude = w * sigma_low + (1.0 - w) * sigma_high;
    set.values_.push_back(magnitude);
    set.values_.push_back(-magnitude);
  }
  std::sort(set.values_.begin(), set.values_.end());
  // +0 and -0 compare equal, as do the collapsed magnitudes when σ̲ = σ̂.
  set.values_.erase(std::unique(set.values_.begin(), set.values_.end(),
                                [](double a, double b) { return a == b; }),
                    set.values_.end());
  for (double& v : set.values_) {
    if (v == 0.0) v = 0.0;
  }
  set.mesh_ = (sigma_high - sigma_low) / k;
  return set;
}

std::size_t BranchSet::floor_index(double x) const {
  auto it = std::upper_bound(values_.begin(), values_.end(), x + kReturnTolerance);
  if (it == values_.begin()) {
    throw DomainError("log-return " + std::to_string(x) + " lies below the grid");
  }
  return static_cast<std::size_t>(std::distance(values_.begin(), it) - 1);
}

double BranchSet::floor_value(double x) const { return values_[floor_index(x)]; }

ScenarioPath ScenarioPath::from_returns(double s0, std::vector<double> returns) {
  ScenarioPath p;
  p.prices.reserve(returns.size() + 1);
  p.prices.push_back(s0);
  double log_sum = 0.0;
  for (double x : returns) {
    log_sum += x;
    p.prices.push_back(s0 * std::exp(log_sum));
  }
  p.returns = std::move(returns);
  return p;
}

LatticeModel::LatticeModel(ModelParams params, BranchSet branches, std::size_t node_budget)
    : params_(params), branches_(std::move(branches)) {
  params_.validate();
  const double leaves = std::pow(static_cast<double>(branches_.size()), params_.periods);
  if (leaves > static_cast<double>(node_budget)) {
    std::ostringstream os;
    os << "tree with " << branches_.size() << "^" << params_.periods
       << " leaves exceeds the node budget of " << node_budget;
    throw CapacityError(os.str());
  }
  const std::size_t b = branches_.size();
  std::vector<double> growth(b);
  for (std::size_t i = 0; i < b; ++i) growth[i] = branches_[i];

  // Prices are recomputed from the summed log-return so that every node
  // matches s0·exp(Σ x) without compounding rounding.
  std::vector<std::vector<double>> log_sums(static_cast<std::size_t>(params_.periods) + 1);
  stocks_.resize(static_cast<std::size_t>(params_.periods) + 1);
  log_sums[0] = {0.0};
  stocks_[0] = {params_.s0};
  for (int n = 1; n <= params_.periods; ++n) {
    const auto& prev = log_sums[static_cast<std::size_t>(n - 1)];
    auto& cur = log_sums[static_cast<std::size_t>(n)];
    cur.resize(prev.size() * b);
    auto& st = stocks_[static_cast<std::size_t>(n)];
    st.resize(cur.size());
    for (std::size_t id = 0; id < prev.size(); ++id) {
      for (std::size_t br = 0; br < b; ++br) {
        const double s = prev[id] + growth[br];
        cur[id * b + br] = s;
        st[id * b + br] = params_.s0 * std::exp(s);
      }
    }
  }
}

std::size_t LatticeModel::internal_node_count() const {
  std::size_t total = 0;
  for (int n = 0; n < params_.periods; ++n) total += level_size(n);
  return total;
}

TreeNode LatticeModel::node(int n, std::size_t id) const {
  TreeNode node;
  node.time = n;
  node.node_id = id;
  node.stock = stock(n, id);
  if (n > 0) {
    node.parent = parent(id);
    node.branch_index = branch_of(id);
  }
  return node;
}

std::vector<std::size_t> LatticeModel::path_branches(int n, std::size_t id) const {
  std::vector<std::size_t> out(static_cast<std::size_t>(n));
  for (int m = n; m > 0; --m) {
    out[static_cast<std::size_t>(m - 1)] = branch_of(id);
    id = parent(id);
  }
  return out;
}

std::vector<double> LatticeModel::path_prices(int n, std::size_t id) const {
  std::vector<double> out(static_cast<std::size_t>(n) + 1);
  for (int m = n; m >= 0; --m) {
    out[static_cast<std::size_t>(m)] = stock(m, id);
    if (m > 0) id = parent(id);
  }
  return out;
}

std::size_t LatticeModel::node_on_path(std::span<const double> on_tree_returns, int n) const {
  std::size_t id = 0;
  for (int m = 0; m < n; ++m) {
    id = child(id, branches_.floor_index(on_tree_returns[static_cast<std::size_t>(m)]));
  }
  return id;
}

std::size_t LatticeModel::leaf_of(const ScenarioPath& on_tree_path) const {
  if (static_cast<int>(on_tree_path.returns.size()) != params_.periods) {
    throw ShapeError("path length does not match the tree depth");
  }
  return node_on_path(on_tree_path.returns, params_.periods);
}

std::string LatticeModel::to_json() const {
  std::ostringstream os;
  os.precision(17);
  os << "{\"branches\":[";
  for (std::size_t i = 0; i < branches_.size(); ++i) os << (i ? "," : "") << branches_[i];
  os << "],\"levels\":[";
  for (int n = 0; n <= params_.periods; ++n) {
    os << (n ? "," : "") << "[";
    for (std::size_t id = 0; id < level_size(n); ++id) {
      os << (id ? "," : "") << "{\"stock\":" << stock(n, id);
      if (n > 0) {
        os << ",\"parent\":" << parent(id) << ",\"branch_index\":" << branch_of(id);
      } else {
        os << ",\"parent\":null,\"branch_index\":null";
      }
      os << "}";
    }
    os << "]";
  }
  os << "]}";
  return os.str();
}

LatticeModel build_tree(const ModelParams& params, std::size_t node_budget) {
  params.validate();
  return LatticeModel(params,
                      BranchSet::grid(params.sigma_low, params.sigma_high, params.refinement),
                      node_budget);
}

void check_membership(const ScenarioPath& path, double sigma_low, double sigma_high) {
  for (std::size_t n = 0; n < path.returns.size(); ++n) {
    const double a = std::abs(path.returns[n]);
    if (a < sigma_low - kReturnTolerance || a > sigma_high + kReturnTolerance) {
      std::ostringstream os;
      os << "log-return " << path.returns[n] << " at period " << n + 1 << " is outside ["
         << sigma_low << ", " << sigma_high << "] in absolute value";
      throw DomainError(os.str());
    }
  }
}

ScenarioPath project_scenario(const ScenarioPath& path, const LatticeModel& tree) {
  const auto& p = tree.params();
  check_membership(path, p.sigma_low, p.sigma_high);
  std::vector<double> projected;
  projected.reserve(path.returns.size());
  for (double x : path.returns) projected.push_back(tree.branches().floor_value(x));
  return ScenarioPath::from_returns(p.s0, std::move(projected));
}

std::vector<ScenarioPath> sample_scenarios(const ModelParams& params, std::size_t count,
                                           std::uint64_t seed) {
  params.validate();
  if (count < 1) throw ValidationError("scenario count must be >= 1");
  std::vector<ScenarioPath> out;
  out.reserve(count);
  const double width = params.sigma_high - params.sigma_low;
  for (std::size_t i = 0; i < count; ++i) {
    auto eng = stream_engine(seed, i);
    std::vector<double> returns(static_cast<std::size_t>(params.periods));
    for (double& x : returns) {
      const bool up = (eng() >> 63) != 0;
      const double magnitude = params.sigma_low + width * uniform01(eng);
      x = up ? magnitude : -magnitude;
    }
    out.push_back(ScenarioPath::from_returns(params.s0, std::move(returns)));
  }
  return out;
}

}  // namespace superhedge
