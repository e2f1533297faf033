#include "superhedge/cli.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <limits>
#include <set>
#include <sstream>

#include <CLI11.hpp>

#include "superhedge/dual.hpp"
#include "superhedge/errors.hpp"
#include "superhedge/lifting.hpp"
#include "superhedge/rng.hpp"
#include "superhedge/scaling.hpp"

namespace superhedge::cli {

using nlohmann::json;

namespace {

// Reads one JSON object, tracking which keys were consumed.
class Section {
public:
  Section(const json& doc, std::string path) : doc_(doc), path_(std::move(path)) {
    if (!doc_.is_object()) throw ValidationError(where("") + " must be an object");
  }

  bool has(const std::string& key) const { return doc_.contains(key); }

  const json* find(const std::string& key) {
    seen_.insert(key);
    const auto it = doc_.find(key);
    return it == doc_.end() ? nullptr : &*it;
  }

  void read(const std::string& key, double& out) {
    if (const json* v = find(key)) {
      if (!v->is_number()) throw ValidationError(where(key) + " must be a number");
      out = v->get<double>();
      if (!std::isfinite(out)) throw ValidationError(where(key) + " must be finite");
    }
  }

  void read(const std::string& key, std::optional<double>& out) {
    if (const json* v = find(key)) {
      if (v->is_null()) {
        out.reset();
        return;
      }
      double x = 0.0;
      seen_.erase(key);
      read(key, x);
      out = x;
    }
  }

  void read(const std::string& key, int& out) {
    if (const json* v = find(key)) {
      if (!v->is_number_integer()) throw ValidationError(where(key) + " must be an integer");
      const auto x = v->get<long long>();
      if (x < std::numeric_limits<int>::min() || x > std::numeric_limits<int>::max()) {
        throw ValidationError(where(key) + " is out of range");
      }
      out = static_cast<int>(x);
    }
  }

  void read(const std::string& key, std::uint64_t& out) {
    if (const json* v = find(key)) {
      if (!v->is_number_unsigned() && !(v->is_number_integer() && v->get<std::int64_t>() >= 0)) {
        throw ValidationError(where(key) + " must be a non-negative integer");
      }
      out = v->get<std::uint64_t>();
    }
  }

  void read(const std::string& key, bool& out) {
    if (const json* v = find(key)) {
      if (!v->is_boolean()) throw ValidationError(where(key) + " must be true or false");
      out = v->get<bool>();
    }
  }

  void read(const std::string& key, std::string& out) {
    if (const json* v = find(key)) {
      if (!v->is_string()) throw ValidationError(where(key) + " must be a string");
      out = v->get<std::string>();
    }
  }

  void read(const std::string& key, std::vector<double>& out) {
    if (const json* v = find(key)) {
      if (!v->is_array()) throw ValidationError(where(key) + " must be an array of numbers");
      out.clear();
      for (const json& e : *v) {
        if (!e.is_number()) throw ValidationError(where(key) + " must be an array of numbers");
        out.push_back(e.get<double>());
      }
    }
  }

  void read(const std::string& key, std::vector<int>& out) {
    if (const json* v = find(key)) {
      if (!v->is_array()) throw ValidationError(where(key) + " must be an array of integers");
      out.clear();
      for (const json& e : *v) {
        if (!e.is_number_integer()) {
          throw ValidationError(where(key) + " must be an array of integers");
        }
        out.push_back(e.get<int>());
      }
    }
  }

  Section child(const std::string& key) {
    const json* v = find(key);
    static const json empty = json::object();
    return Section(v ? *v : empty, path_.empty() ? key : path_ + "." + key);
  }

  void finish() const {
    for (auto it = doc_.begin(); it != doc_.end(); ++it) {
      if (!seen_.count(it.key())) throw ValidationError("unknown key " + where(it.key()));
    }
  }

  std::string where(const std::string& key) const {
    if (key.empty()) return path_.empty() ? "config" : "'" + path_ + "'";
    return "'" + (path_.empty() ? key : path_ + "." + key) + "'";
  }

private:
  const json& doc_;
  std::string path_;
  std::set<std::string> seen_;
};

json number(double x) {
  if (std::isnan(x)) return nullptr;
  if (std::isinf(x)) return x > 0 ? "+inf" : "-inf";
  return x;
}

json number(const ExtendedReal& x) {
  return x.is_finite() ? json(x.value()) : json(x.to_string());
}

std::string csv_number(double x) {
  std::ostringstream os;
  os.precision(17);
  os << x;
  return os.str();
}

// Re-throws a module error with the config field prefixed.
template <typename F>
auto with_field(const std::string& field, F&& f) {
  try {
    return f();
  } catch (const ValidationError& e) {
    throw ValidationError("'" + field + "': " + e.what());
  } catch (const DomainError& e) {
    throw ValidationError("'" + field + "': " + e.what());
  }
}

VolCandidate build_candidate(const CandidateParams& p, double sigma_low) {
  VolCandidate v;
  if (p.kind == "constant") {
    v = VolCandidate::constant(p.sigma);
  } else if (p.kind == "tanh") {
    v = VolCandidate::tanh_of_driver(p.base, p.amplitude);
  } else if (p.kind == "piecewise_constant") {
    v = VolCandidate::piecewise_constant(p.knots, p.values);
  } else if (p.kind == "running_max") {
    v = VolCandidate::running_max_threshold(p.level, p.below, p.above);
  } else {
    throw ValidationError("unknown candidate kind '" + p.kind + "'");
  }
  if (p.tail_delta) v = VolCandidate::with_constant_tail(v, sigma_low, *p.tail_delta);
  return v;
}

HoldingGridConfig grid_of(const ExperimentConfig& cfg) {
  HoldingGridConfig g;
  g.points = cfg.grid_points;
  g.extent = cfg.grid_extent;
  return g;
}

std::string strategy_csv(const LatticeModel& tree, const Strategy& strategy,
                         const WealthLedger& ledger) {
  std::ostringstream os;
  os << "n,node,stock,holding,wealth\n";
  for (int n = 0; n <= tree.periods(); ++n) {
    for (std::size_t id = 0; id < tree.level_size(n); ++id) {
      os << n << "," << id << "," << csv_number(tree.stock(n, id)) << ",";
      if (n < tree.periods()) os << csv_number(strategy.holding(n, id));
      os << "," << csv_number(ledger.values[static_cast<std::size_t>(n)][id]) << "\n";
    }
  }
  return os.str();
}

std::string measure_csv(const LatticeModel& tree, const DualMeasure& measure) {
  std::ostringstream os;
  os << "n,node,branch,probability\n";
  for (int n = 0; n < tree.periods(); ++n) {
    for (std::size_t id = 0; id < tree.level_size(n); ++id) {
      const auto& row = measure.at(n, id);
      for (std::size_t b = 0; b < row.size(); ++b) {
        os << n << "," << id << "," << b << "," << csv_number(row[b]) << "\n";
      }
    }
  }
  return os.str();
}

json report_json(const PriceReport& r) {
  return {{"V", number(r.value)},
          {"backend", r.backend},
          {"grid_error_bound", number(r.grid_error_bound)},
          {"solver_iterations", r.solver_iterations},
          {"holding_extent", number(r.holding_extent)},
          {"grid_points", r.grid_points},
          {"warnings", r.warnings}};
}

struct Priced {
  PriceReport report;
  Strategy strategy;
  WealthLedger ledger;
  std::optional<LpCertificate> certificate;
};

Priced price_on(const LatticeModel& tree, const CostSpec& cost, const PayoffSpec& payoff,
                bool use_lp, const HoldingGridConfig& grid) {
  if (use_lp) {
    LpPrimalSolution s = solve_primal_lp(tree, cost, payoff);
    return {s.report, std::move(s.strategy), std::move(s.ledger), s.certificate};
  }
  PrimalSolution s = solve_primal_dp(tree, cost, payoff, grid);
  return {s.report, std::move(s.strategy), std::move(s.ledger), std::nullopt};
}

RunResult run_price(const ExperimentConfig& cfg) {
  const CostSpec cost = cfg.cost.build();
  const PayoffSpec payoff = cfg.payoff.build();
  const LatticeModel tree = build_tree(cfg.model, cfg.node_budget);
  const Priced p = price_on(tree, cost, payoff, cfg.backend == "lp", grid_of(cfg));
  RunResult r;
  r.outputs = report_json(p.report);
  r.outputs["min_terminal_slack"] = number(p.ledger.min_terminal_slack);
  r.csv = strategy_csv(tree, p.strategy, p.ledger);
  return r;
}

RunResult run_dual(const ExperimentConfig& cfg) {
  const CostSpec cost = cfg.cost.build();
  const PayoffSpec payoff = cfg.payoff.build();
  const LatticeModel tree = build_tree(cfg.model, cfg.node_budget);
  RunResult r;
  const DualSearchResult search =
      dual_search(tree, cost, payoff, cfg.dual_budget, substream_seed(cfg.seed, "dual_search"),
                  cfg.dual_starts);
  r.outputs["U_search"] = number(search.best_value);
  r.outputs["search_evaluations"] = search.evaluations;
  r.outputs["search_budget_exhausted"] = search.budget_exhausted;
  const DualMeasure* shown = &search.best_measure;
  std::optional<ExtractedDual> extracted;
  if (cost.is_piecewise_linear()) {
    const LpPrimalSolution lp = solve_primal_lp(tree, cost, payoff);
    extracted = extract_dual_from_lp(lp.certificate, tree);
    const ExtendedReal u = evaluate_dual(extracted->measure, tree, cost, payoff);
    r.outputs["V_lp"] = number(lp.report.value);
    r.outputs["U_extracted"] = number(u);
    r.outputs["extracted_degenerate"] = extracted->degenerate;
    shown = &extracted->measure;
  }
  r.outputs["measure_source"] = extracted ? "lp" : "search";
  r.csv = measure_csv(tree, *shown);
  return r;
}

RunResult run_gap(const ExperimentConfig& cfg) {
  const CostSpec cost = cfg.cost.build();
  const PayoffSpec payoff = cfg.payoff.build();
  const LatticeModel tree = build_tree(cfg.model, cfg.node_budget);
  const bool exact = cost.is_piecewise_linear();
  const Priced p = price_on(tree, cost, payoff, exact, grid_of(cfg));
  DualMeasure measure;
  if (exact) {
    measure = extract_dual_from_lp(*p.certificate, tree).measure;
  } else {
    measure = dual_search(tree, cost, payoff, cfg.dual_budget,
                          substream_seed(cfg.seed, "dual_search"), cfg.dual_starts)
                  .best_measure;
  }
  const ExtendedReal u = evaluate_dual(measure, tree, cost, payoff);
  const ExtendedReal slack = weak_duality_check(measure, p.strategy, tree, cost, payoff);
  if (slack.is_finite() && slack.value() < -cfg.weak_duality_tol) {
    throw ContractViolation("weak duality breached: U exceeds V by " +
                            std::to_string(-slack.value()));
  }
  const double gap = u.is_finite() ? p.report.value - u.value()
                                   : std::numeric_limits<double>::infinity();
  if (exact && !(gap <= cfg.strong_duality_tol)) {
    throw ContractViolation("duality gap " + std::to_string(gap) +
                            " exceeds the strong-duality tolerance for a piecewise-linear cost");
  }
  RunResult r;
  r.outputs = report_json(p.report);
  r.outputs["U"] = number(u);
  r.outputs["gap"] = number(gap);
  r.outputs["measure_source"] = exact ? "lp" : "search";
  r.csv = "V,U,gap\n" + csv_number(p.report.value) + "," +
          (u.is_finite() ? csv_number(u.value()) : u.to_string()) + "," + csv_number(gap) + "\n";
  return r;
}

RunResult run_lift_check(const ExperimentConfig& cfg) {
  const CostSpec cost = cfg.cost.build();
  const PayoffSpec payoff = cfg.payoff.build();
  const ReductionReport rep =
      convex_reduction_experiment(cfg.model, cost, payoff, cfg.cushion, cfg.lift_scenarios,
                                  substream_seed(cfg.seed, "scenarios"), cfg.refinements,
                                  grid_of(cfg));
  RunResult r;
  r.outputs = {{"value_bar", number(rep.value_bar)},
               {"cushion", number(rep.cushion)},
               {"min_slack", number(rep.min_slack)},
               {"violations", rep.violations},
               {"scenarios", rep.scenarios}};
  std::ostringstream os;
  os << "k,value_k,value_bar,gap,grid_error\n";
  json rows = json::array();
  for (const ReductionRow& row : rep.rows) {
    rows.push_back({{"k", row.k},
                    {"value_k", number(row.value_k)},
                    {"gap", number(row.gap)},
                    {"grid_error", number(row.grid_error)}});
    os << row.k << "," << csv_number(row.value_k) << "," << csv_number(row.value_bar) << ","
       << csv_number(row.gap) << "," << csv_number(row.grid_error) << "\n";
  }
  r.outputs["rows"] = rows;
  r.csv = os.str();
  return r;
}

RunResult run_kusuoka_check(const ExperimentConfig& cfg) {
  const VolCandidate cand = build_candidate(cfg.candidate, cfg.model.sigma_low);
  const KusuokaReport rep = kusuoka_measure(cand, cfg.model, cfg.c, cfg.kusuoka_sample_paths,
                                            substream_seed(cfg.seed, "kusuoka_paths"));
  const std::vector<std::pair<std::string, double>> metrics{
      {"max_b_martingale_error", rep.max_b_martingale_error},
      {"max_m_martingale_error", rep.max_m_martingale_error},
      {"max_relative_gap", rep.max_relative_gap},
      {"relative_gap_bound", rep.relative_gap_bound},
      {"min_q", rep.min_q},
      {"max_q", rep.max_q},
      {"leaf_mass", rep.leaf_mass},
      {"min_scaled_dq", rep.min_scaled_dq},
      {"max_scaled_dq", rep.max_scaled_dq},
      {"dq_lower", rep.dq_lower},
      {"dq_upper", rep.dq_upper},
      {"max_terminal_gap", rep.max_terminal_gap}};
  RunResult r;
  r.outputs["candidate"] = cand.id;
  r.outputs["full_tree"] = rep.full_tree;
  r.outputs["sampled_paths"] = rep.sampled_paths;
  r.outputs["nodes_checked"] = rep.nodes_checked;
  std::ostringstream os;
  os << "metric,value\n";
  for (const auto& [name, value] : metrics) {
    r.outputs[name] = number(value);
    os << name << "," << csv_number(value) << "\n";
  }
  r.outputs["invariants_hold"] = rep.invariants_hold();
  r.csv = os.str();
  if (!rep.invariants_hold()) {
    throw ContractViolation("measure invariants fail for candidate " + cand.id);
  }
  return r;
}

RunResult run_scaling_study(const ExperimentConfig& cfg) {
  const CostSpec h = cfg.cost.build();
  const PayoffSpec payoff = cfg.payoff.build();
  ConvergenceOptions opt;
  opt.mc.paths = cfg.mc_paths;
  opt.mc.steps = cfg.mc_steps;
  opt.mc.seed = substream_seed(cfg.seed, "mc");
  opt.lower_bound_grid = cfg.lower_bound_grid;
  opt.grid = grid_of(cfg);
  opt.node_budget = cfg.node_budget;
  opt.skip_limit_estimate = cfg.skip_limit_estimate;
  const ConvergenceStudy study =
      convergence_study(h, cfg.c, payoff, cfg.scaling_periods, cfg.model, opt);
  RunResult r;
  json rows = json::array();
  for (const ConvergenceRow& row : study.rows) {
    rows.push_back({{"N", row.periods},
                    {"V_N", number(row.value)},
                    {"grid_error", number(row.grid_error)},
                    {"backend", row.backend},
                    {"lower_bound", number(row.lower_bound)},
                    {"lower_bound_se", number(row.lower_bound_se)},
                    {"best_limit_estimate", number(row.best_limit_estimate)},
                    {"best_candidate_id", row.best_candidate_id},
                    {"above_lower_bound", row.above_lower_bound}});
  }
  r.outputs["rows"] = rows;
  r.outputs["limit_note"] = LimitEstimate{}.note;
  r.csv = study.to_csv();
  return r;
}

}  // namespace

std::string to_string(Mode mode) {
  switch (mode) {
    case Mode::price: return "price";
    case Mode::dual: return "dual";
    case Mode::gap: return "gap";
    case Mode::lift_check: return "lift-check";
    case Mode::kusuoka_check: return "kusuoka-check";
    case Mode::scaling_study: return "scaling-study";
  }
  return "?";
}

Mode parse_mode(const std::string& text) {
  for (Mode m : {Mode::price, Mode::dual, Mode::gap, Mode::lift_check, Mode::kusuoka_check,
                 Mode::scaling_study}) {
    if (to_string(m) == text) return m;
  }
  throw ValidationError("'mode': unknown mode '" + text +
                        "' (expected price, dual, gap, lift-check, kusuoka-check or scaling-study)");
}

CostSpec CostParams::build() const {
  if (kind == "zero") return CostSpec::zero();
  if (kind == "proportional") return CostSpec::proportional(rate);
  if (kind == "quadratic") return CostSpec::quadratic(lambda);
  if (kind == "truncated_quadratic") return CostSpec::truncated_quadratic(lambda, cap);
  if (kind == "piecewise_linear") return CostSpec::piecewise_linear(breakpoints, slopes);
  if (kind == "custom") return CostSpec::tabulated(beta, values);
  throw ValidationError("unknown cost kind '" + kind + "'");
}

PayoffSpec PayoffParams::build() const {
  if (kind == "call") return PayoffSpec::call(strike);
  if (kind == "put") return PayoffSpec::put(strike);
  if (kind == "lookback_max") return PayoffSpec::lookback_max();
  if (kind == "asian_average") return PayoffSpec::asian_average(strike);
  if (kind == "constant") return PayoffSpec::constant(level);
  throw ValidationError("unknown payoff kind '" + kind + "'");
}

ExperimentConfig parse_config(const json& doc) {
  ExperimentConfig cfg;
  Section top(doc, "");
  int version = -1;
  top.read("schema_version", version);
  if (version != kSchemaVersion) {
    throw ValidationError("'schema_version' must be " + std::to_string(kSchemaVersion));
  }
  std::string mode = to_string(cfg.mode);
  top.read("mode", mode);
  cfg.mode = parse_mode(mode);
  top.read("seed", cfg.seed);
  top.read("output", cfg.output);
  top.read("threads", cfg.threads);
  top.read("budget", cfg.node_budget);
  top.read("slope_cap", cfg.c);

  Section model = top.child("model");
  model.read("s0", cfg.model.s0);
  model.read("periods", cfg.model.periods);
  model.read("sigma_low", cfg.model.sigma_low);
  model.read("sigma_high", cfg.model.sigma_high);
  model.read("refinement", cfg.model.refinement);
  model.finish();

  Section cost = top.child("cost");
  cost.read("kind", cfg.cost.kind);
  const std::string& ck = cfg.cost.kind;
  if (ck == "proportional") cost.read("rate", cfg.cost.rate);
  if (ck == "quadratic" || ck == "truncated_quadratic") cost.read("lambda", cfg.cost.lambda);
  if (ck == "truncated_quadratic") cost.read("cap", cfg.cost.cap);
  if (ck == "piecewise_linear") {
    cost.read("breakpoints", cfg.cost.breakpoints);
    cost.read("slopes", cfg.cost.slopes);
  }
  if (ck == "custom") {
    cost.read("beta", cfg.cost.beta);
    cost.read("values", cfg.cost.values);
  }
  cost.finish();

  Section payoff = top.child("payoff");
  payoff.read("kind", cfg.payoff.kind);
  const std::string& pk = cfg.payoff.kind;
  if (pk == "call" || pk == "put" || pk == "asian_average") payoff.read("strike", cfg.payoff.strike);
  if (pk == "constant") payoff.read("level", cfg.payoff.level);
  payoff.finish();

  Section price = top.child("price");
  price.read("backend", cfg.backend);
  price.read("grid_points", cfg.grid_points);
  price.read("grid_extent", cfg.grid_extent);
  price.finish();

  Section dual = top.child("dual");
  dual.read("budget", cfg.dual_budget);
  dual.read("starts", cfg.dual_starts);
  dual.finish();

  Section lift = top.child("lift");
  lift.read("cushion", cfg.cushion);
  lift.read("scenarios", cfg.lift_scenarios);
  lift.read("refinements", cfg.refinements);
  lift.finish();

  Section kus = top.child("kusuoka");
  kus.read("sample_paths", cfg.kusuoka_sample_paths);
  Section cand = kus.child("candidate");
  CandidateParams& cp = cfg.candidate;
  cand.read("kind", cp.kind);
  if (cp.kind == "constant") cand.read("sigma", cp.sigma);
  if (cp.kind == "tanh") {
    cand.read("base", cp.base);
    cand.read("amplitude", cp.amplitude);
  }
  if (cp.kind == "piecewise_constant") {
    cand.read("knots", cp.knots);
    cand.read("values", cp.values);
  }
  if (cp.kind == "running_max") {
    cand.read("level", cp.level);
    cand.read("below", cp.below);
    cand.read("above", cp.above);
  }
  cand.read("tail_delta", cp.tail_delta);
  cand.finish();
  kus.finish();

  Section sc = top.child("scaling");
  sc.read("periods", cfg.scaling_periods);
  sc.read("mc_paths", cfg.mc_paths);
  sc.read("mc_steps", cfg.mc_steps);
  sc.read("lower_bound_grid", cfg.lower_bound_grid);
  sc.read("skip_limit_estimate", cfg.skip_limit_estimate);
  sc.finish();

  Section tol = top.child("tolerances");
  tol.read("weak_duality", cfg.weak_duality_tol);
  tol.read("strong_duality", cfg.strong_duality_tol);
  tol.finish();
  top.finish();

  // Everything is validated through its owning module before any work starts.
  with_field("model", [&] {
    ModelParams m = cfg.model;
    if (cfg.mode == Mode::scaling_study) m.periods = std::max(m.periods, 1);
    m.validate();
    return 0;
  });
  with_field("cost", [&] { return cfg.cost.build(); });
  with_field("payoff", [&] { return cfg.payoff.build(); });
  if (cfg.threads < 1) throw ValidationError("'threads' must be >= 1");
  if (cfg.node_budget < 1) throw ValidationError("'budget' must be >= 1");
  if (cfg.backend != "dp" && cfg.backend != "lp") {
    throw ValidationError("'price.backend' must be dp or lp");
  }
  if (cfg.backend == "lp" && cfg.mode == Mode::price) {
    if (!cfg.cost.build().is_piecewise_linear()) {
      throw ValidationError("'price.backend': lp needs a zero, proportional or piecewise-linear cost");
    }
  }
  if (cfg.grid_points < 3) throw ValidationError("'price.grid_points' must be >= 3");
  if (cfg.grid_extent && !(*cfg.grid_extent > 0.0)) {
    throw ValidationError("'price.grid_extent' must be > 0");
  }
  if (cfg.dual_starts < 1) throw ValidationError("'dual.starts' must be >= 1");
  if (!(cfg.cushion >= 0.0)) throw ValidationError("'lift.cushion' must be >= 0");
  for (int k : cfg.refinements) {
    if (k < 1) throw ValidationError("'lift.refinements' entries must be >= 1");
  }
  if (!(cfg.c > 0.0)) throw ValidationError("'slope_cap' must be > 0");
  if (cfg.mode == Mode::kusuoka_check) {
    with_field("kusuoka.candidate", [&] { return build_candidate(cfg.candidate, cfg.model.sigma_low); });
  }
  if (cfg.scaling_periods.empty()) throw ValidationError("'scaling.periods' must not be empty");
  for (int n : cfg.scaling_periods) {
    if (n < 1) throw ValidationError("'scaling.periods' entries must be >= 1");
  }
  if (cfg.mc_paths < 2) throw ValidationError("'scaling.mc_paths' must be >= 2");
  if (cfg.mc_steps < 1) throw ValidationError("'scaling.mc_steps' must be >= 1");
  if (cfg.lower_bound_grid < 1) throw ValidationError("'scaling.lower_bound_grid' must be >= 1");
  if (!(cfg.weak_duality_tol >= 0.0)) throw ValidationError("'tolerances.weak_duality' must be >= 0");
  if (!(cfg.strong_duality_tol >= 0.0)) {
    throw ValidationError("'tolerances.strong_duality' must be >= 0");
  }
  return cfg;
}

json config_to_json(const ExperimentConfig& cfg) {
  json cost = {{"kind", cfg.cost.kind}};
  const std::string& ck = cfg.cost.kind;
  if (ck == "proportional") cost["rate"] = cfg.cost.rate;
  if (ck == "quadratic" || ck == "truncated_quadratic") cost["lambda"] = cfg.cost.lambda;
  if (ck == "truncated_quadratic") cost["cap"] = cfg.cost.cap;
  if (ck == "piecewise_linear") {
    cost["breakpoints"] = cfg.cost.breakpoints;
    cost["slopes"] = cfg.cost.slopes;
  }
  if (ck == "custom") {
    cost["beta"] = cfg.cost.beta;
    cost["values"] = cfg.cost.values;
  }

  json payoff = {{"kind", cfg.payoff.kind}};
  const std::string& pk = cfg.payoff.kind;
  if (pk == "call" || pk == "put" || pk == "asian_average") payoff["strike"] = cfg.payoff.strike;
  if (pk == "constant") payoff["level"] = cfg.payoff.level;

  const CandidateParams& cp = cfg.candidate;
  json cand = {{"kind", cp.kind}};
  if (cp.kind == "constant") cand["sigma"] = cp.sigma;
  if (cp.kind == "tanh") {
    cand["base"] = cp.base;
    cand["amplitude"] = cp.amplitude;
  }
  if (cp.kind == "piecewise_constant") {
    cand["knots"] = cp.knots;
    cand["values"] = cp.values;
  }
  if (cp.kind == "running_max") {
    cand["level"] = cp.level;
    cand["below"] = cp.below;
    cand["above"] = cp.above;
  }
  if (cp.tail_delta) cand["tail_delta"] = *cp.tail_delta;

  json price = {{"backend", cfg.backend}, {"grid_points", cfg.grid_points}};
  if (cfg.grid_extent) price["grid_extent"] = *cfg.grid_extent;

  return {
      {"schema_version", kSchemaVersion},
      {"mode", to_string(cfg.mode)},
      {"seed", cfg.seed},
      {"output", cfg.output},
      {"threads", cfg.threads},
      {"budget", cfg.node_budget},
      {"slope_cap", cfg.c},
      {"model",
       {{"s0", cfg.model.s0},
        {"periods", cfg.model.periods},
        {"sigma_low", cfg.model.sigma_low},
        {"sigma_high", cfg.model.sigma_high},
        {"refinement", cfg.model.refinement}}},
      {"cost", cost},
      {"payoff", payoff},
      {"price", price},
      {"dual", {{"budget", cfg.dual_budget}, {"starts", cfg.dual_starts}}},
      {"lift",
       {{"cushion", cfg.cushion},
        {"scenarios", cfg.lift_scenarios},
        {"refinements", cfg.refinements}}},
      {"kusuoka", {{"sample_paths", cfg.kusuoka_sample_paths}, {"candidate", cand}}},
      {"scaling",
       {{"periods", cfg.scaling_periods},
        {"mc_paths", cfg.mc_paths},
        {"mc_steps", cfg.mc_steps},
        {"lower_bound_grid", cfg.lower_bound_grid},
        {"skip_limit_estimate", cfg.skip_limit_estimate}}},
      {"tolerances",
       {{"weak_duality", cfg.weak_duality_tol}, {"strong_duality", cfg.strong_duality_tol}}},
  };
}

RunResult execute(const ExperimentConfig& cfg) {
  switch (cfg.mode) {
    case Mode::price: return run_price(cfg);
    case Mode::dual: return run_dual(cfg);
    case Mode::gap: return run_gap(cfg);
    case Mode::lift_check: return run_lift_check(cfg);
    case Mode::kusuoka_check: return run_kusuoka_check(cfg);
    case Mode::scaling_study: return run_scaling_study(cfg);
  }
  throw InternalError("unhandled mode");
}

int run(const ExperimentConfig& cfg, std::ostream& err) {
  try {
    const auto start = std::chrono::steady_clock::now();
    RunResult result = execute(cfg);
    const auto wall = std::chrono::duration<double, std::milli>(
        std::chrono::steady_clock::now() - start).count();
    json record = {
        {"schema_version", kSchemaVersion},
        {"version", kLibraryVersion},
        {"seed", cfg.seed},
        {"substreams",
         {{"scenarios", substream_seed(cfg.seed, "scenarios")},
          {"dual_search", substream_seed(cfg.seed, "dual_search")},
          {"mc", substream_seed(cfg.seed, "mc")},
          {"kusuoka_paths", substream_seed(cfg.seed, "kusuoka_paths")}}},
        {"wall_ms", wall},
        {"inputs", config_to_json(cfg)},
        {"outputs", std::move(result.outputs)},
    };
    std::ofstream json_out(cfg.output + ".json");
    std::ofstream csv_out(cfg.output + ".csv");
    if (!json_out || !csv_out) {
      err << "error: cannot write output files with prefix '" << cfg.output << "'\n";
      return 2;
    }
    json_out << record.dump(2) << "\n";
    csv_out << result.csv;
    return 0;
  } catch (const ValidationError& e) {
    err << "invalid input: " << e.what() << "\n";
    return 2;
  } catch (const DomainError& e) {
    err << "domain error: " << e.what() << "\n";
    return 2;
  } catch (const PreconditionError& e) {
    err << "precondition failed: " << e.what() << "\n";
    return 2;
  } catch (const ShapeError& e) {
    err << "shape mismatch: " << e.what() << "\n";
    return 2;
  } catch (const CapacityError& e) {
    err << "capacity exceeded: " << e.what() << "\n";
    return 3;
  } catch (const ContractViolation& e) {
    err << "numerical contract violated: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return 1;
  }
}

int main_entry(int argc, char** argv) {
  CLI::App app{"Superhedging prices, duality checks and scaling studies"};
  std::string config_path;
  std::optional<std::string> mode, out;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::optional<std::size_t> budget;
  app.add_option("--config", config_path, "Experiment config (JSON)")->required();
  app.add_option("--mode", mode, "price, dual, gap, lift-check, kusuoka-check or scaling-study");
  app.add_option("--seed", seed, "Master seed");
  app.add_option("--out", out, "Output prefix; writes <prefix>.json and <prefix>.csv");
  app.add_option("--threads", threads, "Worker threads");
  app.add_option("--budget", budget, "Maximum number of tree leaves");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  std::ifstream in(config_path);
  if (!in) {
    std::cerr << "invalid input: cannot read config '" << config_path << "'\n";
    return 2;
  }
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    std::cerr << "invalid input: config is not valid JSON: " << e.what() << "\n";
    return 2;
  }
  if (doc.is_object()) {
    if (mode) doc["mode"] = *mode;
    if (seed) doc["seed"] = *seed;
    if (out) doc["output"] = *out;
    if (threads) doc["threads"] = *threads;
    if (budget) doc["budget"] = *budget;
  }
  ExperimentConfig cfg;
  try {
    cfg = parse_config(doc);
  } catch (const Error& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return 2;
  }
  const int status = run(cfg, std::cerr);
  if (status == 0) std::cout << cfg.output << ".json\n" << cfg.output << ".csv\n";
  return status;
}

}  // namespace superhedge::cli
