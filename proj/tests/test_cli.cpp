#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "superhedge/cli.hpp"
#include "superhedge/errors.hpp"

using namespace superhedge;
using nlohmann::json;

namespace {

json ln2_config(double rate) {
  const double l2 = std::log(2.0);
  return {{"schema_version", 1},
          {"mode", "gap"},
          {"seed", 3},
          {"model", {{"s0", 1.0}, {"periods", 1}, {"sigma_low", l2}, {"sigma_high", l2}}},
          {"cost", {{"kind", "proportional"}, {"rate", rate}}},
          {"payoff", {{"kind", "call"}, {"strike", 1.0}}}};
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int run_main(std::vector<std::string> args) {
  args.insert(args.begin(), "superhedge");
  std::vector<char*> argv;
  for (std::string& a : args) argv.push_back(a.data());
  return cli::main_entry(static_cast<int>(argv.size()), argv.data());
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  out << text;
}

}  // namespace

TEST(Config, ParseAndRoundTrip) {
  json doc = ln2_config(0.1);
  doc["dual"] = {{"budget", 500}, {"starts", 2}};
  doc["kusuoka"] = {{"candidate", {{"kind", "tanh"}, {"base", 0.25}, {"amplitude", 0.1},
                                   {"tail_delta", 0.01}}}};
  doc["scaling"] = {{"periods", {2, 4}}, {"skip_limit_estimate", true}};
  const cli::ExperimentConfig cfg = cli::parse_config(doc);
  EXPECT_EQ(cfg.mode, cli::Mode::gap);
  EXPECT_EQ(cfg.seed, 3u);
  EXPECT_EQ(cfg.dual_budget, 500u);
  EXPECT_EQ(cfg.candidate.kind, "tanh");
  EXPECT_EQ(*cfg.candidate.tail_delta, 0.01);
  EXPECT_EQ(cfg.scaling_periods, (std::vector<int>{2, 4}));
  EXPECT_EQ(cfg.cushion, 1e-6);
  const json again = cli::config_to_json(cfg);
  EXPECT_EQ(cli::config_to_json(cli::parse_config(again)), again);
}

TEST(Config, ModeNames) {
  for (cli::Mode m : {cli::Mode::price, cli::Mode::dual, cli::Mode::gap, cli::Mode::lift_check,
                      cli::Mode::kusuoka_check, cli::Mode::scaling_study}) {
    EXPECT_EQ(cli::parse_mode(cli::to_string(m)), m);
  }
  EXPECT_EQ(cli::to_string(cli::Mode::lift_check), "lift-check");
  EXPECT_THROW(cli::parse_mode("lift_check"), ValidationError);
}

TEST(Config, ErrorsNameTheField) {
  json doc = ln2_config(0.1);
  doc["cost"]["rte"] = 0.2;
  try {
    cli::parse_config(doc);
    FAIL() << "expected ValidationError";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("cost.rte"), std::string::npos) << e.what();
  }
  json bad_version = ln2_config(0.1);
  bad_version["schema_version"] = 2;
  EXPECT_THROW(cli::parse_config(bad_version), ValidationError);
  json bad_model = ln2_config(0.1);
  bad_model["model"]["sigma_low"] = 1.0;
  try {
    cli::parse_config(bad_model);
    FAIL() << "expected ValidationError";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("model"), std::string::npos) << e.what();
  }
  json bad_type = ln2_config(0.1);
  bad_type["seed"] = "three";
  EXPECT_THROW(cli::parse_config(bad_type), ValidationError);
}

TEST(Execute, GapModeOnOneStepTree) {
  const cli::RunResult r = cli::execute(cli::parse_config(ln2_config(0.1)));
  EXPECT_NEAR(r.outputs["V"].get<double>(), 0.4, 1e-9);
  EXPECT_NEAR(r.outputs["U"].get<double>(), 0.4, 1e-9);
  EXPECT_EQ(r.outputs["measure_source"], "lp");
  EXPECT_EQ(r.csv.substr(0, r.csv.find('\n')), "V,U,gap");
}

TEST(Execute, ConstantPayoffPricesAtItsLevel) {
  json doc = ln2_config(0.05);
  doc["mode"] = "price";
  doc["model"]["periods"] = 2;
  doc["model"]["sigma_low"] = 0.1;
  doc["model"]["sigma_high"] = 0.2;
  doc["payoff"] = {{"kind", "constant"}, {"level", 2.0}};
  const cli::RunResult r = cli::execute(cli::parse_config(doc));
  EXPECT_NEAR(r.outputs["V"].get<double>(), 2.0, 1e-12);
  EXPECT_EQ(r.csv.substr(0, r.csv.find('\n')), "n,node,stock,holding,wealth");
}

TEST(Execute, EveryModeRunsOnSmallInputs) {
  json doc = ln2_config(0.1);
  doc["model"]["periods"] = 2;
  doc["model"]["sigma_low"] = 0.1;
  doc["model"]["sigma_high"] = 0.2;
  doc["cost"] = {{"kind", "quadratic"}, {"lambda", 1.0}};
  doc["dual"] = {{"budget", 300}};
  doc["lift"] = {{"scenarios", 50}, {"refinements", {1, 2}}};
  doc["kusuoka"] = {{"sample_paths", 20}, {"candidate", {{"kind", "constant"}, {"sigma", 0.15}}}};
  doc["scaling"] = {{"periods", {2, 4}}, {"mc_paths", 200}, {"mc_steps", 8}};
  for (const char* mode : {"price", "dual", "gap", "lift-check", "kusuoka-check", "scaling-study"}) {
    doc["mode"] = mode;
    const cli::RunResult r = cli::execute(cli::parse_config(doc));
    EXPECT_FALSE(r.csv.empty()) << mode;
    EXPECT_FALSE(r.outputs.empty()) << mode;
  }
}

TEST(Run, WritesRecordAndIsReproducible) {
  json doc = ln2_config(0.1);
  doc["mode"] = "dual";
  doc["cost"] = {{"kind", "quadratic"}, {"lambda", 1.0}};
  doc["dual"] = {{"budget", 400}};
  cli::ExperimentConfig cfg = cli::parse_config(doc);
  std::ostringstream err;
  cfg.output = "cli_repro_a";
  ASSERT_EQ(cli::run(cfg, err), 0) << err.str();
  cfg.output = "cli_repro_b";
  ASSERT_EQ(cli::run(cfg, err), 0) << err.str();
  EXPECT_EQ(slurp("cli_repro_a.csv"), slurp("cli_repro_b.csv"));
  const json rec = json::parse(slurp("cli_repro_a.json"));
  EXPECT_EQ(rec["schema_version"], 1);
  EXPECT_EQ(rec["seed"], 3);
  EXPECT_TRUE(rec["substreams"].contains("dual_search"));
  EXPECT_EQ(rec["inputs"]["mode"], "dual");
  EXPECT_TRUE(rec["outputs"].contains("U_search"));
}

TEST(MainEntry, ExitCodes) {
  write_file("cli_ok.json", ln2_config(0.1).dump());
  EXPECT_EQ(run_main({"--config", "cli_ok.json", "--out", "cli_ok_out"}), 0);
  EXPECT_EQ(json::parse(slurp("cli_ok_out.json"))["outputs"]["measure_source"], "lp");

  EXPECT_EQ(run_main({"--config", "missing.json"}), 2);
  EXPECT_EQ(run_main({"--config", "cli_ok.json", "--mode", "bogus"}), 2);
  write_file("cli_broken.json", "{ not json");
  EXPECT_EQ(run_main({"--config", "cli_broken.json"}), 2);
  EXPECT_EQ(run_main({}), 2);

  json big = ln2_config(0.1);
  big["mode"] = "price";
  big["model"]["periods"] = 12;
  big["model"]["sigma_low"] = 0.1;
  big["model"]["sigma_high"] = 0.2;
  write_file("cli_big.json", big.dump());
  EXPECT_EQ(run_main({"--config", "cli_big.json", "--budget", "1000", "--out", "cli_big_out"}), 3);
}
