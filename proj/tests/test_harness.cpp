#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>

#include "fact/equilibrium.hpp"
#include "fact/error.hpp"
#include "fact/harness/config.hpp"
#include "fact/harness/result_table.hpp"
#include "fact/harness/scenarios.hpp"
#include "fact/harness/verify.hpp"

using namespace fact;
using namespace fact::harness;
namespace fs = std::filesystem;

namespace {

const std::string kMinimal =
    "k = 2\n"
    "alpha = 1\n"
    "agent_cost = 1.024e-07\n"
    "n = 16\n";

fs::path config_path(const std::string& name) { return fs::path(FACT_CONFIG_DIR) / name; }

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("fact_harness_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

// Line and key of the error raised by parsing text.
std::pair<int, std::string> config_error(const std::string& text) {
  try {
    (void)parse_config(text, "t.cfg");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("t.cfg") != std::string::npos);
    return {e.line(), e.key()};
  }
  FAIL("expected a ConfigError");
  return {};
}

ScenarioConfig quick(const std::string& name, std::size_t trials = 4000) {
  ScenarioConfig cfg = load_config(config_path(name));
  cfg.trials = trials;
  return cfg;
}

}  // namespace

TEST_CASE("config parsing") {
  const auto cfg = parse_config(kMinimal + "# comment\n\nseed = 7  # trailing\n", "t.cfg");
  CHECK(cfg.n() == 16);
  CHECK(cfg.seed == 7);
  CHECK(cfg.trials == 20000);
  CHECK(!cfg.fedsim);
  const auto grid = cfg.misreport_grid();
  CHECK(grid.size() == 21);
  CHECK(grid[10] == 0.0);
  CHECK(grid.front() == -50.0);
  CHECK(grid.back() == 50.0);

  const auto listed = parse_config("k = 2\nalpha = 0.5\nagent_costs = 1, 2, 3\n", "t.cfg");
  CHECK(listed.true_costs == std::vector<double>{1, 2, 3});
}

TEST_CASE("config errors name the key and line") {
  CHECK(config_error(kMinimal + "bogus = 1\n") == std::pair<int, std::string>{5, "bogus"});
  CHECK(config_error(kMinimal + "seed = 1\nseed = 2\n") == std::pair<int, std::string>{6, "seed"});
  CHECK(config_error(kMinimal + "seed =\n").second == "seed");
  CHECK(config_error(kMinimal + "no equals sign\n").first == 5);
  CHECK(config_error("k = 2\nalpha = 2\nagent_cost = 1\nn = 4\n") ==
        std::pair<int, std::string>{2, "alpha"});
  CHECK(config_error(kMinimal + "misreport_step_pct = 7\n").second == "misreport_step_pct");
  CHECK(config_error(kMinimal + "trials = 1\n").second == "trials");
  CHECK(config_error(kMinimal + "fedsim.step_size = 0.05\nfedsim.noise_variance = 3\n").second ==
        "fedsim.noise_variance");
  CHECK(config_error(kMinimal + "fedsim.step_size = 0.5\n").second == "fedsim.step_size");
  CHECK(config_error(kMinimal + "cost_distribution = empirical-list\n").second ==
        "cost_distribution");
  CHECK(config_error("alpha = 1\nagent_cost = 1\nn = 4\n") == std::pair<int, std::string>{0, "k"});
  CHECK_THROWS_AS(load_config("/nonexistent/x.cfg"), ConfigError);
}

TEST_CASE("empirical multipliers load relative to the config file") {
  const fs::path dir = scratch("empirical");
  std::ofstream(dir / "mult.txt") << "0.9\n# comment\n1.1\n";
  std::ofstream(dir / "s.cfg") << kMinimal
                               << "cost_distribution = empirical-list\n"
                                  "cost_distribution.file = mult.txt\n";
  const auto cfg = load_config(dir / "s.cfg");
  CHECK(cfg.belief.multipliers == std::vector<double>{0.9, 1.1});
  CHECK(cfg.belief.for_cost(2.0).cdf(2.0) == doctest::Approx(0.5));
}

TEST_CASE("scenario hash tracks every setting except the worker count") {
  auto a = parse_config(kMinimal, "a.cfg");
  auto b = parse_config(kMinimal, "b.cfg");
  CHECK(a.hash() == b.hash());
  CHECK(a.hash().size() == 16);
  b.workers = 8;
  CHECK(a.hash() == b.hash());
  b.seed = 2;
  CHECK(a.hash() != b.hash());
  b = a;
  b.true_costs[3] = std::nextafter(b.true_costs[3], 1.0);
  CHECK(a.hash() != b.hash());
}

TEST_CASE("format_double round-trips") {
  for (double x : {0.0, 1.0, 0.1, 1.024e-07, 1.5586010620307636e-06, -3.5e300}) {
    CHECK(std::stod(format_double(x)) == x);
  }
}

TEST_CASE("result table CSV round-trip") {
  ResultTable t({"a", "b"});
  t.add_row({1.0, 0.1});
  t.add_row({-2.5, 1.0 / 3.0});
  t.set_meta("seed", "3");
  t.set_unit("b", "loss");
  CHECK(t.to_csv().rfind("a,b\n", 0) == 0);
  const fs::path dir = scratch("table");
  t.write(dir / "t.csv");
  CHECK(fs::exists(dir / "t.meta.json"));
  CHECK(ResultTable::read(dir / "t.csv") == t);
  CHECK(ResultTable::from_csv(t.to_csv()).column("b") == t.column("b"));

  CHECK_THROWS(ResultTable({"a", "a"}));
  CHECK_THROWS(ResultTable({"x,y"}));
  CHECK_THROWS(t.add_row({1.0}));
  CHECK_THROWS(t.column("missing"));
  CHECK_THROWS(ResultTable::from_csv("a,b\n1\n"));
}

TEST_CASE("sweep peaks at truthful reporting") {
  const auto table = run_sweep(quick("cifar10.cfg"));
  CHECK(table.columns() == std::vector<std::string>{"misreport_pct", "reported_cost", "win_prob",
                                                    "mean_net_improvement", "stderr"});
  CHECK(table.row_count() == 21);
  const auto net = table.column("mean_net_improvement");
  const auto best = std::max_element(net.begin(), net.end()) - net.begin();
  CHECK(table.at(best, "misreport_pct") == 0.0);
  CHECK(table.meta().at("scenario_hash") == quick("cifar10.cfg").hash());
}

TEST_CASE("penalty curve is minimized near the local optimum") {
  for (const char* name : {"cifar10.cfg", "ham10000.cfg"}) {
    const auto cfg = quick(name);
    const auto table = run_penalty_curve(cfg);
    CHECK(table.row_count() == cfg.penalty_grid_points);
    const auto m = table.column("m");
    const auto v = table.column("penalty_plus_cost");
    const auto best = std::min_element(v.begin(), v.end()) - v.begin();
    const double m_star = optimal_local_data(cfg.true_costs[0], cfg.k);
    const double spacing = m[1] - m[0];
    CHECK(std::abs(m[best] - m_star) <= spacing);
    CHECK(v.front() > v[best]);
  }
}

TEST_CASE("comparison ordering") {
  const auto table = run_compare(quick("cifar10.cfg"));
  CHECK(table.row_count() == 17);
  for (std::size_t r = 0; r < table.row_count(); ++r) {
    CHECK(table.at(r, "federated_loss") < table.at(r, "fact_mean_loss"));
    CHECK(table.at(r, "fact_mean_loss") < table.at(r, "local_loss"));
  }
  CHECK(table.at(16, "agent") == -1.0);
}

TEST_CASE("train is deterministic and independent of the worker count") {
  auto cfg = quick("cifar10.cfg");
  cfg.fedsim->rounds = 30;
  const auto a = run_train(cfg);
  const auto b = run_train(cfg);
  cfg.workers = 8;
  const auto c = run_train(cfg);
  CHECK(a.train.to_csv() == b.train.to_csv());
  CHECK(a.train.to_csv() == c.train.to_csv());
  CHECK(a.breakdowns.to_csv() == c.breakdowns.to_csv());
  CHECK(a.ledger_json == c.ledger_json);
  CHECK(a.ledger.consistent());
  CHECK(a.train.row_count() == 30);

  auto no_task = cfg;
  no_task.fedsim.reset();
  CHECK_THROWS_AS(run_train(no_task), ConfigError);
}

TEST_CASE("train penalizes a free rider") {
  auto cfg = quick("cifar10.cfg");
  cfg.fedsim->rounds = 20;
  cfg.free_rider_agent = 5;
  const auto r = run_train(cfg);
  CHECK(r.run.weights[5] == 0.0);
  CHECK(r.breakdowns.at(5, "aggregation_weight") == 0.0);
  CHECK(r.penalties[5] > r.at_optimum_penalties[5] + cfg.true_costs[5] * 3125.0);
  // Everyone else is charged against the smaller actual pool.
  CHECK(r.penalties[4] != r.at_optimum_penalties[4]);
  cfg.free_rider_agent.reset();
  const auto honest = run_train(cfg);
  CHECK(honest.penalties == honest.at_optimum_penalties);
}

TEST_CASE("verify passes on the shipped scenarios and catches a corrupted penalty") {
  for (const char* name : {"cifar10.cfg", "mnist.cfg", "ham10000.cfg"}) {
    const auto report = run_verify(quick(name, 20000));
    for (const auto& c : report.checks) {
      INFO(name << " " << c.name << " residual=" << c.residual << " " << c.detail);
      CHECK(c.passed);
    }
  }
  VerifyOptions corrupt;
  corrupt.lambda_scale = 2.0;
  const auto report = run_verify(quick("cifar10.cfg", 20000), corrupt);
  CHECK_FALSE(report.passed());
  for (const auto& c : report.checks) {
    if (c.name.rfind("ir_gap", 0) == 0) CHECK_FALSE(c.passed);
  }
}
