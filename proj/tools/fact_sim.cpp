// fact_sim: command-line front end for the scenario runners.
//
// Exit codes: 0 success, 1 a verify check failed, 2 configuration error,
// 3 internal invariant violation.

#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "fact/error.hpp"
#include "fact/harness/config.hpp"
#include "fact/harness/scenarios.hpp"
#include "fact/harness/svg.hpp"
#include "fact/harness/verify.hpp"

namespace {

namespace fs = std::filesystem;
using namespace fact::harness;

constexpr int kExitCheckFailed = 1;
constexpr int kExitConfig = 2;
constexpr int kExitInternal = 3;

struct CommonFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> trials;
  std::optional<std::string> out;
  std::optional<unsigned> workers;
  std::optional<std::size_t> free_rider;
  bool paper_scale = false;
  bool svg = false;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config, "scenario file")->required()->check(CLI::ExistingFile);
  cmd->add_option("--seed", f.seed, "master seed (overrides the config)");
  cmd->add_option("--trials", f.trials, "Monte Carlo trials per point")->check(CLI::PositiveNumber);
  cmd->add_option("--out", f.out, "output directory");
  cmd->add_option("--workers", f.workers, "worker threads; results do not depend on it")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--free-rider", f.free_rider,
                  "agent index that signs its contract and then contributes no data");
  cmd->add_flag("--paper-scale", f.paper_scale, "run 100,000 trials per point");
  cmd->add_flag("--svg", f.svg, "also write SVG charts");
}

ScenarioConfig resolve(const CommonFlags& f) {
  ScenarioConfig cfg = load_config(f.config);
  if (f.seed) cfg.seed = *f.seed;
  if (f.paper_scale) cfg.trials = kFullScaleTrials;
  if (f.trials) cfg.trials = *f.trials;
  if (cfg.trials < 2) throw fact::ConfigError("--trials must be at least 2", "trials");
  if (f.out) cfg.out_dir = *f.out;
  if (f.workers) cfg.workers = *f.workers;
  if (f.free_rider) {
    if (*f.free_rider >= cfg.n()) {
      throw fact::ConfigError("--free-rider: agent index out of range", "free_rider_agent");
    }
    cfg.free_rider_agent = *f.free_rider;
  }
  return cfg;
}

void emit(const ResultTable& table, const fs::path& path) {
  table.write(path);
  std::cout << "wrote " << path.string() << " (" << table.row_count() << " rows)\n";
}

void chart(const ResultTable& table, const fs::path& path, const std::string& title,
           const std::string& x, const std::vector<std::string>& ys) {
  std::vector<Series> series;
  for (const auto& y : ys) series.push_back({y, table.column(x), table.column(y)});
  write_text(path, line_chart(title, x, ys.size() == 1 ? ys[0] : "loss", series));
  std::cout << "wrote " << path.string() << "\n";
}

ResultTable without_aggregate(const ResultTable& table) {
  ResultTable out(table.columns());
  for (std::size_t r = 0; r < table.row_count(); ++r) {
    if (table.at(r, "agent") >= 0.0) out.add_row(table.row(r));
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Simulator for a truthful, free-rider-free federated learning mechanism"};
  app.require_subcommand(1);

  CommonFlags verify_flags, sweep_flags, penalty_flags, compare_flags, train_flags;
  bool corrupt_lambda = false;

  auto* verify = app.add_subcommand("verify", "run every invariant check and write verify.json");
  add_common(verify, verify_flags);
  verify->add_flag("--corrupt-lambda", corrupt_lambda,
                   "double every penalty scalar (negative control: IR-gap checks must fail)");
  auto* sweep = app.add_subcommand("sweep", "net improvement vs misreported cost (sweep.csv)");
  add_common(sweep, sweep_flags);
  auto* penalty = app.add_subcommand("penalty-curve", "penalty plus data cost vs m (penalty.csv)");
  add_common(penalty, penalty_flags);
  auto* compare = app.add_subcommand("compare", "local vs federated vs mechanism loss (compare.csv)");
  add_common(compare, compare_flags);
  auto* train = app.add_subcommand("train", "end-to-end simulated training and settlement");
  add_common(train, train_flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (verify->parsed()) {
      const ScenarioConfig cfg = resolve(verify_flags);
      VerifyOptions options;
      if (corrupt_lambda) options.lambda_scale = 2.0;
      const VerifyReport report = run_verify(cfg, options);
      for (const auto& c : report.checks) {
        std::cout << (c.passed ? "PASS " : "FAIL ") << c.name << "  residual=" << c.residual
                  << " tolerance=" << c.tolerance << "\n";
      }
      const fs::path path = fs::path(cfg.out_dir) / "verify.json";
      write_text(path, report.to_json());
      std::cout << "wrote " << path.string() << "\n";
      return report.passed() ? 0 : kExitCheckFailed;
    }
    if (sweep->parsed()) {
      const ScenarioConfig cfg = resolve(sweep_flags);
      const ResultTable table = run_sweep(cfg);
      emit(table, fs::path(cfg.out_dir) / "sweep.csv");
      if (sweep_flags.svg) {
        chart(table, fs::path(cfg.out_dir) / "sweep.svg", "Net improvement over local training",
              "misreport_pct", {"mean_net_improvement"});
      }
      return 0;
    }
    if (penalty->parsed()) {
      const ScenarioConfig cfg = resolve(penalty_flags);
      const ResultTable table = run_penalty_curve(cfg);
      emit(table, fs::path(cfg.out_dir) / "penalty.csv");
      if (penalty_flags.svg) {
        chart(table, fs::path(cfg.out_dir) / "penalty.svg", "Penalty plus data cost", "m",
              {"penalty_plus_cost"});
      }
      return 0;
    }
    if (compare->parsed()) {
      const ScenarioConfig cfg = resolve(compare_flags);
      const ResultTable table = run_compare(cfg);
      emit(table, fs::path(cfg.out_dir) / "compare.csv");
      if (compare_flags.svg) {
        chart(without_aggregate(table), fs::path(cfg.out_dir) / "compare.svg",
              "Per-agent loss", "agent", {"local_loss", "federated_loss", "fact_mean_loss"});
      }
      return 0;
    }
    if (train->parsed()) {
      const ScenarioConfig cfg = resolve(train_flags);
      const TrainResult result = run_train(cfg);
      const fs::path dir(cfg.out_dir);
      emit(result.train, dir / "train.csv");
      emit(result.breakdowns, dir / "breakdowns.csv");
      write_text(dir / "ledger.json", result.ledger_json);
      std::cout << "wrote " << (dir / "ledger.json").string() << "\n";
      if (train_flags.svg) {
        chart(result.train, dir / "train.svg", "Time-averaged squared gradient norm", "round",
              {"avg_sq_grad_norm"});
      }
      return 0;
    }
  } catch (const fact::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const fact::ConfigurationError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const fact::InvariantViolation& e) {
    std::cerr << "invariant violation: " << e.what() << "\n";
    return kExitInternal;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kExitInternal;
  }
  return 0;
}
