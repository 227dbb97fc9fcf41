#pragma once

// Scenario runners behind the CLI subcommands. Each returns in-memory tables;
// writing files is left to the caller so that all output happens from one
// thread after the computation has joined.

#include <string>
#include <vector>

#include "fact/fedsim.hpp"
#include "fact/harness/config.hpp"
#include "fact/harness/result_table.hpp"
#include "fact/mechanism.hpp"

namespace fact::harness {

// Every agent reports truthfully and contributes its local optimum.
std::vector<AgentProfile> truthful_roster(const ScenarioConfig& cfg);
std::vector<CostDistribution> beliefs(const ScenarioConfig& cfg);

// sweep.csv: one row per misreport percentage of the focus agent.
ResultTable run_sweep(const ScenarioConfig& cfg);

// penalty.csv: penalty plus data cost of the focus agent on [0, 2 m*].
ResultTable run_penalty_curve(const ScenarioConfig& cfg);

// compare.csv: per-agent rows, then an aggregate row with agent = -1.
ResultTable run_compare(const ScenarioConfig& cfg);

struct TrainResult {
  ResultTable train;       // train.csv
  ResultTable breakdowns;  // breakdowns.csv
  std::string ledger_json;
  TrainingRun run;
  Settlement settlement;
  ServerLedger ledger;
  std::vector<double> penalties;
  std::vector<double> at_optimum_penalties;
};

// Algorithm pipeline end to end: lambdas, penalties, fees, training,
// competition, settlement. Requires the fedsim block.
TrainResult run_train(const ScenarioConfig& cfg);

SyntheticTask make_task(const FedsimSpec& spec);

// Metadata common to every table produced from cfg.
void stamp(ResultTable& table, const ScenarioConfig& cfg, const std::string& command);

}  // namespace fact::harness
