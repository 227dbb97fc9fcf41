#include "fact/harness/scenarios.hpp"

#include <cmath>
#include <numeric>

#include <json.hpp>

#include "fact/equilibrium.hpp"
#include "fact/error.hpp"
#include "fact/loss.hpp"

namespace fact::harness {

namespace {

SyntheticOptions synthetic_options(const ScenarioConfig& cfg) {
  SyntheticOptions o;
  o.trials = cfg.trials;
  o.seed = cfg.seed;
  o.fixed_pool = cfg.fixed_pool;
  o.pool_size = cfg.pool_size;
  o.workers = cfg.workers;
  return o;
}

}  // namespace

std::vector<AgentProfile> truthful_roster(const ScenarioConfig& cfg) {
  std::vector<AgentProfile> roster;
  roster.reserve(cfg.n());
  for (double c : cfg.true_costs) {
    roster.push_back(AgentProfile::truthful(c, optimal_local_data(c, cfg.k)));
  }
  return roster;
}

std::vector<CostDistribution> beliefs(const ScenarioConfig& cfg) {
  std::vector<CostDistribution> out;
  out.reserve(cfg.n());
  for (double c : cfg.true_costs) out.push_back(cfg.belief.for_cost(c));
  return out;
}

void stamp(ResultTable& table, const ScenarioConfig& cfg, const std::string& command) {
  table.set_meta("artifact_version", kArtifactVersion);
  table.set_meta("command", command);
  table.set_meta("scenario_hash", cfg.hash());
  table.set_meta("seed", std::to_string(cfg.seed));
  table.set_meta("trials", std::to_string(cfg.trials));
  table.set_meta("config", cfg.source);
}

ResultTable run_sweep(const ScenarioConfig& cfg) {
  const MechanismConstants constants = cfg.constants();
  const std::size_t i = cfg.focus_agent;
  const double c = cfg.true_costs[i];
  const auto belief = beliefs(cfg);
  const double baseline = local_loss(optimal_local_data(c, cfg.k), c, cfg.k);

  ResultTable table({"misreport_pct", "reported_cost", "win_prob", "mean_net_improvement",
                     "stderr"});
  for (double pct : cfg.misreport_grid()) {
    const double reported = c * (1.0 + pct / 100.0);
    std::vector<AgentProfile> roster = truthful_roster(cfg);
    // The contract binds the agent to the amount the server expects from
    // its report.
    roster[i] = AgentProfile(c, reported, optimal_local_data(reported, cfg.k));
    roster = assign_lambdas(roster, constants);
    const auto fees = collect_fees(roster, constants).full();
    const double sum_others = others_sum(roster, i);
    const double pfl = pfl_loss(roster[i].data_amount(), c, reported,
                                roster[i].assigned_lambda(), sum_others, cfg.k)
                           .total();
    const auto outcome =
        run_competition_synthetic(roster, belief, fees, synthetic_options(cfg));
    const auto& stats = outcome.agents[i];
    table.add_row({pct, reported, win_probability(reported, belief[i]),
                   baseline - (pfl + stats.mean_transfer), stats.transfer_stderr});
  }
  stamp(table, cfg, "sweep");
  table.set_unit("misreport_pct", "percent of true cost");
  table.set_unit("reported_cost", "loss units per sample");
  table.set_unit("win_prob", "probability");
  table.set_unit("mean_net_improvement", "loss units");
  table.set_unit("stderr", "loss units");
  table.set_meta("focus_agent", std::to_string(i));
  return table;
}

ResultTable run_penalty_curve(const ScenarioConfig& cfg) {
  const MechanismConstants constants = cfg.constants();
  const std::size_t i = cfg.focus_agent;
  const double c = cfg.true_costs[i];
  const auto roster = assign_lambdas(truthful_roster(cfg), constants);
  const double lambda = roster[i].assigned_lambda();
  const double sum_others = others_sum(roster, i);
  const double m_star = optimal_local_data(c, cfg.k);

  ResultTable table({"m", "penalty_plus_cost"});
  const std::size_t points = cfg.penalty_grid_points;
  for (std::size_t j = 0; j < points; ++j) {
    const double m = 2.0 * m_star * static_cast<double>(j) / static_cast<double>(points - 1);
    table.add_row({m, free_rider_penalty(m, c, lambda, sum_others, cfg.k) + c * m});
  }
  stamp(table, cfg, "penalty-curve");
  table.set_unit("m", "samples");
  table.set_unit("penalty_plus_cost", "loss units");
  table.set_meta("focus_agent", std::to_string(i));
  table.set_meta("local_optimum", format_double(m_star));
  return table;
}

ResultTable run_compare(const ScenarioConfig& cfg) {
  const MechanismConstants constants = cfg.constants();
  const auto roster = assign_lambdas(truthful_roster(cfg), constants);
  const auto fees = collect_fees(roster, constants).full();
  const auto outcome =
      run_competition_synthetic(roster, beliefs(cfg), fees, synthetic_options(cfg));

  ResultTable table({"agent", "local_loss", "federated_loss", "fact_mean_loss", "fact_stderr"});
  double local_sum = 0.0, fed_sum = 0.0, fact_sum = 0.0, var_sum = 0.0;
  for (std::size_t i = 0; i < roster.size(); ++i) {
    const double c = roster[i].true_cost();
    const double m = roster[i].data_amount();
    const double sum_others = others_sum(roster, i);
    const double local = local_loss(m, c, cfg.k);
    const double federated = federated_loss(m, sum_others, c, cfg.k);
    const double fact =
        pfl_loss(m, c, c, roster[i].assigned_lambda(), sum_others, cfg.k).total() +
        outcome.agents[i].mean_transfer;
    const double se = outcome.agents[i].transfer_stderr;
    table.add_row({static_cast<double>(i), local, federated, fact, se});
    local_sum += local;
    fed_sum += federated;
    fact_sum += fact;
    var_sum += se * se;
  }
  const double n = static_cast<double>(roster.size());
  table.add_row({-1.0, local_sum / n, fed_sum / n, fact_sum / n, std::sqrt(var_sum) / n});
  stamp(table, cfg, "compare");
  table.set_unit("agent", "index, -1 for the mean over agents");
  for (const char* col : {"local_loss", "federated_loss", "fact_mean_loss", "fact_stderr"}) {
    table.set_unit(col, "loss units");
  }
  return table;
}

SyntheticTask make_task(const FedsimSpec& spec) {
  return SyntheticTask(spec.dimension, spec.lipschitz, spec.mu, spec.noise_variance);
}

TrainResult run_train(const ScenarioConfig& cfg) {
  if (!cfg.fedsim) {
    throw ConfigError(cfg.source + ": train needs the fedsim.* keys", "fedsim");
  }
  const FedsimSpec& spec = *cfg.fedsim;
  const MechanismConstants constants = cfg.constants();
  const std::size_t n = cfg.n();

  // Contracts are signed on reports; the free rider then withholds its data.
  const auto contracted = assign_lambdas(truthful_roster(cfg), constants);
  std::vector<AgentProfile> actual = contracted;
  if (cfg.free_rider_agent) {
    actual[*cfg.free_rider_agent] = actual[*cfg.free_rider_agent].with_data(0.0);
  }

  TrainResult result{ResultTable({"round", "avg_sq_grad_norm"}),
                     ResultTable({"agent", "data_amount", "aggregation_weight",
                                  "convergence_term", "data_cost", "free_rider_penalty",
                                  "competition_transfer", "total", "won"}),
                     {}, {}, {}, {}, {}, {}};

  const PenaltyCollection penalties = collect_penalties(actual, constants);
  const PenaltyCollection at_optimum = collect_penalties(contracted, constants);
  // Fees are paid before training, on the contracted amounts.
  const FeeCollection fees = collect_fees(contracted, constants);

  const SyntheticTask task = make_task(spec);
  TrainingConfig tc;
  tc.rounds = spec.rounds;
  tc.local_steps = spec.local_steps;
  tc.epochs = spec.epochs;
  tc.step_size = spec.step_size;
  tc.seed = cfg.seed;
  tc.workers = cfg.workers;
  result.run = run_pfl_training(std::span<const AgentProfile>(actual), task, tc);

  const auto outcome = run_competition_triples(actual, cfg.seed);
  result.settlement = settle(outcome, fees.full(), constants);

  result.ledger += penalties.delta;
  // Settlement records the fees it redistributes.
  result.ledger += result.settlement.delta;
  if (!result.ledger.consistent()) {
    throw InvariantViolation("train: server ledger is inconsistent after settlement");
  }
  result.penalties = penalties.penalties;
  result.at_optimum_penalties = at_optimum.penalties;

  double running = 0.0;
  for (std::size_t t = 0; t < result.run.grad_norm_history.size(); ++t) {
    running += result.run.grad_norm_history[t];
    result.train.add_row({static_cast<double>(t), running / static_cast<double>(t + 1)});
  }

  for (std::size_t i = 0; i < n; ++i) {
    const double m = actual[i].data_amount();
    const double c = actual[i].true_cost();
    const double sum_others = others_sum(actual, i);
    const LossBreakdown b(cfg.k / (2.0 * (m + sum_others)), c * m,
                          penalties.penalties[i], result.settlement.net_transfers[i]);
    result.breakdowns.add_row({static_cast<double>(i), m, result.run.weights[i],
                               b.convergence_term(), b.data_cost(), b.free_rider_penalty(),
                               b.competition_transfer(), b.total(),
                               outcome.records[i].won ? 1.0 : 0.0});
  }

  stamp(result.train, cfg, "train");
  result.train.set_unit("round", "index");
  result.train.set_unit("avg_sq_grad_norm",
                        "mean of |grad f|^2 over rounds 0..round");
  stamp(result.breakdowns, cfg, "train");
  result.breakdowns.set_unit("data_amount", "samples");
  result.breakdowns.set_unit("won", "1 if the agent won its group");
  for (const char* col : {"convergence_term", "data_cost", "free_rider_penalty",
                          "competition_transfer", "total"}) {
    result.breakdowns.set_unit(col, "loss units");
  }

  nlohmann::ordered_json j;
  j["scenario_hash"] = cfg.hash();
  j["seed"] = cfg.seed;
  j["penalties_collected"] = result.ledger.penalties_collected;
  j["fees_collected"] = result.ledger.fees_collected;
  j["payouts_made"] = result.ledger.payouts_made;
  j["budget_feasible"] = result.ledger.consistent();
  j["groups"] = result.settlement.outcome.groups;
  j["winners"] = result.settlement.outcome.winners;
  j["effective_batch"] = result.run.effective_batch;
  j["mean_sq_grad_norm"] = result.run.mean_grad_norm_sq();
  if (spec.step_size * spec.lipschitz < 2.0) {
    j["convergence_bound"] = convergence_bound(result.run, task, result.run.initial_gap);
  }
  if (cfg.free_rider_agent) j["free_rider_agent"] = *cfg.free_rider_agent;
  result.ledger_json = j.dump(2) + "\n";
  return result;
}

}  // namespace fact::harness
