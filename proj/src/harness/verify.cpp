#include "fact/harness/verify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <json.hpp>

#include "fact/equilibrium.hpp"
#include "fact/error.hpp"
#include "fact/fedsim.hpp"
#include "fact/harness/scenarios.hpp"
#include "fact/loss.hpp"
#include "fact/mechanism.hpp"
#include "fact/rng.hpp"

namespace fact::harness {

namespace {

double rel_diff(double measured, double expected) {
  const double scale = std::abs(expected);
  return std::abs(measured - expected) /
         (scale > 0.0 ? scale : std::numeric_limits<double>::min());
}

class Recorder {
 public:
  explicit Recorder(std::vector<Check>& out) : out_(out) {}

  void add(std::string name, std::string detail, double tolerance, double residual) {
    const bool ok = std::isfinite(residual) && residual <= tolerance;
    out_.push_back({std::move(name), std::move(detail), tolerance, residual, ok});
  }

  // Runs body and records a failing check if it throws.
  template <typename Body>
  void guarded(const std::string& name, Body&& body) {
    try {
      body();
    } catch (const std::exception& e) {
      out_.push_back({name, std::string("threw: ") + e.what(), 0.0,
                      std::numeric_limits<double>::infinity(), false});
    }
  }

 private:
  std::vector<Check>& out_;
};

// Parameter draw over the ranges the closed forms are claimed for.
struct Draw {
  double c, k, m_star, sum_others, alpha;
};

Draw random_draw(rng::Stream& s) {
  Draw d{};
  d.c = std::pow(10.0, s.uniform(-8.0, 1.0));
  d.k = s.uniform(0.1, 10.0);
  d.m_star = std::sqrt(d.k / (2.0 * d.c));
  d.sum_others = d.m_star * std::pow(10.0, s.uniform(0.0, 5.0));
  d.alpha = s.uniform(0.0, 1.9);
  return d;
}

rng::Stream draws(const ScenarioConfig& cfg, std::uint32_t check) {
  return {cfg.seed, rng::Domain::kParameterDraws, check, 0};
}

bool same_table(const ResultTable& a, const ResultTable& b) {
  if (a.columns() != b.columns() || a.row_count() != b.row_count()) return false;
  for (std::size_t r = 0; r < a.row_count(); ++r) {
    if (a.row(r) != b.row(r)) return false;
  }
  return true;
}

}  // namespace

bool VerifyReport::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.passed; });
}

std::string VerifyReport::to_json() const {
  nlohmann::ordered_json j;
  j["scenario_hash"] = scenario_hash;
  j["passed"] = passed();
  auto& arr = j["checks"] = nlohmann::ordered_json::array();
  for (const auto& c : checks) {
    nlohmann::ordered_json e;
    e["name"] = c.name;
    e["passed"] = c.passed;
    e["tolerance"] = c.tolerance;
    // JSON has no infinity; a check that threw reports null.
    if (std::isfinite(c.residual)) {
      e["residual"] = c.residual;
    } else {
      e["residual"] = nullptr;
    }
    e["detail"] = c.detail;
    arr.push_back(std::move(e));
  }
  return j.dump(2) + "\n";
}

VerifyReport run_verify(const ScenarioConfig& cfg, const VerifyOptions& options) {
  VerifyReport report;
  report.scenario_hash = cfg.hash();
  Recorder rec(report.checks);

  const double k = cfg.k;
  const double alpha = cfg.alpha;
  const std::size_t n = cfg.n();
  const MechanismConstants constants = cfg.constants();
  const double scale = options.lambda_scale;
  auto lambda_of = [&](double c, double sum_others, double kk, double a) {
    return scale * lambda_for(c, sum_others, kk, a);
  };

  std::vector<AgentProfile> roster = assign_lambdas(truthful_roster(cfg), constants);
  for (auto& a : roster) a = a.with_lambda(scale * a.assigned_lambda());
  const std::size_t focus = cfg.focus_agent;
  const double c0 = roster[focus].true_cost();
  const double m0 = roster[focus].data_amount();
  const double sum0 = others_sum(roster, focus);
  const double lambda0 = roster[focus].assigned_lambda();
  const auto fees = collect_fees(roster, constants).full();
  const double others_fees0 =
      std::accumulate(fees.begin(), fees.end(), 0.0) - fees[focus];

  rec.guarded("constants_alpha_interval", [&] {
    int failures = 0;
    auto rejects = [&](double a) {
      try {
        MechanismConstants(k, a, n);
        return false;
      } catch (const ValidationError&) {
        return true;
      }
    };
    failures += !rejects(2.0);
    failures += !rejects(-1e-12);
    failures += rejects(0.0);
    failures += rejects(std::nextafter(2.0, 0.0));
    rec.add("constants_alpha_interval", "alpha = 2 and alpha < 0 rejected; 0 and 2^- accepted",
            0.0, failures);
  });

  rec.guarded("others_sum_identity", [&] {
    auto s = draws(cfg, 1);
    double worst = 0.0;
    for (int t = 0; t < 200; ++t) {
      std::vector<AgentProfile> agents;
      const std::size_t size = 2 + s.below(40);
      for (std::size_t i = 0; i < size; ++i) {
        agents.push_back(AgentProfile::truthful(1.0, s.uniform(0.0, 1e4)));
      }
      double total = 0.0;
      for (const auto& a : agents) total += a.data_amount();
      for (std::size_t i = 0; i < size; ++i) {
        worst = std::max(worst, rel_diff(others_sum(agents, i) + agents[i].data_amount(), total));
      }
    }
    rec.add("others_sum_identity", "others_sum + own amount equals the total, 200 rosters",
            1e-12, worst);
  });

  rec.guarded("local_optimum_matches_search", [&] {
    double worst = 0.0;
    for (const auto& a : roster) {
      const double c = a.true_cost();
      const double m_star = optimal_local_data(c, k);
      const auto br = numeric_argmin_1d([&](double m) { return local_loss(m, c, k); },
                                        1e-3 * m_star, 10.0 * m_star, 1e-10 * m_star);
      worst = std::max(worst, rel_diff(br.argmin_m, m_star));
    }
    rec.add("local_optimum_matches_search",
            "golden-section argmin of the local loss vs sqrt(k/(2c)), every agent", 1e-6, worst);
  });

  rec.guarded("federated_free_riding", [&] {
    const double closed = optimal_federated_data(c0, k, sum0);
    const auto br = numeric_argmin_1d(
        [&](double m) { return federated_loss(m, sum0, c0, k); }, 0.0, 2.0 * m0, 1e-10 * m0);
    double residual = std::abs(br.argmin_m - closed) / m0;
    // Monotone in the others' total and zero exactly from m* on.
    int violations = 0;
    double prev = std::numeric_limits<double>::infinity();
    for (int j = 0; j <= 300; ++j) {
      const double sum = m0 * j / 100.0;
      const double v = optimal_federated_data(c0, k, sum);
      if (v > prev) ++violations;
      if ((v == 0.0) != (sum >= m0)) ++violations;
      prev = v;
    }
    rec.add("federated_free_riding",
            "unpenalized federated optimum = max(0, m* - others), search agrees; closed form " +
                format_double(closed),
            1e-6, residual + violations);
  });

  rec.guarded("penalty_nonnegative", [&] {
    auto s = draws(cfg, 2);
    double worst = 0.0;
    for (int t = 0; t < 1000; ++t) {
      const Draw d = random_draw(s);
      const double reported = d.c * s.uniform(0.5, 2.0);
      const double lambda = d.c * std::pow(10.0, s.uniform(-3.0, 3.0));
      const double m = s.uniform(0.0, 3.0) * d.m_star;
      worst = std::max(worst, -free_rider_penalty(m, reported, lambda, d.sum_others, d.k));
    }
    rec.add("penalty_nonnegative", "minimum penalty over 1000 draws is >= 0", 0.0,
            std::max(0.0, worst));
  });

  rec.guarded("penalized_optimum_search", [&] {
    auto s = draws(cfg, 3);
    double worst = 0.0;
    auto probe = [&](double c, double kk, double sum, double lambda) {
      const double m_star = optimal_local_data(c, kk);
      const auto br = numeric_argmin_1d(
          [&](double m) { return pfl_loss(m, c, c, lambda, sum, kk).total(); }, 0.0,
          2.0 * m_star, 1e-10 * m_star);
      worst = std::max(worst, rel_diff(br.argmin_m, m_star));
    };
    for (const auto& a : roster) {
      probe(a.true_cost(), k, others_sum(roster, &a - roster.data()), a.assigned_lambda());
    }
    for (int t = 0; t < 200; ++t) {
      const Draw d = random_draw(s);
      probe(d.c, d.k, d.sum_others, lambda_of(d.c, d.sum_others, d.k, d.alpha));
    }
    rec.add("penalized_optimum_search",
            "golden-section argmin of the penalized loss vs the local optimum, roster + 200 draws",
            1e-6, worst);
  });

  rec.guarded("penalized_optimum_stationary", [&] {
    auto s = draws(cfg, 4);
    double worst = 0.0;
    auto probe = [&](double c, double kk, double sum, double lambda) {
      const double m_star = optimal_local_data(c, kk);
      const auto r = verify_stationarity(
          [&](std::span<const double> x) {
            return pfl_loss(x[0], c, c, lambda, sum, kk).total();
          },
          {m_star}, 1e-6, 1e-6);
      worst = std::max(worst, r.worst_ratio * 1e-6);
    };
    probe(c0, k, sum0, lambda0);
    for (int t = 0; t < 200; ++t) {
      const Draw d = random_draw(s);
      probe(d.c, d.k, d.sum_others, lambda_of(d.c, d.sum_others, d.k, d.alpha));
    }
    rec.add("penalized_optimum_stationary",
            "|d loss/dm| m* / loss at the truthful optimum (central differences)", 1e-6, worst);
  });

  rec.guarded("ir_gap_closed_form", [&] {
    double worst = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const auto& a = roster[i];
      const double c = a.true_cost();
      const double m = a.data_amount();
      const double sum = others_sum(roster, i);
      const double measured =
          local_loss(m, c, k) - pfl_loss(m, c, c, a.assigned_lambda(), sum, k).total();
      worst = std::max(worst, rel_diff(measured, ir_gap_analytic(m, sum, k, alpha)));
    }
    rec.add("ir_gap_closed_form",
            "local minus penalized loss at the optimum vs the closed-form gap, every agent",
            1e-10, worst);
  });

  rec.guarded("ir_gap_random_draws", [&] {
    auto s = draws(cfg, 5);
    double worst = 0.0;
    for (int t = 0; t < 200; ++t) {
      const Draw d = random_draw(s);
      const double lambda = lambda_of(d.c, d.sum_others, d.k, d.alpha);
      const double measured = local_loss(d.m_star, d.c, d.k) -
                              pfl_loss(d.m_star, d.c, d.c, lambda, d.sum_others, d.k).total();
      const double expected = ir_gap_analytic(d.m_star, d.sum_others, d.k, d.alpha);
      worst = std::max(worst, expected > 0.0
                                  ? rel_diff(measured, expected)
                                  : std::abs(measured) / local_loss(d.m_star, d.c, d.k));
    }
    rec.add("ir_gap_random_draws", "same identity on 200 random parameter draws", 1e-10, worst);
  });

  rec.guarded("lost_branch_equals_local", [&] {
    auto s = draws(cfg, 6);
    double worst = 0.0;
    auto probe = [&](double c, double kk, double sum, double lambda, std::size_t nn,
                     double others_fees) {
      const double m_star = optimal_local_data(c, kk);
      const auto lost =
          fact_loss(m_star, c, c, lambda, sum, kk, nn, CompetitionBranch::kLost, others_fees);
      worst = std::max(worst, rel_diff(lost.total(), local_loss(m_star, c, kk)));
    };
    probe(c0, k, sum0, lambda0, n, others_fees0);
    for (int t = 0; t < 200; ++t) {
      const Draw d = random_draw(s);
      probe(d.c, d.k, d.sum_others, lambda_of(d.c, d.sum_others, d.k, d.alpha),
            2 + s.below(60), s.uniform(0.0, 1.0));
    }
    rec.add("lost_branch_equals_local",
            "losing agent's total at the optimum equals its local loss", 1e-12, worst);
  });

  rec.guarded("won_branch_below_local", [&] {
    int failures = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const auto& a = roster[i];
      const double sum = others_sum(roster, i);
      const double others = std::accumulate(fees.begin(), fees.end(), 0.0) - fees[i];
      const auto won = fact_loss(a.data_amount(), a.true_cost(), a.true_cost(),
                                 a.assigned_lambda(), sum, k, n, CompetitionBranch::kWon,
                                 others);
      if (others > 0.0 && !(won.total() < local_loss(a.data_amount(), a.true_cost(), k))) {
        ++failures;
      }
    }
    rec.add("won_branch_below_local", "winning agents end strictly below local loss", 0.0,
            failures);
  });

  rec.guarded("expected_loss_simplification", [&] {
    auto s = draws(cfg, 7);
    double worst = 0.0;
    int breakdown_mismatches = 0;
    for (int t = 0; t < 1000; ++t) {
      const Draw d = random_draw(s);
      const double m = d.m_star * s.uniform(0.1, 3.0);
      const double reported = d.c * s.uniform(0.5, 1.5);
      const double lambda = lambda_of(reported, d.sum_others, d.k, d.alpha);
      const std::size_t nn = 3 + s.below(58);
      const double p = s.uniform(0.0, 1.0);
      const double local = local_loss(m, d.c, d.k);
      const double others_fees = s.uniform(0.0, 1.0) * local * static_cast<double>(nn) / 3.0;
      const double simple = expected_fact_loss(m, d.c, d.k, nn, p, others_fees);
      const double mixture = expected_fact_loss_mixture(m, d.c, reported, lambda,
                                                        d.sum_others, d.k, nn, p, others_fees);
      worst = std::max(worst, std::abs(simple - mixture) / std::max(std::abs(simple), local));
      for (auto branch : {CompetitionBranch::kWon, CompetitionBranch::kLost}) {
        const auto b =
            fact_loss(m, d.c, reported, lambda, d.sum_others, d.k, nn, branch, others_fees);
        if (b.total() != b.convergence_term() + b.data_cost() + b.free_rider_penalty() +
                             b.competition_transfer()) {
          ++breakdown_mismatches;
        }
      }
    }
    rec.add("expected_loss_simplification",
            "simplified expected loss vs probability-weighted branches, 1000 draws", 1e-12,
            worst);
    rec.add("loss_breakdown_total", "breakdown total equals the sum of its parts, bit for bit",
            0.0, breakdown_mismatches);
  });

  // Beliefs with the agent's true cost as their median.
  std::vector<double> pair_multipliers;
  for (int j = 1; j <= 10; ++j) {
    pair_multipliers.push_back(1.0 - 0.02 * j);
    pair_multipliers.push_back(1.0 + 0.02 * j);
  }
  const auto gaussian = CostDistribution::gaussian(c0, 0.1 * c0);
  const auto uniform = CostDistribution::uniform(0.5 * c0, 1.5 * c0);
  std::vector<double> atoms;
  for (double x : pair_multipliers) atoms.push_back(x * c0);
  const auto empirical = CostDistribution::empirical(atoms);

  rec.guarded("win_probability_monte_carlo", [&] {
    const std::pair<const CostDistribution*, double> pairs[] = {
        {&gaussian, 0.8},  {&gaussian, 0.9}, {&gaussian, 1.0}, {&gaussian, 1.1},
        {&uniform, 0.6},   {&uniform, 1.0},  {&uniform, 1.3},  {&empirical, 0.93},
        {&empirical, 1.0}, {&empirical, 1.11}};
    double worst = 0.0;
    std::uint64_t offset = 0;
    for (const auto& [dist, mult] : pairs) {
      const AgentProfile agent(c0, mult * c0, 1.0);
      const double zero_fee = 0.0;
      SyntheticOptions o;
      o.trials = cfg.trials;
      o.seed = cfg.seed + (++offset);
      o.workers = cfg.workers;
      const auto r = run_competition_synthetic(std::span(&agent, 1), std::span(dist, 1),
                                               std::span(&zero_fee, 1), o);
      const double p = win_probability(mult * c0, *dist);
      const double se = std::sqrt(std::max(p * (1.0 - p), 1e-12) / static_cast<double>(o.trials));
      worst = std::max(worst, std::abs(r.agents[0].win_frequency - p) / se);
    }
    rec.add("win_probability_monte_carlo",
            "max |win frequency - 2F(1-F)| in binomial standard errors, 10 (belief, cost) pairs",
            3.0, worst);
  });

  // Expected loss as a function of (data, reported cost) for the focus agent.
  auto expected_objective = [&](const CostDistribution& belief) {
    return [&, belief](double m, double reported) {
      const double lambda = lambda_of(reported, sum0, k, alpha);
      return expected_fact_loss_mixture(m, c0, reported, lambda, sum0, k, n,
                                        win_probability(reported, belief), others_fees0);
    };
  };

  rec.guarded("truthful_best_response_2d", [&] {
    double worst = 0.0;
    double worst_resolution = 0.0;
    for (const CostDistribution* belief : {&gaussian, &uniform}) {
      GridOptions go;
      go.workers = cfg.workers;
      const auto br = numeric_argmin_2d(expected_objective(*belief), {0.5 * m0, 1.5 * m0},
                                        {0.5 * c0, 1.5 * c0}, go);
      const double tol_m = std::max(br.resolution_m, 1e-12 * m0);
      const double tol_c = std::max(br.resolution_c, 1e-12 * c0);
      worst = std::max({worst, std::abs(br.argmin_m - m0) / tol_m,
                        std::abs(*br.argmin_c - c0) / tol_c});
      worst_resolution = std::max({worst_resolution, br.resolution_m / m0, br.resolution_c / c0});
    }
    rec.add("truthful_best_response_2d",
            "grid argmin of expected loss vs (m*, true cost), in final grid steps "
            "(gaussian and uniform beliefs)",
            1.0, worst);
    rec.add("truthful_best_response_resolution", "final relative grid step per axis", 1e-3,
            worst_resolution);
  });

  rec.guarded("truthful_best_response_empirical", [&] {
    GridOptions go;
    go.workers = cfg.workers;
    const auto br = numeric_argmin_2d(expected_objective(empirical), {0.5 * m0, 1.5 * m0},
                                      {0.5 * c0, 1.5 * c0}, go);
    // The win probability is flat between the two central atoms, so any
    // report in that gap is a best response; the true cost lies inside it.
    const double gap_half_width = 0.02 * c0;
    const double residual = std::max(std::abs(*br.argmin_c - c0) / gap_half_width,
                                     std::abs(br.argmin_m - m0) / std::max(br.resolution_m, 1e-12 * m0));
    rec.add("truthful_best_response_empirical",
            "argmin report lies in the central gap of a symmetric empirical belief (units: "
            "half-gaps; data axis in grid steps)",
            1.0, residual);
  });

  rec.guarded("win_probability_direction", [&] {
    int mismatches = 0;
    const auto objective = expected_objective(gaussian);
    for (double mult : {0.6, 0.7, 0.8, 0.9, 0.95, 1.05, 1.1, 1.2, 1.3, 1.4}) {
      const double r = mult * c0;
      const double h = 1e-3 * r;
      const double slope = objective(m0, r + h) - objective(m0, r - h);
      const double improvement = slope < 0.0 ? 1.0 : (slope > 0.0 ? -1.0 : 0.0);
      const double f = gaussian.cdf(r);
      const double expected = f < 0.5 ? 1.0 : (f > 0.5 ? -1.0 : 0.0);
      if (improvement != expected) ++mismatches;
    }
    rec.add("win_probability_direction",
            "lowering expected loss moves the report toward the median, 10 probes", 0.0,
            mismatches);
  });

  rec.guarded("sandwich_median_wins", [&] {
    int failures = 0;
    std::vector<double> costs = {1.0, 2.0, 3.0};
    do {
      std::vector<AgentProfile> trio;
      for (double c : costs) trio.emplace_back(c, c, 1.0);
      const auto out = run_competition_triples(trio, cfg.seed);
      if (out.winners.size() != 1 || trio[out.winners[0]].reported_cost() != 2.0) ++failures;
    } while (std::next_permutation(costs.begin(), costs.end()));
    rec.add("sandwich_median_wins", "all 6 orderings of three distinct costs", 0.0, failures);
  });

  rec.guarded("budget_feasibility", [&] {
    auto s = draws(cfg, 8);
    double worst_excess = 0.0, worst_identity = 0.0, worst_triple_identity = 0.0;
    for (int t = 0; t < 1000; ++t) {
      const std::size_t size = 3 + s.below(58);
      std::vector<AgentProfile> agents;
      std::vector<double> roster_fees;
      for (std::size_t i = 0; i < size; ++i) {
        const double c = s.uniform(0.5, 1.5);
        agents.emplace_back(c, c, 1.0);
        roster_fees.push_back(s.uniform(0.0, 1.0));
      }
      const auto out = run_competition_triples(agents, cfg.seed + static_cast<std::uint64_t>(t));
      const auto st = settle(out, roster_fees, MechanismConstants(1.0, 1.0, size));
      const double collected = st.outcome.collected_total;
      const double paid = st.outcome.paid_total;
      double winners_fees = 0.0;
      for (std::size_t w : out.winners) winners_fees += roster_fees[w];
      const double share = 3.0 / static_cast<double>(size);
      const double w = static_cast<double>(out.winners.size());
      worst_excess = std::max(worst_excess, (paid - collected) / collected);
      worst_identity = std::max(
          worst_identity, std::abs(paid - share * (w * collected - winners_fees)) / collected);
      if (size % 3 == 0) {
        worst_triple_identity = std::max(
            worst_triple_identity, std::abs(paid - (collected - share * winners_fees)) / collected);
      }
    }
    rec.add("budget_feasibility", "max (paid - collected)/collected over 1000 rosters", 0.0,
            std::max(0.0, worst_excess));
    rec.add("budget_identity", "paid = 3/n (W collected - winners' fees), relative", 1e-12,
            worst_identity);
    rec.add("budget_identity_triples",
            "paid = collected - 3/n winners' fees when n is a multiple of 3", 1e-12,
            worst_triple_identity);
  });

  rec.guarded("competition_determinism", [&] {
    int mismatches = 0;
    const auto a = run_competition_triples(roster, cfg.seed);
    const auto b = run_competition_triples(roster, cfg.seed);
    if (a.groups != b.groups || a.winners != b.winners) ++mismatches;
    SyntheticOptions o;
    o.trials = std::min<std::size_t>(cfg.trials, 5000);
    o.seed = cfg.seed;
    o.workers = 1;
    const auto beliefs_all = beliefs(cfg);
    const auto s1 = run_competition_synthetic(roster, beliefs_all, fees, o);
    o.workers = std::max(2u, cfg.workers);
    const auto s2 = run_competition_synthetic(roster, beliefs_all, fees, o);
    for (std::size_t i = 0; i < n; ++i) {
      if (s1.agents[i].wins != s2.agents[i].wins) ++mismatches;
    }
    rec.add("competition_determinism",
            "same seed gives identical groups, winners and win counts for any worker count",
            0.0, mismatches);
  });

  rec.guarded("sweep_truthful_peak", [&] {
    const ResultTable sweep = run_sweep(cfg);
    const auto pct = sweep.column("misreport_pct");
    const auto net = sweep.column("mean_net_improvement");
    const auto zero = static_cast<std::size_t>(std::find(pct.begin(), pct.end(), 0.0) - pct.begin());
    double violation = 0.0;
    for (std::size_t j = zero; j + 1 < net.size(); ++j) {
      violation = std::max(violation, net[j + 1] - net[j]);
    }
    for (std::size_t j = zero; j > 0; --j) {
      violation = std::max(violation, net[j - 1] - net[j]);
    }
    rec.add("sweep_truthful_peak",
            "net improvement peaks at 0% and never rises with |misreport| (max rise, loss units)",
            0.0, violation);

    const double payout = 3.0 / static_cast<double>(n) * others_fees0;
    const double p = win_probability(c0, beliefs(cfg)[focus]);
    const double se = payout * std::sqrt(std::max(p * (1.0 - p), 1e-12) /
                                         static_cast<double>(cfg.trials));
    rec.add("sweep_truthful_value",
            "0% row vs win probability x 3/n x others' fees, in standard errors", 3.0,
            std::abs(net[zero] - p * payout) / se);
  });

  rec.guarded("penalty_curve_minimizer", [&] {
    const ResultTable curve = run_penalty_curve(cfg);
    const auto m = curve.column("m");
    const auto v = curve.column("penalty_plus_cost");
    const auto best = static_cast<std::size_t>(std::min_element(v.begin(), v.end()) - v.begin());
    const double step = m[1] - m[0];
    rec.add("penalty_curve_minimizer", "|argmin - m*| in grid steps", 1.0,
            std::abs(m[best] - m0) / step);
    rec.add("penalty_curve_zero_above_optimum", "1 unless the value at m = 0 exceeds the minimum",
            0.0, v[0] > v[best] ? 0.0 : 1.0);
  });

  rec.guarded("compare_ordering", [&] {
    const ResultTable cmp = run_compare(cfg);
    double violation = 0.0;
    for (std::size_t r = 0; r < cmp.row_count(); ++r) {
      const double local = cmp.at(r, "local_loss");
      const double fed = cmp.at(r, "federated_loss");
      const double fact = cmp.at(r, "fact_mean_loss");
      const double se = cmp.at(r, "fact_stderr");
      violation = std::max({violation, (fed - fact - 3.0 * se) / local,
                            (fact - local - 3.0 * se) / local});
    }
    rec.add("compare_ordering",
            "federated <= fact <= local within 3 standard errors (relative violation)", 0.0,
            std::max(0.0, violation));
    rec.add("csv_round_trip", "compare table re-parsed from its CSV text", 0.0,
            same_table(cmp, ResultTable::from_csv(cmp.to_csv())) ? 0.0 : 1.0);
  });

  rec.guarded("scenario_hash", [&] {
    int failures = 0;
    const std::string base = cfg.hash();
    if (ScenarioConfig(cfg).hash() != base) ++failures;
    auto differs = [&](auto mutate) {
      ScenarioConfig other = cfg;
      mutate(other);
      if (other.hash() == base) ++failures;
    };
    differs([](ScenarioConfig& c) { c.seed += 1; });
    differs([](ScenarioConfig& c) { c.trials += 1; });
    differs([](ScenarioConfig& c) { c.alpha = std::nextafter(c.alpha, 2.0); });
    differs([](ScenarioConfig& c) { c.k *= 1.5; });
    differs([](ScenarioConfig& c) { c.true_costs.back() *= 1.01; });
    differs([](ScenarioConfig& c) { c.belief.relative_stddev *= 2.0; });
    differs([](ScenarioConfig& c) { c.misreport_step_pct /= 2.0; });
    differs([](ScenarioConfig& c) { c.fixed_pool = !c.fixed_pool; });
    differs([](ScenarioConfig& c) { c.out_dir += "x"; });
    rec.add("scenario_hash", "hash stable under copy and changed by every field tested", 0.0,
            failures);
  });

  if (cfg.fedsim) {
    const FedsimSpec& spec = *cfg.fedsim;
    const SyntheticTask task = make_task(spec);

    rec.guarded("variance_scaling_slope", [&] {
      std::vector<std::size_t> batches;
      for (std::size_t b = 1; b <= 256; b *= 2) batches.push_back(b);
      const auto points = measure_variance_scaling(task, batches, 2000, cfg.seed, cfg.workers);
      const double slope = loglog_slope(points);
      rec.add("variance_scaling_slope",
              "log-log slope of mean-gradient variance vs batch size, batches 1..256 (slope " +
                  format_double(slope) + ")",
              0.05, std::abs(slope + 1.0));
    });

    rec.guarded("convergence_bound_holds", [&] {
      double worst = 0.0;
      for (std::uint64_t seed = 0; seed < 20; ++seed) {
        TrainingConfig tc;
        tc.rounds = spec.rounds;
        tc.local_steps = 1;
        tc.epochs = spec.rounds;
        tc.step_size = spec.step_size;
        tc.seed = cfg.seed + seed;
        tc.workers = cfg.workers;
        const auto run = run_pfl_training(std::span<const AgentProfile>(roster), task, tc);
        worst = std::max(worst, run.mean_grad_norm_sq() /
                                    convergence_bound(run, task, run.initial_gap));
      }
      rec.add("convergence_bound_holds",
              "max over 20 seeds of time-averaged |grad|^2 / bound (h = 1)", 1.0, worst);
    });

    rec.guarded("pause_resume", [&] {
      AgentState whole{0, to_batch_size(m0), spec.epochs, 0};
      AgentState split = whole;
      std::vector<double> w1(task.dimension(), 0.0), w2 = w1;
      agent_update(w1, whole, task, spec.epochs, spec.step_size, cfg.seed);
      for (std::size_t chunk = 1; split.steps_left() > 0; chunk = chunk % 5 + 1) {
        agent_update(w2, split, task, chunk, spec.step_size, cfg.seed);
      }
      double diff = 0.0;
      for (std::size_t j = 0; j < w1.size(); ++j) diff = std::max(diff, std::abs(w1[j] - w2[j]));
      rec.add("pause_resume", "max |difference| between split and unsplit local training", 0.0,
              diff);
    });

    rec.guarded("aggregation_affine", [&] {
      const SyntheticTask quiet(spec.dimension, spec.lipschitz, spec.mu, 0.0);
      TrainingConfig tc;
      tc.rounds = 5;
      tc.local_steps = spec.local_steps;
      tc.epochs = 5 * spec.local_steps;
      tc.step_size = spec.step_size;
      tc.seed = cfg.seed;
      const std::vector<double> same(n, m0);
      const auto run = run_pfl_training(same, quiet, tc);
      const std::vector<double> one = {m0};
      const auto solo = run_pfl_training(one, quiet, tc);
      double residual = std::abs(std::accumulate(run.weights.begin(), run.weights.end(), 0.0) - 1.0);
      for (std::size_t j = 0; j < run.final_params.size(); ++j) {
        residual = std::max(residual, rel_diff(run.final_params[j], solo.final_params[j]));
      }
      rec.add("aggregation_affine",
              "weights sum to 1 and identical agents aggregate to their common iterate", 1e-12,
              residual);
    });

    rec.guarded("train_ledger", [&] {
      const TrainResult tr = run_train(cfg);
      rec.add("train_ledger", "payouts minus fees collected after settlement", 0.0,
              std::max(0.0, tr.ledger.payouts_made - tr.ledger.fees_collected));
      if (cfg.free_rider_agent) {
        const std::size_t f = *cfg.free_rider_agent;
        // Withholding all data must cost more in penalty than it saves in data.
        const double saved = cfg.true_costs[f] * optimal_local_data(cfg.true_costs[f], k);
        const double margin = tr.penalties[f] - (tr.at_optimum_penalties[f] + saved);
        rec.add("free_rider_penalized",
                "1 unless the free rider's penalty exceeds its at-optimum penalty plus saved "
                "data cost, plus its aggregation weight",
                0.0, (margin > 0.0 ? 0.0 : 1.0) + tr.run.weights[f]);
      }
    });
  }

  return report;
}

}  // namespace fact::harness
