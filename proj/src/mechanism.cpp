#include "fact/mechanism.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <string>

#include "fact/equilibrium.hpp"
#include "fact/error.hpp"
#include "fact/parallel.hpp"
#include "fact/rng.hpp"

namespace fact {

namespace {

void require_roster(std::span<const AgentProfile> agents,
                    const MechanismConstants& constants, const char* op) {
  if (agents.size() != constants.n()) {
    std::ostringstream os;
    os << op << ": roster has " << agents.size() << " agents but constants say n = "
       << constants.n();
    throw ConfigurationError(os.str());
  }
}

double sum_of(std::span<const double> xs) {
  return std::accumulate(xs.begin(), xs.end(), 0.0);
}

}  // namespace

ServerLedger& ServerLedger::operator+=(const ServerLedger& other) {
  penalties_collected += other.penalties_collected;
  fees_collected += other.fees_collected;
  payouts_made += other.payouts_made;
  return *this;
}

bool ServerLedger::consistent() const {
  return std::isfinite(penalties_collected) && std::isfinite(fees_collected) &&
         std::isfinite(payouts_made) && payouts_made <= fees_collected;
}

std::vector<AgentProfile> assign_lambdas(std::span<const AgentProfile> agents,
                                         const MechanismConstants& constants) {
  require_roster(agents, constants, "assign_lambdas");
  std::vector<double> expected(agents.size());
  for (std::size_t i = 0; i < agents.size(); ++i) {
    expected[i] = optimal_local_data(agents[i].reported_cost(), constants.k());
  }
  const double total = sum_of(expected);
  std::vector<AgentProfile> out;
  out.reserve(agents.size());
  for (std::size_t i = 0; i < agents.size(); ++i) {
    const double others = total - expected[i];
    if (!(others > 0.0)) {
      throw ConfigurationError("assign_lambdas: agent " + std::to_string(i) +
                               " has no expected contribution from others");
    }
    out.push_back(agents[i].with_lambda(lambda_for(
        agents[i].reported_cost(), others, constants.k(), constants.alpha())));
  }
  return out;
}

PenaltyCollection collect_penalties(std::span<const AgentProfile> agents,
                                    const MechanismConstants& constants) {
  require_roster(agents, constants, "collect_penalties");
  PenaltyCollection result;
  result.penalties.reserve(agents.size());
  for (std::size_t i = 0; i < agents.size(); ++i) {
    const AgentProfile& a = agents[i];
    const double p =
        free_rider_penalty(a.data_amount(), a.reported_cost(),
                           a.assigned_lambda(), others_sum(agents, i), constants.k());
    result.penalties.push_back(p);
    result.delta.penalties_collected += p;
  }
  return result;
}

std::vector<double> FeeCollection::full() const {
  std::vector<double> out;
  out.reserve(fees.size());
  for (const auto& f : fees) out.push_back(f.full);
  return out;
}

std::vector<double> FeeCollection::effective() const {
  std::vector<double> out;
  out.reserve(fees.size());
  for (const auto& f : fees) out.push_back(f.effective);
  return out;
}

FeeCollection collect_fees(std::span<const AgentProfile> agents,
                           const MechanismConstants& constants) {
  require_roster(agents, constants, "collect_fees");
  FeeCollection result;
  result.fees.reserve(agents.size());
  for (std::size_t i = 0; i < agents.size(); ++i) {
    const AgentProfile& a = agents[i];
    const ContractFee fee =
        contract_fee(a.data_amount(), a.reported_cost(), others_sum(agents, i),
                     constants.k(), a.assigned_lambda());
    result.fees.push_back(fee);
    result.delta.fees_collected += fee.full;
  }
  return result;
}

CompetitionOutcome run_competition_triples(std::span<const AgentProfile> agents,
                                           std::uint64_t seed) {
  const std::size_t n = agents.size();
  if (n < 3) {
    throw ConfigurationError("run_competition_triples: need at least 3 agents, got " +
                             std::to_string(n));
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  rng::Stream shuffle(seed, rng::Domain::kTripleGrouping, 0, 0);
  for (std::size_t i = n - 1; i > 0; --i) {
    std::swap(order[i], order[shuffle.below(i + 1)]);
  }

  CompetitionOutcome outcome;
  const std::size_t groups = n / 3;
  outcome.groups.resize(groups);
  for (std::size_t g = 0; g < groups; ++g) {
    outcome.groups[g].assign(order.begin() + 3 * g, order.begin() + 3 * g + 3);
  }
  for (std::size_t r = 0; r < n % 3; ++r) {
    outcome.groups[(groups - 1 - r % groups)].push_back(order[3 * groups + r]);
  }

  outcome.records.resize(n);
  for (std::size_t g = 0; g < groups; ++g) {
    std::vector<std::size_t> members = outcome.groups[g];
    std::stable_sort(members.begin(), members.end(), [&](auto a, auto b) {
      return agents[a].reported_cost() < agents[b].reported_cost();
    });
    const std::size_t size = members.size();
    const double mid_lo = agents[members[(size - 1) / 2]].reported_cost();
    const double mid_hi = agents[members[size / 2]].reported_cost();
    std::vector<std::size_t> candidates;
    for (std::size_t idx : outcome.groups[g]) {
      const double c = agents[idx].reported_cost();
      if (c == mid_lo || c == mid_hi) candidates.push_back(idx);
    }
    std::size_t winner = candidates.front();
    if (candidates.size() > 1) {
      rng::Stream tie(seed, rng::Domain::kTieBreak, static_cast<std::uint32_t>(g), 0);
      winner = candidates[tie.below(candidates.size())];
    }
    outcome.winners.push_back(winner);
    outcome.records[winner].won = true;
  }
  return outcome;
}

Settlement settle(const CompetitionOutcome& outcome, std::span<const double> fees,
                  const MechanismConstants& constants) {
  const std::size_t n = constants.n();
  if (fees.size() != n || outcome.records.size() != n) {
    throw ConfigurationError("settle: fees and outcome must cover all n agents");
  }
  Settlement s;
  s.outcome = outcome;
  s.net_transfers.resize(n);
  const double collected = sum_of(fees);
  const double share = 3.0 / static_cast<double>(n);
  double paid = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    AgentRecord& rec = s.outcome.records[i];
    rec.fee_paid = fees[i];
    rec.payout = rec.won ? share * (collected - fees[i]) : 0.0;
    paid += rec.payout;
    s.net_transfers[i] = rec.fee_paid - rec.payout;
  }
  s.outcome.collected_total = collected;
  s.outcome.paid_total = paid;
  s.delta.fees_collected = collected;
  s.delta.payouts_made = paid;
  // Rounding slack only: the algebra gives paid <= collected exactly when at
  // most n/3 agents win and fees are nonnegative.
  const double slack = 1e-12 * std::max(std::abs(collected), 1e-300);
  if (!(paid <= collected + slack) || !std::isfinite(paid)) {
    std::ostringstream os;
    os.precision(17);
    os << "settle: payouts " << paid << " exceed collected fees " << collected
       << " (" << outcome.winners.size() << " winners, n = " << n << ")";
    throw InvariantViolation(os.str());
  }
  return s;
}

double win_probability(double c, const CostDistribution& dist) {
  const double below = dist.cdf_below(c);
  const double above = 1.0 - dist.cdf(c);
  return 2.0 * below * above;
}

SyntheticCompetitionResult run_competition_synthetic(
    std::span<const AgentProfile> agents,
    std::span<const CostDistribution> beliefs, std::span<const double> fees,
    const SyntheticOptions& options) {
  const std::size_t n = agents.size();
  if (beliefs.size() != n || fees.size() != n) {
    throw ConfigurationError(
        "run_competition_synthetic: need one belief distribution and fee per agent");
  }
  if (options.trials < 1) {
    throw ConfigurationError("run_competition_synthetic: trials must be >= 1");
  }
  if (options.fixed_pool && options.pool_size < 1) {
    throw ConfigurationError("run_competition_synthetic: pool_size must be >= 1");
  }

  std::vector<std::vector<double>> pools;
  if (options.fixed_pool) {
    pools.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      rng::Stream s(options.seed, rng::Domain::kSyntheticPool,
                    static_cast<std::uint32_t>(i), 0);
      pools[i].reserve(options.pool_size);
      for (std::size_t p = 0; p < options.pool_size; ++p) {
        pools[i].push_back(beliefs[i].sample(s));
      }
    }
  }

  const std::size_t blocks = block_count(options.trials);
  std::vector<std::size_t> wins(n * blocks, 0);
  parallel_for(n * blocks, options.workers, [&](std::size_t task) {
    const std::size_t i = task / blocks;
    const std::size_t b = task % blocks;
    const double c = agents[i].reported_cost();
    const std::size_t first = b * kReductionBlock;
    const std::size_t last = std::min(options.trials, first + kReductionBlock);
    std::size_t count = 0;
    for (std::size_t t = first; t < last; ++t) {
      rng::Stream s(options.seed, rng::Domain::kSyntheticCompetition,
                    static_cast<std::uint32_t>(i), t);
      double a = 0.0, z = 0.0;
      if (options.fixed_pool) {
        a = pools[i][s.below(pools[i].size())];
        z = pools[i][s.below(pools[i].size())];
      } else {
        a = beliefs[i].sample(s);
        z = beliefs[i].sample(s);
      }
      if (std::min(a, z) < c && c < std::max(a, z)) ++count;
    }
    wins[task] = count;
  });

  SyntheticCompetitionResult result;
  result.trials = options.trials;
  result.agents.resize(n);
  const double collected = sum_of(fees);
  const double share = 3.0 / static_cast<double>(n);
  const double trials = static_cast<double>(options.trials);
  result.mean_collected = collected;
  for (std::size_t i = 0; i < n; ++i) {
    SyntheticAgentStats& st = result.agents[i];
    for (std::size_t b = 0; b < blocks; ++b) st.wins += wins[i * blocks + b];
    st.win_frequency = static_cast<double>(st.wins) / trials;
    st.payout_if_won = share * (collected - fees[i]);
    st.mean_transfer = fees[i] - st.win_frequency * st.payout_if_won;
    // Transfer takes two values, so its sample variance follows from the win
    // count alone.
    if (options.trials > 1) {
      const double p = st.win_frequency;
      const double var = p * (1.0 - p) * trials / (trials - 1.0) *
                         st.payout_if_won * st.payout_if_won;
      st.transfer_stderr = std::sqrt(var / trials);
    }
    result.mean_paid += st.win_frequency * st.payout_if_won;
  }
  return result;
}

}  // namespace fact
