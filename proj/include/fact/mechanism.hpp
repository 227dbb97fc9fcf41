#pragma once

// Server-side orchestration: penalty scalars, penalty and fee collection, the
// sandwich competition and payout settlement.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "fact/loss.hpp"
#include "fact/model.hpp"

namespace fact {

struct ServerLedger {
  double penalties_collected = 0.0;
  double fees_collected = 0.0;
  double payouts_made = 0.0;

  ServerLedger& operator+=(const ServerLedger& other);
  // All entries finite and payouts covered by fees.
  bool consistent() const;
};

// Assigns lambda_i from each agent's reported cost. The server has not seen
// any contributions yet, so sum_others is the sum of the other agents'
// expected optima sqrt(k / (2 reported_j)).
std::vector<AgentProfile> assign_lambdas(std::span<const AgentProfile> agents,
                                         const MechanismConstants& constants);

struct PenaltyCollection {
  std::vector<double> penalties;
  ServerLedger delta;
};

// Charges every agent free_rider_penalty at its actual contribution.
PenaltyCollection collect_penalties(std::span<const AgentProfile> agents,
                                    const MechanismConstants& constants);

struct FeeCollection {
  std::vector<ContractFee> fees;
  ServerLedger delta;

  std::vector<double> full() const;
  std::vector<double> effective() const;
};

// Charges every agent its contract fee at its current data_amount.
FeeCollection collect_fees(std::span<const AgentProfile> agents,
                           const MechanismConstants& constants);

struct AgentRecord {
  bool won = false;
  double fee_paid = 0.0;
  double payout = 0.0;
};

struct CompetitionOutcome {
  // Agent indices per group. Groups have 3 members, except that the n mod 3
  // leftover agents join the last groups (making them groups of 4, or one
  // group of 5 when n = 5).
  std::vector<std::vector<std::size_t>> groups;
  std::vector<std::size_t> winners;  // one per group, in group order
  std::vector<AgentRecord> records;  // indexed by agent
  double collected_total = 0.0;
  double paid_total = 0.0;
};

// Randomly partitions the agents into groups and picks one winner per group:
// the agent whose reported cost sits at the middle of the group. When several
// agents share a middle value, or a group of 4 has two middle agents, the
// server draws uniformly among them.
CompetitionOutcome run_competition_triples(std::span<const AgentProfile> agents,
                                           std::uint64_t seed);

struct Settlement {
  CompetitionOutcome outcome;         // records and totals filled in
  std::vector<double> net_transfers;  // fee paid minus payout, per agent
  ServerLedger delta;
};

// Winners receive 3/n times the sum of every other agent's fee; losers
// receive nothing. Throws InvariantViolation if payouts exceed collections.
Settlement settle(const CompetitionOutcome& outcome, std::span<const double> fees,
                  const MechanismConstants& constants);

// Probability that a reported cost c lies strictly between two independent
// draws from dist: 2 P(C < c) P(C > c), which is 2F(c)(1 - F(c)) for a
// continuous distribution.
double win_probability(double c, const CostDistribution& dist);

struct SyntheticOptions {
  std::size_t trials = 20000;
  std::uint64_t seed = 0;
  // Draw pool_size costs once per agent and sample pairs from that pool,
  // instead of drawing fresh costs every trial.
  bool fixed_pool = false;
  std::size_t pool_size = 2000;
  unsigned workers = 1;
};

struct SyntheticAgentStats {
  std::size_t wins = 0;
  double win_frequency = 0.0;
  double payout_if_won = 0.0;
  double mean_transfer = 0.0;
  double transfer_stderr = 0.0;
};

struct SyntheticCompetitionResult {
  std::vector<SyntheticAgentStats> agents;
  std::size_t trials = 0;
  double mean_collected = 0.0;
  double mean_paid = 0.0;
};

// Each trial draws two costs from the agent's belief distribution; the agent
// wins when its reported cost lies strictly between them. Only real agents'
// fees fund the payouts. Trial t of agent i always uses the same random
// substream, so different reported costs see common random numbers.
SyntheticCompetitionResult run_competition_synthetic(
    std::span<const AgentProfile> agents,
    std::span<const CostDistribution> beliefs, std::span<const double> fees,
    const SyntheticOptions& options);

}  // namespace fact
