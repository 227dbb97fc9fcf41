#pragma once

// Closed-form agent losses, penalties, fees and gaps. Everything here is a
// pure function of scalars: m is the agent's data amount, c a per-sample cost,
// k the composite noise scale and sum_others the data contributed by all
// other agents.

#include <cstddef>

#include "fact/model.hpp"

namespace fact {

enum class CompetitionBranch { kWon, kLost };

// k/(2m) + c m. Loss of training alone.
double local_loss(double m, double c, double k);

// k/(2(m + sum_others)) + c m. Loss in plain federated training.
double federated_loss(double m, double sum_others, double c, double k);

// Penalty harshness that gives the agent an IR margin of alpha at its
// optimum sqrt(k/(2c)). Throws SingularityError when sum_others == 0.
double lambda_for(double c, double sum_others, double k, double alpha);

// Free-rider penalty for contributing m while having reported reported_c.
// The vertex of the quadratic sits slightly past m_c* = sqrt(k/(2 reported_c))
// so that, together with the federated loss, the total is stationary at m_c*.
double free_rider_penalty(double m, double reported_c, double lambda,
                          double sum_others, double k);

// Federated loss at the agent's true cost plus the penalty at the reported
// cost. competition_transfer is zero.
LossBreakdown pfl_loss(double m, double true_c, double reported_c,
                       double lambda, double sum_others, double k);

// Closed-form advantage of penalized federated training over local training
// at the optimum, when lambda comes from lambda_for().
double ir_gap_analytic(double m_star, double sum_others, double k,
                       double alpha);

struct ContractFee {
  double effective;  // k sum_others / (2 m (m + sum_others))
  double full;       // effective - free_rider_penalty
};

// Fee the server collects before training: the agent's own improvement over
// local training, evaluated at the reported cost.
ContractFee contract_fee(double m, double reported_c, double sum_others,
                         double k, double lambda);

// PFL loss plus the competition transfer. On kLost the agent has paid its fee
// and received nothing; on kWon it additionally receives 3/n of the other
// agents' fees.
LossBreakdown fact_loss(double m, double true_c, double reported_c,
                        double lambda, double sum_others, double k,
                        std::size_t n, CompetitionBranch branch,
                        double others_fee_sum);

// Expected FACT loss over the competition outcome, in the simplified form
//   k/(2m) + true_c m - (3 win_prob / n) others_fee_sum.
// The penalty and fee cancel, so lambda and reported_c do not appear.
double expected_fact_loss(double m, double true_c, double k, std::size_t n,
                          double win_prob, double others_fee_sum);

// The same expectation as the probability-weighted mixture of both
// fact_loss branches. Kept as an independent evaluation route.
double expected_fact_loss_mixture(double m, double true_c, double reported_c,
                                  double lambda, double sum_others, double k,
                                  std::size_t n, double win_prob,
                                  double others_fee_sum);

}  // namespace fact
