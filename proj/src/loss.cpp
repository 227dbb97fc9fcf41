#include "fact/loss.hpp"

#include <cmath>
#include <string>

#include "fact/error.hpp"

namespace fact {

namespace {

void require(bool ok, const char* what) {
  if (!ok) throw DomainError(what);
}

bool positive(double x) { return std::isfinite(x) && x > 0.0; }

double optimum(double c, double k) { return std::sqrt(k / (2.0 * c)); }

}  // namespace

double local_loss(double m, double c, double k) {
  require(std::isfinite(m) && m > 0.0,
          "local_loss: m must be positive (no data means no local model)");
  require(positive(c) && positive(k), "local_loss: c and k must be positive");
  return k / (2.0 * m) + c * m;
}

double federated_loss(double m, double sum_others, double c, double k) {
  require(m >= 0.0 && sum_others >= 0.0,
          "federated_loss: data amounts must be nonnegative");
  require(m + sum_others > 0.0,
          "federated_loss: total federated data must be positive");
  require(positive(c) && positive(k), "federated_loss: c and k must be positive");
  return k / (2.0 * (m + sum_others)) + c * m;
}

double lambda_for(double c, double sum_others, double k, double alpha) {
  require(positive(c) && positive(k), "lambda_for: c and k must be positive");
  require(alpha >= 0.0 && alpha < 2.0, "lambda_for: alpha must lie in [0, 2)");
  if (!(sum_others > 0.0)) {
    throw SingularityError(
        "lambda_for: other agents contribute no data; the penalty scalar is "
        "singular (at least two contributing agents are required)");
  }
  const double m_star = optimum(c, k);
  const double total = sum_others + m_star;
  const double gap = c - k / (2.0 * total * total);
  return m_star * total / ((2.0 - alpha) * k * sum_others) * gap * gap;
}

double free_rider_penalty(double m, double reported_c, double lambda,
                          double sum_others, double k) {
  if (!(lambda > 0.0)) {
    throw DegeneratePenaltyError(
        "free_rider_penalty: lambda must be positive; with penalties disabled "
        "use federated_loss directly");
  }
  require(std::isfinite(lambda), "free_rider_penalty: lambda must be finite");
  require(m >= 0.0 && sum_others >= 0.0,
          "free_rider_penalty: data amounts must be nonnegative");
  require(positive(reported_c) && positive(k),
          "free_rider_penalty: reported cost and k must be positive");
  const double m_c = optimum(reported_c, k);
  const double total = m_c + sum_others;
  const double arg =
      (reported_c / 2.0 - k / (4.0 * total * total)) / lambda + m_c - m;
  return lambda * arg * arg;
}

LossBreakdown pfl_loss(double m, double true_c, double reported_c,
                       double lambda, double sum_others, double k) {
  require(m >= 0.0 && m + sum_others > 0.0,
          "pfl_loss: total federated data must be positive");
  require(positive(true_c) && positive(k), "pfl_loss: costs and k must be positive");
  const double convergence = k / (2.0 * (m + sum_others));
  const double data_cost = true_c * m;
  const double penalty =
      free_rider_penalty(m, reported_c, lambda, sum_others, k);
  return {convergence, data_cost, penalty, 0.0};
}

double ir_gap_analytic(double m_star, double sum_others, double k,
                       double alpha) {
  require(positive(m_star), "ir_gap_analytic: m_star must be positive");
  require(positive(sum_others), "ir_gap_analytic: sum_others must be positive");
  require(positive(k), "ir_gap_analytic: k must be positive");
  return alpha / 4.0 * (k * sum_others) / (m_star * (sum_others + m_star));
}

ContractFee contract_fee(double m, double reported_c, double sum_others,
                         double k, double lambda) {
  require(std::isfinite(m) && m > 0.0,
          "contract_fee: m must be positive (the fee divides by m)");
  const double effective = k * sum_others / (2.0 * m * (m + sum_others));
  const double penalty =
      free_rider_penalty(m, reported_c, lambda, sum_others, k);
  return {effective, effective - penalty};
}

LossBreakdown fact_loss(double m, double true_c, double reported_c,
                        double lambda, double sum_others, double k,
                        std::size_t n, CompetitionBranch branch,
                        double others_fee_sum) {
  require(n >= 2, "fact_loss: at least two agents are required");
  const LossBreakdown pfl =
      pfl_loss(m, true_c, reported_c, lambda, sum_others, k);
  const double fee = contract_fee(m, reported_c, sum_others, k, lambda).full;
  double transfer = fee;
  if (branch == CompetitionBranch::kWon) {
    transfer -= 3.0 / static_cast<double>(n) * others_fee_sum;
  }
  return pfl.with_transfer(transfer);
}

double expected_fact_loss(double m, double true_c, double k, std::size_t n,
                          double win_prob, double others_fee_sum) {
  require(win_prob >= 0.0 && win_prob <= 1.0,
          "expected_fact_loss: win probability must lie in [0, 1]");
  require(n >= 2, "expected_fact_loss: at least two agents are required");
  return local_loss(m, true_c, k) -
         3.0 * win_prob / static_cast<double>(n) * others_fee_sum;
}

double expected_fact_loss_mixture(double m, double true_c, double reported_c,
                                  double lambda, double sum_others, double k,
                                  std::size_t n, double win_prob,
                                  double others_fee_sum) {
  require(win_prob >= 0.0 && win_prob <= 1.0,
          "expected_fact_loss: win probability must lie in [0, 1]");
  const double won = fact_loss(m, true_c, reported_c, lambda, sum_others, k, n,
                               CompetitionBranch::kWon, others_fee_sum)
                         .total();
  const double lost = fact_loss(m, true_c, reported_c, lambda, sum_others, k,
                                n, CompetitionBranch::kLost, others_fee_sum)
                          .total();
  return win_prob * won + (1.0 - win_prob) * lost;
}

}  // namespace fact
