#pragma once

// Value types shared by every module. All of them validate on construction
// and are immutable afterwards.

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "fact/rng.hpp"

namespace fact {

// k is the composite noise scale (step size x gradient variance x Lipschitz
// constant). Only the product enters the mechanism formulas.
class MechanismConstants {
 public:
  MechanismConstants(double k, double alpha, std::size_t n);

  double k() const noexcept { return k_; }
  double alpha() const noexcept { return alpha_; }
  std::size_t n() const noexcept { return n_; }

  MechanismConstants with_n(std::size_t n) const { return {k_, alpha_, n}; }

 private:
  double k_;
  double alpha_;
  std::size_t n_;
};

class AgentProfile {
 public:
  AgentProfile(double true_cost, double reported_cost, double data_amount,
               std::optional<double> lambda = std::nullopt);

  static AgentProfile truthful(double cost, double data_amount) {
    return {cost, cost, data_amount};
  }

  double true_cost() const noexcept { return true_cost_; }
  double reported_cost() const noexcept { return reported_cost_; }
  double data_amount() const noexcept { return data_amount_; }
  const std::optional<double>& lambda() const noexcept { return lambda_; }

  // Throws ConfigurationError when the server has not assigned lambda yet.
  double assigned_lambda() const;

  AgentProfile with_lambda(double lambda) const;
  AgentProfile with_data(double data_amount) const;
  AgentProfile with_reported_cost(double reported_cost) const;

 private:
  double true_cost_;
  double reported_cost_;
  double data_amount_;
  std::optional<double> lambda_;
};

// Belief or population distribution over per-sample costs. Sampling never
// returns a nonpositive cost.
class CostDistribution {
 public:
  struct Gaussian {
    double mean;
    double stddev;
    double floor;  // samples <= floor are redrawn
  };
  struct Uniform {
    double lower;
    double upper;
  };
  struct Empirical {
    std::vector<double> sorted_costs;
  };

  // floor defaults to mean / 100.
  static CostDistribution gaussian(double mean, double stddev,
                                   std::optional<double> floor = std::nullopt);
  // Gaussian centred on `true_cost` with stddev true_cost / 10.
  static CostDistribution around_true_cost(double true_cost);
  static CostDistribution uniform(double lower, double upper);
  static CostDistribution empirical(std::vector<double> costs);

  double sample(rng::Stream& stream) const;

  // P(C <= x)
  double cdf(double x) const;
  // P(C < x); differs from cdf() only at atoms of an empirical list.
  double cdf_below(double x) const;

  double median() const;
  std::string describe() const;

  const std::variant<Gaussian, Uniform, Empirical>& params() const noexcept {
    return params_;
  }

 private:
  explicit CostDistribution(std::variant<Gaussian, Uniform, Empirical> p)
      : params_(std::move(p)) {}

  std::variant<Gaussian, Uniform, Empirical> params_;
};

// A loss decomposed into its four sources. total is always the left-to-right
// sum of the parts, computed once at construction.
class LossBreakdown {
 public:
  LossBreakdown(double convergence_term, double data_cost,
                double free_rider_penalty, double competition_transfer)
      : convergence_term_(convergence_term),
        data_cost_(data_cost),
        free_rider_penalty_(free_rider_penalty),
        competition_transfer_(competition_transfer),
        total_(convergence_term + data_cost + free_rider_penalty +
               competition_transfer) {}

  double convergence_term() const noexcept { return convergence_term_; }
  double data_cost() const noexcept { return data_cost_; }
  double free_rider_penalty() const noexcept { return free_rider_penalty_; }
  double competition_transfer() const noexcept { return competition_transfer_; }
  double total() const noexcept { return total_; }

  LossBreakdown with_transfer(double transfer) const {
    return {convergence_term_, data_cost_, free_rider_penalty_, transfer};
  }

 private:
  double convergence_term_;
  double data_cost_;
  double free_rider_penalty_;
  double competition_transfer_;
  double total_;
};

// Sum of data_amount over every agent except i.
double others_sum(std::span<const AgentProfile> profiles, std::size_t i);

}  // namespace fact
