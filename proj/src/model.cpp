#include "fact/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "fact/error.hpp"

namespace fact {

namespace {

bool positive_finite(double x) { return std::isfinite(x) && x > 0.0; }

double std_normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

}  // namespace

MechanismConstants::MechanismConstants(double k, double alpha, std::size_t n)
    : k_(k), alpha_(alpha), n_(n) {
  if (!positive_finite(k)) {
    throw ValidationError("MechanismConstants: k must be positive and finite");
  }
  if (!(alpha >= 0.0 && alpha < 2.0)) {
    throw ValidationError("MechanismConstants: alpha must lie in [0, 2)");
  }
  if (n < 2) {
    throw ValidationError("MechanismConstants: n must be at least 2");
  }
}

AgentProfile::AgentProfile(double true_cost, double reported_cost,
                           double data_amount, std::optional<double> lambda)
    : true_cost_(true_cost),
      reported_cost_(reported_cost),
      data_amount_(data_amount),
      lambda_(lambda) {
  if (!positive_finite(true_cost)) {
    throw ValidationError("AgentProfile: true_cost must be positive");
  }
  if (!positive_finite(reported_cost)) {
    throw ValidationError("AgentProfile: reported_cost must be positive");
  }
  if (!(std::isfinite(data_amount) && data_amount >= 0.0)) {
    throw ValidationError("AgentProfile: data_amount must be nonnegative");
  }
  if (lambda && !(std::isfinite(*lambda) && *lambda >= 0.0)) {
    throw ValidationError("AgentProfile: lambda must be nonnegative");
  }
}

double AgentProfile::assigned_lambda() const {
  if (!lambda_) {
    throw ConfigurationError("AgentProfile: penalty scalar not yet assigned");
  }
  return *lambda_;
}

AgentProfile AgentProfile::with_lambda(double lambda) const {
  return {true_cost_, reported_cost_, data_amount_, lambda};
}

AgentProfile AgentProfile::with_data(double data_amount) const {
  return {true_cost_, reported_cost_, data_amount, lambda_};
}

AgentProfile AgentProfile::with_reported_cost(double reported_cost) const {
  return {true_cost_, reported_cost, data_amount_, lambda_};
}

CostDistribution CostDistribution::gaussian(double mean, double stddev,
                                            std::optional<double> floor) {
  if (!positive_finite(mean) || !positive_finite(stddev)) {
    throw ValidationError("gaussian cost distribution: mean and stddev must be positive");
  }
  const double f = floor.value_or(mean / 100.0);
  if (!positive_finite(f) || f >= mean) {
    throw ValidationError("gaussian cost distribution: floor must lie in (0, mean)");
  }
  return CostDistribution(Gaussian{mean, stddev, f});
}

CostDistribution CostDistribution::around_true_cost(double true_cost) {
  return gaussian(true_cost, true_cost / 10.0);
}

CostDistribution CostDistribution::uniform(double lower, double upper) {
  if (!(std::isfinite(lower) && std::isfinite(upper) && lower >= 0.0 &&
        upper > lower)) {
    throw ValidationError("uniform cost distribution: need 0 <= lower < upper");
  }
  return CostDistribution(Uniform{lower, upper});
}

CostDistribution CostDistribution::empirical(std::vector<double> costs) {
  if (costs.empty()) {
    throw ValidationError("empirical cost distribution: list is empty");
  }
  for (double c : costs) {
    if (!positive_finite(c)) {
      throw ValidationError("empirical cost distribution: costs must be positive");
    }
  }
  std::sort(costs.begin(), costs.end());
  return CostDistribution(Empirical{std::move(costs)});
}

double CostDistribution::sample(rng::Stream& stream) const {
  return std::visit(
      [&](const auto& p) -> double {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, Gaussian>) {
          for (;;) {
            const double x = stream.normal(p.mean, p.stddev);
            if (x > p.floor) return x;
          }
        } else if constexpr (std::is_same_v<T, Uniform>) {
          return stream.uniform(p.lower, p.upper);
        } else {
          return p.sorted_costs[stream.below(p.sorted_costs.size())];
        }
      },
      params_);
}

double CostDistribution::cdf(double x) const {
  return std::visit(
      [&](const auto& p) -> double {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, Gaussian>) {
          if (x <= p.floor) return 0.0;
          const double lo = std_normal_cdf((p.floor - p.mean) / p.stddev);
          const double v = std_normal_cdf((x - p.mean) / p.stddev);
          return std::clamp((v - lo) / (1.0 - lo), 0.0, 1.0);
        } else if constexpr (std::is_same_v<T, Uniform>) {
          if (x <= p.lower) return 0.0;
          if (x >= p.upper) return 1.0;
          return (x - p.lower) / (p.upper - p.lower);
        } else {
          const auto& v = p.sorted_costs;
          const auto count = std::upper_bound(v.begin(), v.end(), x) - v.begin();
          return static_cast<double>(count) / static_cast<double>(v.size());
        }
      },
      params_);
}

double CostDistribution::cdf_below(double x) const {
  if (const auto* e = std::get_if<Empirical>(&params_)) {
    const auto& v = e->sorted_costs;
    const auto count = std::lower_bound(v.begin(), v.end(), x) - v.begin();
    return static_cast<double>(count) / static_cast<double>(v.size());
  }
  return cdf(x);
}

double CostDistribution::median() const {
  return std::visit(
      [&](const auto& p) -> double {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, Gaussian>) {
          // Truncation shifts the median slightly above the mean; bisect.
          double lo = p.floor;
          double hi = p.mean + 10.0 * p.stddev;
          for (int i = 0; i < 200 && hi - lo > 0.0; ++i) {
            const double mid = 0.5 * (lo + hi);
            if (mid == lo || mid == hi) break;
            (cdf(mid) < 0.5 ? lo : hi) = mid;
          }
          return 0.5 * (lo + hi);
        } else if constexpr (std::is_same_v<T, Uniform>) {
          return 0.5 * (p.lower + p.upper);
        } else {
          const auto& v = p.sorted_costs;
          const std::size_t n = v.size();
          return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
        }
      },
      params_);
}

std::string CostDistribution::describe() const {
  std::ostringstream os;
  os.precision(17);
  std::visit(
      [&](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, Gaussian>) {
          os << "gaussian(mean=" << p.mean << ",stddev=" << p.stddev
             << ",floor=" << p.floor << ")";
        } else if constexpr (std::is_same_v<T, Uniform>) {
          os << "uniform(" << p.lower << "," << p.upper << ")";
        } else {
          os << "empirical(n=" << p.sorted_costs.size() << ")";
        }
      },
      params_);
  return os.str();
}

double others_sum(std::span<const AgentProfile> profiles, std::size_t i) {
  if (i >= profiles.size()) {
    throw ValidationError("others_sum: agent index " + std::to_string(i) +
                          " out of range for " +
                          std::to_string(profiles.size()) + " agents");
  }
  double sum = 0.0;
  for (std::size_t j = 0; j < profiles.size(); ++j) {
    if (j != i) sum += profiles[j].data_amount();
  }
  return sum;
}

}  // namespace fact
