#include "fact/equilibrium.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "fact/error.hpp"
#include "fact/parallel.hpp"

namespace fact {

namespace {

double checked(double value, double point) {
  if (!std::isfinite(value)) {
    throw SearchError("objective is not finite at m = " + std::to_string(point),
                      point);
  }
  return value;
}

struct Grid {
  double lower;
  double step;
  double at(std::size_t i) const { return lower + step * static_cast<double>(i); }
};

}  // namespace

double optimal_local_data(double c, double k) {
  if (!(c > 0.0 && k > 0.0)) {
    throw DomainError("optimal_local_data: c and k must be positive");
  }
  return std::sqrt(k / (2.0 * c));
}

double optimal_federated_data(double c, double k, double sum_others) {
  if (!(sum_others >= 0.0)) {
    throw DomainError("optimal_federated_data: sum_others must be nonnegative");
  }
  return std::max(0.0, optimal_local_data(c, k) - sum_others);
}

BestResponse numeric_argmin_1d(const std::function<double(double)>& objective,
                               double lower, double upper, double tol) {
  if (!(lower < upper)) {
    throw DomainError("numeric_argmin_1d: need lower < upper");
  }
  if (!(tol > 0.0)) {
    throw DomainError("numeric_argmin_1d: tol must be positive");
  }
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  std::size_t evaluations = 0;
  auto f = [&](double x) {
    ++evaluations;
    return checked(objective(x), x);
  };

  double a = lower;
  double b = upper;
  double x1 = b - inv_phi * (b - a);
  double x2 = a + inv_phi * (b - a);
  double f1 = f(x1);
  double f2 = f(x2);
  // The bracket shrinks by 1/phi per iteration; 400 iterations exceed the
  // dynamic range of a double.
  for (int it = 0; it < 400 && (b - a) > tol; ++it) {
    if (f1 <= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - inv_phi * (b - a);
      f1 = f(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + inv_phi * (b - a);
      f2 = f(x2);
    }
  }
  BestResponse result;
  result.argmin_m = 0.5 * (a + b);
  result.min_value = f(result.argmin_m);
  result.method = SearchMethod::kGoldenSection;
  result.resolution_m = b - a;
  result.evaluations = evaluations;
  return result;
}

BestResponse numeric_argmin_2d(
    const std::function<double(double, double)>& objective, SearchRange m_range,
    SearchRange c_range, const GridOptions& options) {
  if (!(m_range.lower < m_range.upper) || !(c_range.lower < c_range.upper)) {
    throw DomainError("numeric_argmin_2d: ranges must have positive length");
  }
  if (options.grid < 16) {
    throw DomainError("numeric_argmin_2d: grid must have at least 16 points per axis");
  }
  const std::size_t g = options.grid;
  const double segments = static_cast<double>(g - 1);
  std::vector<double> values(g * g);
  std::size_t evaluations = 0;

  auto scan = [&](const Grid& gm, const Grid& gc) {
    parallel_for(g, options.workers, [&](std::size_t i) {
      const double m = gm.at(i);
      for (std::size_t j = 0; j < g; ++j) {
        values[i * g + j] = objective(m, gc.at(j));
      }
    });
    evaluations += g * g;
    std::size_t best = 0;
    for (std::size_t idx = 0; idx < values.size(); ++idx) {
      if (!std::isfinite(values[idx])) {
        throw SearchError("objective is not finite at (m, c) = (" +
                              std::to_string(gm.at(idx / g)) + ", " +
                              std::to_string(gc.at(idx % g)) + ")",
                          gm.at(idx / g));
      }
      if (values[idx] < values[best]) best = idx;
    }
    return best;
  };

  Grid gm{m_range.lower, (m_range.upper - m_range.lower) / segments};
  Grid gc{c_range.lower, (c_range.upper - c_range.lower) / segments};
  std::size_t best = scan(gm, gc);

  // Flatness is judged on the coarse grid, which spans the whole range.
  auto spread = [&](bool along_m) {
    const std::size_t bi = best / g;
    const std::size_t bj = best % g;
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    double scale = 0.0;
    for (std::size_t t = 0; t < g; ++t) {
      const double v = along_m ? values[t * g + bj] : values[bi * g + t];
      lo = std::min(lo, v);
      hi = std::max(hi, v);
      scale = std::max(scale, std::abs(v));
    }
    return (hi - lo) <= options.plateau_tolerance * std::max(scale, 1e-300);
  };
  const bool plateau_m = spread(true);
  const bool plateau_c = spread(false);

  double best_m = gm.at(best / g);
  double best_c = gc.at(best % g);
  double best_value = values[best];
  for (std::size_t pass = 0; pass < options.refine; ++pass) {
    const double lo_m = std::max(m_range.lower, best_m - gm.step);
    const double hi_m = std::min(m_range.upper, best_m + gm.step);
    const double lo_c = std::max(c_range.lower, best_c - gc.step);
    const double hi_c = std::min(c_range.upper, best_c + gc.step);
    gm = Grid{lo_m, (hi_m - lo_m) / segments};
    gc = Grid{lo_c, (hi_c - lo_c) / segments};
    best = scan(gm, gc);
    if (values[best] <= best_value) {
      best_m = gm.at(best / g);
      best_c = gc.at(best % g);
      best_value = values[best];
    }
  }

  BestResponse result;
  result.argmin_m = best_m;
  result.argmin_c = best_c;
  result.min_value = best_value;
  result.method = SearchMethod::kGrid;
  result.resolution_m = gm.step;
  result.resolution_c = gc.step;
  result.plateau_m = plateau_m;
  result.plateau_c = plateau_c;
  result.evaluations = evaluations;
  return result;
}

StationarityReport verify_stationarity(
    const std::function<double(std::span<const double>)>& objective,
    std::vector<double> point, double step, double rel_tol) {
  StationarityReport report;
  report.value = objective(point);
  if (!std::isfinite(report.value)) {
    throw SearchError("verify_stationarity: objective not finite at the point",
                      point.empty() ? 0.0 : point.front());
  }
  std::vector<double> probe = point;
  report.passed = true;
  for (std::size_t j = 0; j < point.size(); ++j) {
    const double x = point[j];
    const double h = std::max(step * std::abs(x), 1e-9);
    probe[j] = x + h;
    const double up = objective(probe);
    probe[j] = x - h;
    const double down = objective(probe);
    probe[j] = x;
    if (!std::isfinite(up) || !std::isfinite(down)) {
      throw SearchError("verify_stationarity: objective not finite near the point",
                        x);
    }
    const double partial = (up - down) / (2.0 * h);
    const double tolerance =
        rel_tol * std::abs(report.value) / std::max(std::abs(x), 1e-300);
    report.partials.push_back(partial);
    report.tolerances.push_back(tolerance);
    const double ratio = std::abs(partial) / tolerance;
    report.worst_ratio = std::max(report.worst_ratio, ratio);
    if (!(std::abs(partial) <= tolerance)) report.passed = false;
  }
  report.point = std::move(point);
  return report;
}

}  // namespace fact
