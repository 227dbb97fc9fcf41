#pragma once

// Closed-form optima and the numeric best-response oracles that check them.
// The oracles only ever see an objective callable; they share no code with
// the closed forms.

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <vector>

namespace fact {

enum class SearchMethod { kClosedForm, kGoldenSection, kGrid };

struct BestResponse {
  double argmin_m = 0.0;
  std::optional<double> argmin_c;  // absent for one-dimensional searches
  double min_value = 0.0;
  SearchMethod method = SearchMethod::kClosedForm;
  // Final bracket width (1-D) or grid step per axis (2-D).
  double resolution_m = 0.0;
  double resolution_c = 0.0;
  // The objective is flat along this axis across the whole search range, so
  // the reported coordinate is not identified.
  bool plateau_m = false;
  bool plateau_c = false;
  std::size_t evaluations = 0;
};

// sqrt(k / (2c)).
double optimal_local_data(double c, double k);

// max(0, sqrt(k/(2c)) - sum_others). The unclamped expression goes negative
// once the others contribute more than the agent would alone; the agent then
// free rides completely.
double optimal_federated_data(double c, double k, double sum_others);

// Golden-section search on [lower, upper]; stops once the bracket is narrower
// than tol. The objective must be unimodal on the interval.
BestResponse numeric_argmin_1d(const std::function<double(double)>& objective,
                               double lower, double upper, double tol = 1e-8);

struct SearchRange {
  double lower;
  double upper;
};

struct GridOptions {
  std::size_t grid = 33;    // points per axis, >= 16
  std::size_t refine = 3;   // local refinement passes after the coarse scan
  unsigned workers = 1;
  double plateau_tolerance = 1e-12;  // relative spread that counts as flat
};

// Coarse grid scan over (m, c) followed by `refine` zoomed scans around the
// incumbent. Deterministic for any worker count.
BestResponse numeric_argmin_2d(
    const std::function<double(double, double)>& objective, SearchRange m_range,
    SearchRange c_range, const GridOptions& options = {});

struct StationarityReport {
  std::vector<double> point;
  std::vector<double> partials;
  std::vector<double> tolerances;
  double value = 0.0;
  bool passed = false;
  // max_j |partial_j| / tolerance_j; <= 1 when passed.
  double worst_ratio = 0.0;
};

// Central differences with per-coordinate step max(step * |x_j|, 1e-9).
// Component j passes when |partial_j| <= rel_tol * |f(x)| / |x_j|, i.e. the
// log-log slope of the objective along that axis is below rel_tol.
StationarityReport verify_stationarity(
    const std::function<double(std::span<const double>)>& objective,
    std::vector<double> point, double step = 1e-6, double rel_tol = 1e-5);

}  // namespace fact
