#pragma once

// Simulated federated training on a quadratic with controllable gradient
// noise: weighted FedAvg rounds, pausable local updates, and the empirical
// checks of the distributed SGD convergence bound.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "fact/model.hpp"
#include "fact/rng.hpp"

namespace fact {

// f(w) = 1/2 sum_j a_j (w_j - w*_j)^2 with a_j evenly spaced in [mu, L], so
// the largest curvature is exactly L and f* = 0. Every per-sample gradient
// carries additive Gaussian noise with E|xi|^2 = sigma^2 (sigma^2 / d per
// coordinate).
class SyntheticTask {
 public:
  SyntheticTask(std::size_t dimension, double lipschitz, double mu,
                double noise_variance);

  std::size_t dimension() const noexcept { return curvature_.size(); }
  double lipschitz() const noexcept { return lipschitz_; }
  double mu() const noexcept { return mu_; }
  double noise_variance() const noexcept { return noise_variance_; }
  const std::vector<double>& curvature() const noexcept { return curvature_; }
  const std::vector<double>& optimum() const noexcept { return optimum_; }

  double value(std::span<const double> w) const;
  std::vector<double> gradient(std::span<const double> w) const;
  double gradient_norm_sq(std::span<const double> w) const;

  // One sample's stochastic gradient.
  void sample_gradient(std::span<const double> w, rng::Stream& stream,
                       std::span<double> out) const;

  // Mean of `batch` per-sample gradients. The mean of independent Gaussian
  // noise terms is itself Gaussian with variance sigma^2 / (d batch) per
  // coordinate, so it is drawn in one shot.
  void batch_gradient(std::span<const double> w, std::size_t batch,
                      rng::Stream& stream, std::span<double> out) const;

 private:
  double lipschitz_;
  double mu_;
  double noise_variance_;
  std::vector<double> curvature_;
  std::vector<double> optimum_;
};

// Nearest integer, at least 1; zero stays zero (a free rider).
std::size_t to_batch_size(double data_amount);

// Per-agent cursor for pausable local training. Each epoch is one pass over
// the agent's batch_size samples taken as a single batch, so the agent can
// run at most `epochs` gradient steps in total.
struct AgentState {
  std::uint32_t agent = 0;
  std::size_t batch_size = 0;
  std::size_t epochs = 1;
  std::size_t steps_done = 0;

  bool free_rider() const noexcept { return batch_size == 0; }
  std::size_t steps_left() const noexcept {
    return steps_done >= epochs ? 0 : epochs - steps_done;
  }
};

// Runs up to h noisy gradient steps from `params`, then pauses. The noise of
// step s is drawn from substream (seed, agent, s), so pausing and resuming
// never changes the trajectory. Returns the number of steps taken (0 for a
// free rider or an agent that has exhausted its epochs).
std::size_t agent_update(std::vector<double>& params, AgentState& state,
                         const SyntheticTask& task, std::size_t h, double gamma,
                         std::uint64_t seed);

struct TrainingConfig {
  std::size_t rounds = 100;      // T
  std::size_t local_steps = 1;   // h
  std::size_t epochs = 100;      // E
  double step_size = 0.05;       // gamma
  std::uint64_t seed = 0;
  unsigned workers = 1;
};

struct TrainingRun {
  std::size_t rounds = 0;
  std::size_t local_steps = 0;
  std::size_t epochs = 0;
  double step_size = 0.0;
  std::vector<std::size_t> batch_sizes;
  std::vector<double> weights;  // s_i = m_i / sum m; zero for free riders
  std::vector<bool> free_riders;
  // |grad f(w^t)|^2 of the aggregate iterate entering round t, t = 0..T-1.
  std::vector<double> grad_norm_history;
  std::size_t effective_batch = 0;
  double initial_gap = 0.0;  // f(w^0) - f*
  std::vector<double> final_params;

  double mean_grad_norm_sq() const;
};

// T rounds of broadcast, parallel agent_update and s_i-weighted averaging,
// starting from w = 0.
TrainingRun run_pfl_training(std::span<const double> data_amounts,
                             const SyntheticTask& task,
                             const TrainingConfig& config);
TrainingRun run_pfl_training(std::span<const AgentProfile> agents,
                             const SyntheticTask& task,
                             const TrainingConfig& config);

// 2 gap / (gamma T) + gamma sigma^2 L / (2 sum m). Requires gamma L < 2.
double convergence_bound(const TrainingRun& run, const SyntheticTask& task,
                         double initial_gap);

struct VariancePoint {
  std::size_t batch = 0;
  double variance = 0.0;  // E |mean gradient - true gradient|^2
};

// Empirical variance of the M-sample mean gradient at a fixed point, built by
// averaging M individually drawn per-sample gradients.
std::vector<VariancePoint> measure_variance_scaling(
    const SyntheticTask& task, std::span<const std::size_t> batch_sizes,
    std::size_t draws, std::uint64_t seed, unsigned workers = 1);

// Least-squares slope of log(variance) against log(batch).
double loglog_slope(std::span<const VariancePoint> points);

}  // namespace fact
