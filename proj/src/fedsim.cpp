#include "fact/fedsim.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fact/error.hpp"
#include "fact/parallel.hpp"

namespace fact {

SyntheticTask::SyntheticTask(std::size_t dimension, double lipschitz, double mu,
                             double noise_variance)
    : lipschitz_(lipschitz), mu_(mu), noise_variance_(noise_variance) {
  if (dimension < 1) throw ValidationError("SyntheticTask: dimension must be >= 1");
  if (!(lipschitz > 0.0 && std::isfinite(lipschitz))) {
    throw ValidationError("SyntheticTask: Lipschitz constant must be positive");
  }
  if (!(mu > 0.0 && mu <= lipschitz)) {
    throw ValidationError("SyntheticTask: need 0 < mu <= L");
  }
  if (!(noise_variance >= 0.0 && std::isfinite(noise_variance))) {
    throw ValidationError("SyntheticTask: noise variance must be nonnegative");
  }
  curvature_.resize(dimension);
  for (std::size_t j = 0; j < dimension; ++j) {
    curvature_[j] = dimension == 1
                        ? lipschitz
                        : mu + (lipschitz - mu) * static_cast<double>(j) /
                                   static_cast<double>(dimension - 1);
  }
  curvature_.back() = lipschitz;
  optimum_.assign(dimension, 1.0);
}

double SyntheticTask::value(std::span<const double> w) const {
  double v = 0.0;
  for (std::size_t j = 0; j < curvature_.size(); ++j) {
    const double d = w[j] - optimum_[j];
    v += 0.5 * curvature_[j] * d * d;
  }
  return v;
}

std::vector<double> SyntheticTask::gradient(std::span<const double> w) const {
  std::vector<double> g(curvature_.size());
  for (std::size_t j = 0; j < g.size(); ++j) {
    g[j] = curvature_[j] * (w[j] - optimum_[j]);
  }
  return g;
}

double SyntheticTask::gradient_norm_sq(std::span<const double> w) const {
  double s = 0.0;
  for (std::size_t j = 0; j < curvature_.size(); ++j) {
    const double g = curvature_[j] * (w[j] - optimum_[j]);
    s += g * g;
  }
  return s;
}

void SyntheticTask::sample_gradient(std::span<const double> w,
                                    rng::Stream& stream,
                                    std::span<double> out) const {
  const double sd =
      std::sqrt(noise_variance_ / static_cast<double>(curvature_.size()));
  for (std::size_t j = 0; j < curvature_.size(); ++j) {
    out[j] = curvature_[j] * (w[j] - optimum_[j]) + sd * stream.normal();
  }
}

void SyntheticTask::batch_gradient(std::span<const double> w, std::size_t batch,
                                   rng::Stream& stream,
                                   std::span<double> out) const {
  if (batch == 0) throw DomainError("batch_gradient: batch must be positive");
  const double sd = std::sqrt(noise_variance_ /
                              (static_cast<double>(curvature_.size()) *
                               static_cast<double>(batch)));
  for (std::size_t j = 0; j < curvature_.size(); ++j) {
    out[j] = curvature_[j] * (w[j] - optimum_[j]) + sd * stream.normal();
  }
}

std::size_t to_batch_size(double data_amount) {
  if (!(data_amount >= 0.0) || !std::isfinite(data_amount)) {
    throw DomainError("to_batch_size: data amount must be nonnegative");
  }
  if (data_amount == 0.0) return 0;
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(data_amount)));
}

std::size_t agent_update(std::vector<double>& params, AgentState& state,
                         const SyntheticTask& task, std::size_t h, double gamma,
                         std::uint64_t seed) {
  if (h < 1) throw DomainError("agent_update: h must be at least 1");
  if (state.free_rider()) return 0;
  const std::size_t steps = std::min(h, state.steps_left());
  std::vector<double> grad(task.dimension());
  for (std::size_t s = 0; s < steps; ++s) {
    rng::Stream stream(seed, rng::Domain::kGradientNoise, state.agent,
                       state.steps_done);
    task.batch_gradient(params, state.batch_size, stream, grad);
    for (std::size_t j = 0; j < params.size(); ++j) params[j] -= gamma * grad[j];
    ++state.steps_done;
  }
  return steps;
}

double TrainingRun::mean_grad_norm_sq() const {
  if (grad_norm_history.empty()) return 0.0;
  return std::accumulate(grad_norm_history.begin(), grad_norm_history.end(), 0.0) /
         static_cast<double>(grad_norm_history.size());
}

TrainingRun run_pfl_training(std::span<const double> data_amounts,
                             const SyntheticTask& task,
                             const TrainingConfig& config) {
  if (config.rounds < 1 || config.local_steps < 1 || config.epochs < 1) {
    throw ConfigurationError("run_pfl_training: T, h and E must all be >= 1");
  }
  if (!(config.step_size > 0.0)) {
    throw ConfigurationError("run_pfl_training: step size must be positive");
  }
  const std::size_t n = data_amounts.size();
  TrainingRun run;
  run.rounds = config.rounds;
  run.local_steps = config.local_steps;
  run.epochs = config.epochs;
  run.step_size = config.step_size;

  std::vector<AgentState> states(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t b = to_batch_size(data_amounts[i]);
    states[i] = AgentState{static_cast<std::uint32_t>(i), b, config.epochs, 0};
    run.batch_sizes.push_back(b);
    run.free_riders.push_back(b == 0);
    run.effective_batch += b;
  }
  if (run.effective_batch == 0) {
    throw NoContributorError("run_pfl_training: every agent contributes zero data");
  }
  for (std::size_t b : run.batch_sizes) {
    run.weights.push_back(static_cast<double>(b) /
                          static_cast<double>(run.effective_batch));
  }

  std::vector<double> w(task.dimension(), 0.0);
  run.initial_gap = task.value(w);
  std::vector<std::vector<double>> local(n);
  for (std::size_t t = 0; t < config.rounds; ++t) {
    run.grad_norm_history.push_back(task.gradient_norm_sq(w));
    parallel_for(n, config.workers, [&](std::size_t i) {
      local[i] = w;
      agent_update(local[i], states[i], task, config.local_steps,
                   config.step_size, config.seed);
    });
    std::vector<double> next(w.size(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      if (run.weights[i] == 0.0) continue;
      for (std::size_t j = 0; j < w.size(); ++j) next[j] += run.weights[i] * local[i][j];
    }
    w = std::move(next);
  }
  run.final_params = w;
  return run;
}

TrainingRun run_pfl_training(std::span<const AgentProfile> agents,
                             const SyntheticTask& task,
                             const TrainingConfig& config) {
  std::vector<double> m;
  m.reserve(agents.size());
  for (const auto& a : agents) m.push_back(a.data_amount());
  return run_pfl_training(m, task, config);
}

double convergence_bound(const TrainingRun& run, const SyntheticTask& task,
                         double initial_gap) {
  const double gl = run.step_size * task.lipschitz();
  if (!(gl < 2.0)) {
    throw DomainError("convergence_bound: requires step size x Lipschitz < 2");
  }
  if (run.rounds == 0 || run.effective_batch == 0) {
    throw DomainError("convergence_bound: run has no rounds or no data");
  }
  return 2.0 * initial_gap / (run.step_size * static_cast<double>(run.rounds)) +
         run.step_size * task.noise_variance() * task.lipschitz() /
             (2.0 * static_cast<double>(run.effective_batch));
}

std::vector<VariancePoint> measure_variance_scaling(
    const SyntheticTask& task, std::span<const std::size_t> batch_sizes,
    std::size_t draws, std::uint64_t seed, unsigned workers) {
  if (draws < 1000) {
    throw DomainError("measure_variance_scaling: need at least 1000 draws");
  }
  const std::size_t d = task.dimension();
  const std::vector<double> w(d, 0.0);
  const std::vector<double> truth = task.gradient(w);
  std::vector<VariancePoint> out;
  for (std::size_t bi = 0; bi < batch_sizes.size(); ++bi) {
    const std::size_t m = batch_sizes[bi];
    if (m == 0) throw DomainError("measure_variance_scaling: batch must be positive");
    const std::size_t blocks = block_count(draws);
    std::vector<double> partial(blocks, 0.0);
    parallel_for(blocks, workers, [&](std::size_t b) {
      std::vector<double> g(d), mean(d);
      const std::size_t first = b * kReductionBlock;
      const std::size_t last = std::min(draws, first + kReductionBlock);
      double acc = 0.0;
      for (std::size_t r = first; r < last; ++r) {
        rng::Stream stream(seed, rng::Domain::kVarianceProbe,
                           static_cast<std::uint32_t>(bi), r);
        std::fill(mean.begin(), mean.end(), 0.0);
        for (std::size_t s = 0; s < m; ++s) {
          task.sample_gradient(w, stream, g);
          for (std::size_t j = 0; j < d; ++j) mean[j] += g[j];
        }
        for (std::size_t j = 0; j < d; ++j) {
          const double e = mean[j] / static_cast<double>(m) - truth[j];
          acc += e * e;
        }
      }
      partial[b] = acc;
    });
    const double total = std::accumulate(partial.begin(), partial.end(), 0.0);
    out.push_back({m, total / static_cast<double>(draws)});
  }
  return out;
}

double loglog_slope(std::span<const VariancePoint> points) {
  if (points.size() < 2) throw DomainError("loglog_slope: need at least two points");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (const auto& p : points) {
    if (!(p.variance > 0.0)) throw DomainError("loglog_slope: variance must be positive");
    const double x = std::log(static_cast<double>(p.batch));
    const double y = std::log(p.variance);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double n = static_cast<double>(points.size());
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace fact
