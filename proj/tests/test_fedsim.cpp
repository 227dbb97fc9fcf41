#include <doctest.h>

#include <cmath>
#include <vector>

#include "fact/error.hpp"
#include "fact/fedsim.hpp"
#include "fact/rng.hpp"

using namespace fact;
using doctest::Approx;

namespace {

SyntheticTask standard_task(double noise_variance = 4.0) {
  return SyntheticTask(10, 10.0, 1.0, noise_variance);
}

TrainingConfig config(std::size_t rounds, std::size_t h, std::uint64_t seed) {
  TrainingConfig c;
  c.rounds = rounds;
  c.local_steps = h;
  c.epochs = rounds * h;
  c.step_size = 0.05;
  c.seed = seed;
  return c;
}

double tail_mean(const std::vector<double>& v, std::size_t from) {
  double s = 0.0;
  for (std::size_t i = from; i < v.size(); ++i) s += v[i];
  return s / static_cast<double>(v.size() - from);
}

}  // namespace

TEST_CASE("task shape and validation") {
  const auto task = standard_task();
  CHECK(task.curvature().front() == 1.0);
  CHECK(task.curvature().back() == 10.0);
  CHECK(task.value(task.optimum()) == 0.0);
  CHECK(task.gradient_norm_sq(task.optimum()) == 0.0);
  CHECK_THROWS_AS(SyntheticTask(0, 10.0, 1.0, 1.0), ValidationError);
  CHECK_THROWS_AS(SyntheticTask(3, 1.0, 2.0, 1.0), ValidationError);
  CHECK_THROWS_AS(SyntheticTask(3, 10.0, 1.0, -1.0), ValidationError);
}

TEST_CASE("per-sample gradient noise has the configured variance") {
  const auto task = standard_task();
  const std::vector<double> w(10, 0.0);
  const auto truth = task.gradient(w);
  std::vector<double> g(10);
  double acc = 0.0;
  const int draws = 100000;
  for (int r = 0; r < draws; ++r) {
    rng::Stream s(4, rng::Domain::kVarianceProbe, 0, r);
    task.sample_gradient(w, s, g);
    for (std::size_t j = 0; j < 10; ++j) acc += (g[j] - truth[j]) * (g[j] - truth[j]);
  }
  CHECK(std::abs(acc / draws - 4.0) < 0.05 * 4.0);
}

TEST_CASE("noise-free update is an exact gradient step") {
  const auto task = standard_task(0.0);
  std::vector<double> w(10, 0.0);
  const auto grad = task.gradient(w);
  AgentState st{0, 5, 10, 0};
  CHECK(agent_update(w, st, task, 1, 0.05, 1) == 1);
  for (std::size_t j = 0; j < 10; ++j) CHECK(w[j] == -0.05 * grad[j]);
}

TEST_CASE("local steps, epoch budget and free riders") {
  const auto task = standard_task();
  std::vector<double> w(10, 0.0);
  AgentState st{0, 5, 10, 0};
  CHECK(agent_update(w, st, task, 6, 0.05, 1) == 6);
  CHECK(st.steps_done == 6);
  CHECK(agent_update(w, st, task, 6, 0.05, 1) == 4);
  CHECK(agent_update(w, st, task, 6, 0.05, 1) == 0);

  std::vector<double> v(10, 0.0);
  AgentState rider{1, 0, 10, 0};
  CHECK(agent_update(v, rider, task, 3, 0.05, 1) == 0);
  CHECK(v == std::vector<double>(10, 0.0));
  CHECK_THROWS_AS(agent_update(v, st, task, 0, 0.05, 1), DomainError);

  CHECK(to_batch_size(0.0) == 0);
  CHECK(to_batch_size(0.2) == 1);
  CHECK(to_batch_size(3125.4) == 3125);
  CHECK_THROWS_AS(to_batch_size(-1.0), DomainError);
}

TEST_CASE("pausing and resuming does not change the trajectory") {
  const auto task = standard_task();
  std::vector<double> straight(10, 0.0), paused(10, 0.0);
  AgentState a{2, 7, 12, 0}, b{2, 7, 12, 0};
  agent_update(straight, a, task, 12, 0.05, 9);
  for (std::size_t chunk : {5u, 1u, 4u, 2u}) agent_update(paused, b, task, chunk, 0.05, 9);
  CHECK(paused == straight);
}

TEST_CASE("a single agent reduces to plain SGD") {
  const auto task = standard_task();
  const std::vector<double> m = {8.0};
  const auto run = run_pfl_training(m, task, config(20, 3, 11));
  std::vector<double> w(10, 0.0);
  AgentState st{0, 8, 60, 0};
  for (int t = 0; t < 20; ++t) agent_update(w, st, task, 3, 0.05, 11);
  CHECK(run.final_params == w);
  CHECK(run.weights == std::vector<double>{1.0});
}

TEST_CASE("aggregation weights and free riders") {
  const auto task = standard_task();
  const std::vector<double> m = {100.0, 0.0, 300.0};
  const auto run = run_pfl_training(m, task, config(5, 2, 3));
  CHECK(run.effective_batch == 400);
  CHECK(run.weights[0] == 0.25);
  CHECK(run.weights[1] == 0.0);
  CHECK(run.weights[2] == 0.75);
  CHECK(run.free_riders == std::vector<bool>{false, true, false});
  CHECK(run.grad_norm_history.size() == 5);
  CHECK(run.initial_gap == Approx(0.5 * 55.0).epsilon(1e-12));

  const std::vector<double> none = {0.0, 0.0};
  CHECK_THROWS_AS(run_pfl_training(none, task, config(5, 1, 3)), NoContributorError);
}

TEST_CASE("noise-free identical agents aggregate to the common iterate") {
  const auto task = standard_task(0.0);
  const std::vector<double> m = {10.0, 10.0, 10.0, 10.0};
  const auto run = run_pfl_training(m, task, config(10, 2, 5));
  std::vector<double> w(10, 0.0);
  AgentState st{0, 10, 20, 0};
  agent_update(w, st, task, 20, 0.05, 5);
  for (std::size_t j = 0; j < 10; ++j) CHECK(run.final_params[j] == Approx(w[j]).epsilon(1e-12));
}

TEST_CASE("training does not depend on the worker count") {
  const auto task = standard_task();
  const std::vector<double> m(16, 3125.0);
  auto c = config(30, 6, 2);
  const auto a = run_pfl_training(m, task, c);
  c.workers = 8;
  const auto b = run_pfl_training(m, task, c);
  CHECK(a.final_params == b.final_params);
  CHECK(a.grad_norm_history == b.grad_norm_history);
}

TEST_CASE("more data lowers the stationary gradient norm") {
  const auto task = standard_task();
  double small = 0.0, large = 0.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    small += tail_mean(run_pfl_training(std::vector<double>{1.0, 1.0}, task, config(400, 1, seed))
                           .grad_norm_history, 200);
    large += tail_mean(run_pfl_training(std::vector<double>{2.0, 2.0}, task, config(400, 1, seed))
                           .grad_norm_history, 200);
  }
  CHECK(large < small);
}

TEST_CASE("convergence bound examples") {
  const auto task = standard_task();
  TrainingRun run;
  run.rounds = 100;
  run.step_size = 0.05;
  run.effective_batch = 50000;
  CHECK(convergence_bound(run, task, 0.0) == Approx(2e-5).epsilon(1e-12));
  CHECK(convergence_bound(run, task, 1.0) == Approx(2.0 / 5.0 + 2e-5).epsilon(1e-12));
  CHECK(convergence_bound(run, standard_task(0.0), 1.0) == Approx(0.4).epsilon(1e-12));
  run.step_size = 0.2;
  CHECK_THROWS_AS(convergence_bound(run, task, 1.0), DomainError);
}

TEST_CASE("property: the convergence bound holds across seeds") {
  const auto task = standard_task();
  const std::vector<double> m(16, 3125.0);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto run = run_pfl_training(m, task, config(100, 1, seed));
    REQUIRE(run.mean_grad_norm_sq() <= convergence_bound(run, task, run.initial_gap));
  }
}

TEST_CASE("mean gradient variance scales as one over the batch") {
  const auto task = standard_task();
  const std::vector<std::size_t> pair = {1, 4};
  const auto v = measure_variance_scaling(task, pair, 20000, 7);
  CHECK(std::abs(v[1].variance - v[0].variance / 4) < 0.1 * v[0].variance / 4);

  const std::vector<std::size_t> ladder = {1, 2, 4, 8, 16, 32};
  const auto points = measure_variance_scaling(task, ladder, 20000, 8, 4);
  CHECK(std::abs(loglog_slope(points) + 1.0) <= 0.05);
  CHECK(measure_variance_scaling(task, ladder, 20000, 8, 1)[3].variance == points[3].variance);

  const auto quiet = measure_variance_scaling(standard_task(0.0), pair, 1000, 1);
  CHECK(quiet[0].variance == 0.0);
  CHECK_THROWS_AS(loglog_slope(quiet), DomainError);
  CHECK_THROWS_AS(measure_variance_scaling(task, pair, 10, 1), DomainError);
}
