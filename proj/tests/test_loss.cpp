#include <doctest.h>

#include <cmath>

#include "fact/error.hpp"
#include "fact/loss.hpp"
#include "fact/rng.hpp"
#include "oracles.hpp"

using namespace fact;
using doctest::Approx;

namespace {

constexpr double kCifarCost = 1.024e-07;
constexpr double kCifarOthers = 46875.0;

struct Draw {
  double c, k, m_star, sum, alpha;
};

Draw draw(rng::Stream& s) {
  Draw d{};
  d.c = std::pow(10.0, s.uniform(-8.0, 1.0));
  d.k = s.uniform(0.1, 10.0);
  d.m_star = std::sqrt(d.k / (2 * d.c));
  d.sum = d.m_star * std::pow(10.0, s.uniform(0.0, 5.0));
  d.alpha = s.uniform(0.0, 1.9);
  return d;
}

}  // namespace

TEST_CASE("local loss examples") {
  CHECK(local_loss(1, 1, 2) == 2.0);
  CHECK(local_loss(3125, kCifarCost, 2.0) == Approx(6.4e-4).epsilon(1e-12));
  CHECK(local_loss(2, 0.5, 2) == 1.5);
  CHECK_THROWS_AS(local_loss(0, 1, 2), DomainError);
}

TEST_CASE("federated loss examples") {
  CHECK(federated_loss(0, 1, 1, 2) == 1.0);
  CHECK(federated_loss(1, 15, 1, 2) == 1.0625);
  CHECK(federated_loss(3125, kCifarOthers, kCifarCost, 2) == Approx(3.4e-4).epsilon(1e-12));
  CHECK_THROWS_AS(federated_loss(0, 0, 1, 2), DomainError);
}

TEST_CASE("penalty scalar examples") {
  // 16/30 (255/256)^2, exact in binary.
  CHECK(lambda_for(1, 15, 2, 1) == Approx(0.5291748046875).epsilon(1e-14));
  CHECK(lambda_for(kCifarCost, kCifarOthers, 2, 1) == Approx(1.734e-11).epsilon(1e-12));
  CHECK(lambda_for(kCifarCost, kCifarOthers, 2, 1) ==
        Approx(double(oracle::lambda(kCifarCost, kCifarOthers, 2, 1))).epsilon(1e-13));
  CHECK_THROWS_AS(lambda_for(1, 0, 2, 1), SingularityError);

  // Asymptotes: about 4 c^2 sum / ((2 - alpha) k) as c -> 0 and
  // sqrt(k / (2c)) c^2 / ((2 - alpha) k) as c -> infinity.
  CHECK(lambda_for(1e-10, 15, 2, 1) == Approx(4e-20 * 15 / 2).epsilon(1e-3));
  CHECK(lambda_for(1e8, 15, 2, 1) == Approx(1e12 / 2).epsilon(1e-3));
}

TEST_CASE("property: penalty scalar is positive and increasing in cost") {
  for (double sum : {1e-3, 1.0, 15.0, 1e5}) {
    double prev = 0.0;
    for (int j = -120; j <= 80; ++j) {
      const double lam = lambda_for(std::pow(10.0, j / 10.0), sum, 2.0, 1.0);
      REQUIRE(std::isfinite(lam));
      REQUIRE(lam > prev);
      prev = lam;
    }
  }
}

TEST_CASE("free-rider penalty examples") {
  const double lambda = lambda_for(1, 15, 2, 1);
  CHECK(free_rider_penalty(1, 1, lambda, 15, 2) == Approx(0.46875).epsilon(1e-13));
  CHECK(free_rider_penalty(0, 1, lambda, 15, 2) == Approx(1.9940185546875).epsilon(1e-13));
  CHECK(free_rider_penalty(0, 1, lambda, 15, 2) > free_rider_penalty(1, 1, lambda, 15, 2));
  const double vertex = 1.0 + (1.0 / (2 * lambda) - 2.0 / (4 * lambda * 256));
  CHECK(free_rider_penalty(vertex, 1, lambda, 15, 2) < 1e-28);
  CHECK_THROWS_AS(free_rider_penalty(1, 1, 0.0, 15, 2), DegeneratePenaltyError);

  const double cifar_lambda = lambda_for(kCifarCost, kCifarOthers, 2, 1);
  CHECK(free_rider_penalty(3125, kCifarCost, cifar_lambda, kCifarOthers, 2) ==
        Approx(1.5e-4).epsilon(1e-10));
  CHECK(free_rider_penalty(0, kCifarCost, cifar_lambda, kCifarOthers, 2) ==
        Approx(6.380859375e-4).epsilon(1e-10));
}

TEST_CASE("penalized loss examples") {
  const double lambda = lambda_for(1, 15, 2, 1);
  const auto b = pfl_loss(1, 1, 1, lambda, 15, 2);
  CHECK(b.total() == Approx(1.53125).epsilon(1e-13));
  CHECK(b.convergence_term() == 0.0625);
  CHECK(b.data_cost() == 1.0);
  CHECK(b.competition_transfer() == 0.0);
  CHECK(b.total() == b.convergence_term() + b.data_cost() + b.free_rider_penalty() +
                         b.competition_transfer());
  CHECK_THROWS_AS(pfl_loss(1, 1, 1, 0.0, 15, 2), DegeneratePenaltyError);

  // Stationary at the truthful optimum.
  const double m = 1.0, h = 1e-6;
  const double slope =
      (pfl_loss(m + h, 1, 1, lambda, 15, 2).total() - pfl_loss(m - h, 1, 1, lambda, 15, 2).total()) /
      (2 * h);
  CHECK(std::abs(slope) < 1e-8);
}

TEST_CASE("closed-form gap examples") {
  CHECK(ir_gap_analytic(1, 15, 2, 1) == 0.46875);
  CHECK(ir_gap_analytic(1, 15, 2, 0) == 0.0);
  CHECK(ir_gap_analytic(3125, kCifarOthers, 2, 1) == Approx(1.5e-4).epsilon(1e-13));
}

TEST_CASE("contract fee examples") {
  const double lambda = lambda_for(1, 15, 2, 1);
  const auto fee = contract_fee(1, 1, 15, 2, lambda);
  CHECK(fee.effective == 0.9375);
  CHECK(fee.full == Approx(0.46875).epsilon(1e-13));
  // At the truthful optimum the fee is the gap, and also local minus penalized loss.
  CHECK(fee.full == Approx(ir_gap_analytic(1, 15, 2, 1)).epsilon(1e-13));
  CHECK(fee.full == Approx(local_loss(1, 1, 2) - pfl_loss(1, 1, 1, lambda, 15, 2).total()).epsilon(1e-13));
  // Effective fee tends to k / (2m) as the others' total grows.
  CHECK(contract_fee(2, 1, 1e12, 2, lambda).effective == Approx(0.5).epsilon(1e-11));
  CHECK_THROWS_AS(contract_fee(0, 1, 15, 2, lambda), DomainError);
}

TEST_CASE("mechanism loss branches") {
  const double lambda = lambda_for(1, 15, 2, 1);
  const auto lost = fact_loss(1, 1, 1, lambda, 15, 2, 16, CompetitionBranch::kLost, 7.0);
  CHECK(lost.total() == Approx(local_loss(1, 1, 2)).epsilon(1e-12));
  CHECK(lost.competition_transfer() == Approx(0.46875).epsilon(1e-13));

  // With every fee equal to d, winning turns the transfer into d - 3 (n - 1) d / n.
  const double d = contract_fee(1, 1, 15, 2, lambda).full;
  const auto won = fact_loss(1, 1, 1, lambda, 15, 2, 16, CompetitionBranch::kWon, 15 * d);
  CHECK(won.competition_transfer() == Approx(d - 45.0 * d / 16.0).epsilon(1e-13));
  CHECK(won.competition_transfer() < d);
  CHECK(won.total() < lost.total());

  const auto empty_pool = fact_loss(1, 1, 1, lambda, 15, 2, 16, CompetitionBranch::kWon, 0.0);
  CHECK(empty_pool.competition_transfer() == lost.competition_transfer());
}

TEST_CASE("expected loss examples") {
  const double local = local_loss(2, 0.5, 2);
  CHECK(expected_fact_loss(2, 0.5, 2, 16, 0.0, 3.0) == local);
  CHECK(expected_fact_loss(2, 0.5, 2, 16, 0.5, 3.0) == Approx(local - 3.0 / 32.0 * 3.0).epsilon(1e-15));
  CHECK_THROWS(expected_fact_loss(2, 0.5, 2, 16, 1.5, 3.0));
}

TEST_CASE("property: closed forms agree with long-double oracles") {
  rng::Stream s(101, rng::Domain::kParameterDraws, 0, 0);
  for (int t = 0; t < 1000; ++t) {
    const Draw d = draw(s);
    const double lambda = lambda_for(d.c, d.sum, d.k, d.alpha);
    REQUIRE(oracle::rel(lambda, oracle::lambda(d.c, d.sum, d.k, d.alpha)) < 1e-12);
    const double m = d.m_star * s.uniform(0.0, 3.0);
    const double reported = d.c * s.uniform(0.5, 1.5);
    const double lr = lambda_for(reported, d.sum, d.k, d.alpha);
    const long double p = oracle::penalty(m, reported, lr, d.sum, d.k);
    const double got = free_rider_penalty(m, reported, lr, d.sum, d.k);
    // The penalty is a square, so only absolute agreement on the loss scale is meaningful.
    REQUIRE(std::fabs(got - p) <= 1e-12 * (p + oracle::local(d.m_star, d.c, d.k)));
  }
}

TEST_CASE("property: penalty is nonnegative") {
  rng::Stream s(102, rng::Domain::kParameterDraws, 0, 0);
  for (int t = 0; t < 1000; ++t) {
    const Draw d = draw(s);
    const double lambda = d.c * std::pow(10.0, s.uniform(-4.0, 4.0));
    REQUIRE(free_rider_penalty(d.m_star * s.uniform(0, 5), d.c * s.uniform(0.1, 10), lambda,
                               d.sum, d.k) >= 0.0);
  }
}

TEST_CASE("property: gap identity, stationarity and lost-branch telescoping") {
  rng::Stream s(103, rng::Domain::kParameterDraws, 0, 0);
  for (int t = 0; t < 1000; ++t) {
    const Draw d = draw(s);
    const double lambda = lambda_for(d.c, d.sum, d.k, d.alpha);
    const double local = local_loss(d.m_star, d.c, d.k);
    const double pfl = pfl_loss(d.m_star, d.c, d.c, lambda, d.sum, d.k).total();
    const double gap = ir_gap_analytic(d.m_star, d.sum, d.k, d.alpha);
    REQUIRE(std::abs((local - pfl) - gap) <= 1e-10 * gap);
    REQUIRE(oracle::rel(gap, oracle::gap(d.m_star, d.sum, d.k, d.alpha)) < 1e-13);

    const double h = std::max(1e-6 * d.m_star, 1e-9);
    const double slope = (pfl_loss(d.m_star + h, d.c, d.c, lambda, d.sum, d.k).total() -
                          pfl_loss(d.m_star - h, d.c, d.c, lambda, d.sum, d.k).total()) /
                         (2 * h);
    REQUIRE(std::abs(slope) * d.m_star <= 1e-6 * pfl);

    const auto lost = fact_loss(d.m_star, d.c, d.c, lambda, d.sum, d.k, 16,
                                CompetitionBranch::kLost, s.uniform(0, 1));
    REQUIRE(std::abs(lost.total() - local) <= 1e-12 * local);
  }
}

TEST_CASE("property: simplified and mixture expectations agree") {
  rng::Stream s(104, rng::Domain::kParameterDraws, 0, 0);
  for (int t = 0; t < 1000; ++t) {
    const Draw d = draw(s);
    const double m = d.m_star * s.uniform(0.05, 3.0);
    const double reported = d.c * s.uniform(0.5, 1.5);
    const double lambda = lambda_for(reported, d.sum, d.k, d.alpha);
    const std::size_t n = 2 + s.below(60);
    const double p = s.uniform(0.0, 1.0);
    const double local = local_loss(m, d.c, d.k);
    const double pool = s.uniform(0.0, 1.0) * local * double(n) / 3.0;
    const double simple = expected_fact_loss(m, d.c, d.k, n, p, pool);
    const double mixture =
        expected_fact_loss_mixture(m, d.c, reported, lambda, d.sum, d.k, n, p, pool);
    REQUIRE(std::abs(simple - mixture) <= 1e-12 * std::max(std::abs(simple), local));
  }
}
