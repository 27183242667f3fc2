#include <doctest.h>

#include <cmath>
#include <random>

#include "fixtures.hpp"
#include "zipem/ancova_imputer.hpp"
#include "zipem/weighted_em.hpp"

using namespace zipem;

namespace {

BartlettEstimates estimates_for(double pi, double lambda) {
  BartlettEstimates e;
  e.alpha = Eigen::VectorXd::Constant(1, std::log(lambda));
  e.tau = Eigen::VectorXd::Constant(1, std::log(pi / (1 - pi)));
  return e;
}

}  // namespace

TEST_CASE("decision rule examples") {
  CHECK(impute_cells(estimates_for(0.98, 1e-6), 0.5).front().imputed == 0);
  CHECK(impute_cells(estimates_for(1e-6, 3.21), 0.5).front().imputed == 3);
  // pi takes precedence over a large lambda
  CHECK(impute_cells(estimates_for(0.98, 6.71), 0.5).front().imputed == 0);
  CHECK(impute_cells(estimates_for(0.2, 6.71), 0.5).front().imputed == 6);
  // lambda below one floors to zero whatever pi is
  CHECK(impute_cells(estimates_for(0.01, 0.99), 0.5).front().imputed == 0);
}

TEST_CASE("decision boundary at p0") {
  BartlettEstimates e;
  e.alpha = Eigen::VectorXd::Constant(3, std::log(4.5));
  e.tau = Eigen::Vector3d(-1e-9, 0.0, 1e-9);
  const auto d = impute_cells(e, 0.5);
  CHECK(d[0].imputed == 4);
  CHECK(d[1].pi_hat == 0.5);
  CHECK(d[1].imputed == 4);  // tie goes to the count branch
  CHECK(d[2].imputed == 0);
  CHECK_THROWS_AS(impute_cells(e, 0.0), ArgumentError);
  CHECK_THROWS_AS(impute_cells(e, 1.0), ArgumentError);
}

TEST_CASE("decisions carry labels and stay finite integers") {
  BartlettEstimates e;
  e.alpha = Eigen::Vector2d(50.0, 0.3);
  e.tau = Eigen::Vector2d(-3.0, -3.0);
  const std::vector<Index> units{7, 9};
  const auto d = impute_cells(e, 0.4, units, 3);
  CHECK(d[0].unit == 7);
  CHECK(d[1].unit == 9);
  CHECK(d[1].time == 3);
  CHECK(d[0].p0 == 0.4);
  CHECK(d[0].imputed >= 0);
  CHECK(d[1].imputed == 1);
}

TEST_CASE("closed-form estimates") {
  Eigen::MatrixXd X(2, 2), Z(2, 1);
  X << 1, 2, 1, -1;
  Z << 1, 1;
  const Params p{Eigen::Vector2d(0.3, 0.1), Eigen::VectorXd::Constant(1, 0.0)};
  const BartlettEstimates e = bartlett_estimates(X, Z, p);
  CHECK(e.alpha(0) == doctest::Approx(0.5));
  CHECK(e.alpha(1) == doctest::Approx(0.2));
  CHECK(e.pi_hat()(0) == doctest::Approx(0.5));
  const Params doubled{2 * p.beta, p.gamma};
  CHECK((bartlett_estimates(X, Z, doubled).alpha - 2 * e.alpha).cwiseAbs().maxCoeff() == 0.0);
  const Params zero{Eigen::Vector2d::Zero(), p.gamma};
  CHECK((bartlett_estimates(X, Z, zero).lambda_hat().array() == 1.0).all());
  CHECK_THROWS_AS(bartlett_estimates(X, Eigen::MatrixXd::Ones(2, 2), p), ArgumentError);
}

TEST_CASE("refit on an originally complete slice equals a direct fit") {
  std::mt19937_64 rng(21);
  const Params truth{Eigen::Vector3d(0.9, 0.2, -0.3), Eigen::Vector3d(-0.3, 0.4, 0.0)};
  const Slice s = fixtures::random_slice(rng, 80, 2, truth);
  const Params init = initial_params(s);
  const FitResult direct = fit_scoring(s, init);
  const FitResult refit = refit_complete(s, init);
  CHECK((direct.params.packed().array() == refit.params.packed().array()).all());
  Slice incomplete = s;
  incomplete.observed(0) = false;
  CHECK_THROWS(refit_complete(incomplete, init));
}

TEST_CASE("Step 2 on a complete slice changes nothing") {
  std::mt19937_64 rng(22);
  const Params truth{Eigen::Vector3d(0.9, 0.2, -0.3), Eigen::Vector3d(-0.3, 0.4, 0.0)};
  const Slice s = fixtures::random_slice(rng, 80, 2, truth);
  const FitResult f = fit_scoring(s, initial_params(s));
  const Step2Result r = impute_and_refit(s, f.params, 0.5);
  CHECK(r.decisions.empty());
  CHECK(r.completed.y == s.y);
  CHECK(r.stable);
  CHECK((r.refit.params.packed() - f.params.packed()).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("refit does not lower the likelihood of the completed data") {
  std::mt19937_64 rng(23);
  for (int rep = 0; rep < 10; ++rep) {
    const Params truth{Eigen::Vector2d(0.8, 0.5), Eigen::Vector2d(-0.2, 0.6)};
    Slice s = fixtures::random_slice(rng, 40, 1, truth);
    s.observed(rep) = false;
    s.observed(rep + 10) = false;
    const WeightedFit step1 = fit_weighted_em(s, initial_params(complete_cases(s)));
    const Step2Result r = impute_and_refit(s, step1.fit.params, 0.5, {}, 1);
    REQUIRE(r.decisions.size() == 2);
    CHECK(r.completed.complete());
    CHECK(r.completed.y(rep) == r.decisions[0].imputed);
    const double at_step1 = loglik(r.completed, step1.fit.params);
    CHECK(r.refit.loglik >= at_step1 - 1e-9);
  }
}

TEST_CASE("cycles stop once imputations stabilize") {
  std::mt19937_64 rng(24);
  const Params truth{Eigen::Vector2d(1.2, 0.5), Eigen::Vector2d(-0.5, 0.6)};
  Slice s = fixtures::random_slice(rng, 60, 1, truth);
  for (Index i = 0; i < 12; ++i) s.observed(5 * i) = false;
  const WeightedFit step1 = fit_weighted_em(s, initial_params(complete_cases(s)));
  const Step2Result r = impute_and_refit(s, step1.fit.params, 0.5, {}, 5);
  CHECK(r.cycles >= 1);
  CHECK(r.cycles <= 5);
  if (r.stable) {
    const auto again = impute_cells(bartlett_estimates(s.X, s.Z, r.refit.params), 0.5);
    Index k = 0;
    for (Index i = 0; i < s.rows(); ++i)
      if (!s.observed(i)) {
        CHECK(again[std::size_t(i)].imputed == r.completed.y(i));
        ++k;
      }
    CHECK(k == 12);
  }
}
