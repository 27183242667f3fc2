#include <doctest.h>

#include <cmath>
#include <random>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "zipem/fit.hpp"
#include "zipem/sim_engine.hpp"

using namespace zipem;

namespace {

using oracles::LD;
using oracles::fd_gradient;
using oracles::fd_hessian;

Params random_params(std::mt19937_64& rng, Index p1, Index p2) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Params p{Eigen::VectorXd(p2), Eigen::VectorXd(p1)};
  for (Index j = 0; j < p2; ++j) p.beta(j) = u(rng);
  for (Index j = 0; j < p1; ++j) p.gamma(j) = u(rng);
  p.beta(0) += 0.5;
  return p;
}

}  // namespace

TEST_CASE("logistic and softplus are stable at extreme arguments") {
  CHECK(logistic(0.0) == doctest::Approx(0.5));
  CHECK(logistic(800.0) == 1.0);
  CHECK(logistic(-800.0) >= 0.0);
  CHECK(softplus(800.0) == doctest::Approx(800.0));
  CHECK(softplus(-800.0) >= 0.0);
  CHECK(log_add_exp(-std::numeric_limits<double>::infinity(), 1.0) == 1.0);
  CHECK(log_add_exp(1000.0, 1000.0) == doctest::Approx(1000.0 + std::log(2.0)));
}

TEST_CASE("log factorial switches to Stirling without a visible seam") {
  CHECK(log_factorial<double>(0) == 0.0);
  CHECK(log_factorial<double>(5) == doctest::Approx(std::log(120.0)));
  const double below = log_factorial<double>(1023);
  const double above = log_factorial<double>(1024);
  CHECK(above - below == doctest::Approx(std::log(1024.0)).epsilon(1e-12));
  CHECK(log_factorial<double>(5000) == doctest::Approx(std::lgamma(5001.0)).epsilon(1e-14));
  CHECK_THROWS_AS(log_factorial<double>(-1), ArgumentError);
}

TEST_CASE("link functions") {
  Eigen::VectorXd z(2), g = Eigen::VectorXd::Zero(2), x(2), b = Eigen::VectorXd::Zero(2);
  z << 1, 3;
  x << 1, 2;
  CHECK(link_pi(z, g) == doctest::Approx(0.5));
  CHECK(link_lambda(x, b) == doctest::Approx(1.0));
  Eigen::VectorXd big(2);
  big << 100, 100;
  CHECK(std::isfinite(link_lambda(x, big)));
  CHECK(link_lambda(x, big) == doctest::Approx(std::exp(kPredictorBound)));
  CHECK_THROWS_AS(link_pi(z, Eigen::VectorXd::Zero(3).eval()), ArgumentError);
}

TEST_CASE("ZIP pmf is a distribution") {
  for (double pi : {0.0, 0.3, 0.9})
    for (double lambda : {0.1, 2.0, 25.0}) {
      const CellParams<double> c{pi, lambda};
      double total = 0;
      for (int k = 0; k < 200; ++k) total += zip_pmf(k, c);
      CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
      CHECK(zip_pmf(0, c) == doctest::Approx(pi + (1 - pi) * std::exp(-lambda)));
      CHECK(zip_cdf(199, c) == doctest::Approx(1.0));
    }
  CHECK(zip_pmf(3, CellParams<double>{1.0, 2.0}) == 0.0);
  CHECK(zip_pmf(0, CellParams<double>{1.0, 2.0}) == 1.0);
  // huge counts stay finite in log space
  CHECK(std::isfinite(log_zip_pmf(100000, CellParams<double>{0.2, 1e5})));
  CHECK_THROWS_AS(zip_pmf(-1, CellParams<double>{0.2, 1.0}), ArgumentError);
}

TEST_CASE("score matches a finite-difference gradient at random points") {
  std::mt19937_64 rng(11);
  for (int rep = 0; rep < 50; ++rep) {
    const Params truth = random_params(rng, 3, 3);
    const Slice s = fixtures::random_slice(rng, 40, 2, truth);
    const Slice s2 = make_slice(s.X, s.X.leftCols(2), s.y);
    const Params at = random_params(rng, 2, 3);
    const Eigen::VectorXd u = score(s2, at);
    const auto fd = fd_gradient(s2.cast<LD>(), at.cast<LD>(), 1e-6L);
    for (Index j = 0; j < u.size(); ++j)
      CHECK(std::abs(u(j) - double(fd(j))) <= 1e-5 * std::max(1.0, std::abs(double(fd(j)))));
  }
}

TEST_CASE("information blocks match a finite-difference Hessian") {
  std::mt19937_64 rng(12);
  SUBCASE("all-positive responses") {
    for (int rep = 0; rep < 20; ++rep) {
      Params truth{Eigen::Vector3d(1.5, 0.3, -0.2), Eigen::Vector3d(-3.0, 0.0, 0.0)};
      Slice s = fixtures::random_slice(rng, 30, 2, truth);
      for (Index i = 0; i < s.rows(); ++i) s.y(i) = std::max(1, s.y(i));
      const Params at = random_params(rng, 3, 3);
      const Eigen::MatrixXd info = fisher_info(s, at);
      const auto H = fd_hessian(s.cast<LD>(), at.cast<LD>(), 1e-4L);
      for (Index a = 0; a < info.rows(); ++a)
        for (Index b = 0; b < info.cols(); ++b)
          CHECK(std::abs(info(a, b) + double(H(a, b))) <= 1e-4 * std::max(1.0, std::abs(double(H(a, b)))));
    }
  }
  SUBCASE("with zeros, including the cross block") {
    for (int rep = 0; rep < 20; ++rep) {
      Params truth{Eigen::Vector3d(0.8, 0.3, -0.2), Eigen::Vector3d(0.0, 0.5, 0.0)};
      const Slice s = fixtures::random_slice(rng, 40, 2, truth);
      const Params at = random_params(rng, 3, 3);
      const Eigen::MatrixXd info = fisher_info(s, at);
      const auto H = fd_hessian(s.cast<LD>(), at.cast<LD>(), 1e-4L);
      CHECK((info - info.transpose()).cwiseAbs().maxCoeff() < 1e-12 * std::max(1.0, info.cwiseAbs().maxCoeff()));
      for (Index a = 0; a < info.rows(); ++a)
        for (Index b = 0; b < info.cols(); ++b)
          CHECK(std::abs(info(a, b) + double(H(a, b))) <= 1e-4 * std::max(1.0, std::abs(double(H(a, b)))));
    }
  }
}

TEST_CASE("structural-zero posterior") {
  CHECK(structural_zero_posterior(3, 0.0, 0.0) == 0.0);
  // pi = 0.5, lambda = 1: 0.5 / (0.5 + 0.5 e^-1)
  CHECK(structural_zero_posterior(0, 0.0, 0.0) == doctest::Approx(1.0 / (1.0 + std::exp(-1.0))));
}

TEST_CASE("likelihood functions reject incomplete slices and bad shapes") {
  Slice s = make_slice(Eigen::MatrixXd::Ones(3, 1), Eigen::MatrixXd::Ones(3, 1), Eigen::Vector3i(0, 1, 2));
  const Params p{Eigen::VectorXd::Zero(1), Eigen::VectorXd::Zero(1)};
  s.observed(1) = false;
  CHECK_THROWS_AS(loglik(s, p), StateError);
  CHECK_THROWS_AS(score(s, p), StateError);
  CHECK(observed_loglik(s, p) == doctest::Approx(loglik(complete_cases(s), p)));
  const Params wrong{Eigen::VectorXd::Zero(2), Eigen::VectorXd::Zero(1)};
  CHECK_THROWS_AS(observed_loglik(s, wrong), ArgumentError);
}

TEST_CASE("scoring recovers simulated coefficients") {
  std::mt19937_64 rng(5);
  const Params truth{Eigen::Vector3d(1.0, 0.5, -0.4), Eigen::Vector3d(-0.5, 0.8, 0.0)};
  const Slice s = fixtures::random_slice(rng, 4000, 2, truth);
  const FitResult f = fit_scoring(s, initial_params(s));
  CHECK(f.converged);
  CHECK_FALSE(f.separation_flag);
  CHECK((f.params.beta - truth.beta).cwiseAbs().maxCoeff() < 0.1);
  CHECK((f.params.gamma - truth.gamma).cwiseAbs().maxCoeff() < 0.2);
  // at the optimum the score vanishes
  CHECK(score(s, f.params).cwiseAbs().maxCoeff() < 1e-3);
  for (std::size_t k = 1; k < f.loglik_trace.size(); ++k) CHECK(f.loglik_trace[k] >= f.loglik_trace[k - 1]);
}

TEST_CASE("corn full-data fit matches the reference coefficients") {
  const PanelData corn = corn_panel();
  const FitResult f = fit_pooled(corn);
  const Eigen::Vector4d expected(-0.525, 0.499, 2.326, -0.050);
  CHECK((f.params.beta - expected).cwiseAbs().maxCoeff() < 0.005);
  const Eigen::Vector4d se(0.563, 0.373, 0.328, 0.059);
  CHECK((f.std_errors.tail(4) - se).cwiseAbs().maxCoeff() < 0.005);
  CHECK(f.separation_flag);
  CHECK(f.params.gamma(3) < 0);
}

TEST_CASE("rank-deficient designs name the offending columns") {
  Eigen::MatrixXd X(4, 3);
  X << 1, 1, 2, 1, 2, 4, 1, 3, 6, 1, 4, 8;
  Slice s = make_slice(X, Eigen::MatrixXd::Ones(4, 1), Eigen::Vector4i(0, 1, 2, 3));
  s.x_names = {"(Intercept)", "a", "twice_a"};
  try {
    fit_scoring(s, initial_params(s));
    FAIL("expected DesignError");
  } catch (const DesignError& e) {
    REQUIRE(e.columns().size() == 1);
    const std::string col = e.columns().front();
    CHECK((col == "a" || col == "twice_a"));
  }
}

TEST_CASE("initial parameters use the intercept column") {
  Slice s = make_slice(Eigen::MatrixXd::Ones(4, 1), Eigen::MatrixXd::Ones(4, 1), Eigen::Vector4i(0, 0, 2, 4));
  const Params p = initial_params(s);
  CHECK(p.beta(0) == doctest::Approx(std::log(3.5)));
  CHECK(p.gamma(0) == doctest::Approx(0.0));
}

TEST_CASE("standard errors and p-values") {
  Eigen::Matrix2d info;
  info << 4, 0, 0, 0.25;
  const Eigen::VectorXd se = standard_errors(info);
  CHECK(se(0) == doctest::Approx(0.5));
  CHECK(se(1) == doctest::Approx(2.0));
  CHECK(std::isnan(standard_errors(Eigen::Matrix2d::Zero())(0)));
  CHECK(normal_p_value(0.0) == doctest::Approx(1.0));
  CHECK(normal_p_value(1.959964) == doctest::Approx(0.05).epsilon(1e-5));
}
