#include <doctest.h>

#include <cmath>
#include <random>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "zipem/weighted_em.hpp"

using namespace zipem;

using oracles::grid_argmax;
using oracles::intercept_slice;
using oracles::truncated_objective;
using oracles::weighted_fixed_point;

TEST_CASE("candidate support") {
  CHECK_THROWS_AS(candidate_support(std::vector<int>{}), StateError);
  CHECK(candidate_support(std::vector<int>{0, 0}).upper == 1);
  CHECK(candidate_support(std::vector<int>{4, 4}).upper == 10);
  CHECK(candidate_support(std::vector<int>{1, 2}).upper == 6);  // 1.5 + 3 sqrt(1.5) = 5.17
}

TEST_CASE("cell weights are normalized, nonnegative and monotone in lambda") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-4.0, 4.0);
  for (int rep = 0; rep < 200; ++rep) {
    const Params p{Eigen::VectorXd::Constant(1, u(rng)), Eigen::VectorXd::Constant(1, u(rng))};
    const DesignRow row{Eigen::VectorXd::Ones(1), Eigen::VectorXd::Ones(1)};
    const CellWeights cw = cell_weights(row, p, {1 + rep % 12});
    CHECK(cw.w.size() == 2 + rep % 12);
    CHECK(std::abs(cw.w.sum() - 1.0) <= 1e-12);
    CHECK(cw.w.minCoeff() >= 0.0);
  }
  const DesignRow row{Eigen::VectorXd::Ones(1), Eigen::VectorXd::Ones(1)};
  double previous = 2.0;
  // below the support bound; far above it renormalization pushes mass back to 0
  for (double beta = -2.0; beta <= 0.5; beta += 0.25) {
    const CellWeights cw = cell_weights(row, {Eigen::VectorXd::Constant(1, beta), Eigen::VectorXd::Zero(1)}, {5});
    CHECK(cw.w(0) < previous);
    previous = cw.w(0);
  }
}

TEST_CASE("observed cells carry a point mass") {
  const DesignRow row{Eigen::VectorXd::Ones(1), Eigen::VectorXd::Ones(1)};
  const Params p{Eigen::VectorXd::Zero(1), Eigen::VectorXd::Zero(1)};
  const CellWeights cw = cell_weights(row, p, {3}, 2);
  CHECK(cw.w.sum() == 1.0);
  CHECK(cw.w(2) == 1.0);
  CHECK((cw.w.array() == 1.0).count() == 1);
  const CellWeights wide = cell_weights(row, p, {3}, 7);
  CHECK(wide.w.size() == 8);
  CHECK(wide.w(7) == 1.0);
  CHECK_THROWS_AS(cell_weights(row, p, {3}, -1), ArgumentError);
}

TEST_CASE("with pi = 0 the weights are truncated Poisson masses") {
  const DesignRow row{Eigen::VectorXd::Ones(1), Eigen::VectorXd::Ones(1)};
  const double lambda = 1.7;
  const Params p{Eigen::VectorXd::Constant(1, std::log(lambda)), Eigen::VectorXd::Constant(1, -kPredictorBound)};
  const CellWeights cw = cell_weights(row, p, {4});
  double total = 0;
  Eigen::VectorXd mass(5);
  for (int k = 0; k <= 4; ++k) total += mass(k) = std::exp(-lambda) * std::pow(lambda, k) / std::tgamma(k + 1.0);
  for (int k = 0; k <= 4; ++k) CHECK(cw.w(k) == doctest::Approx(mass(k) / total).epsilon(1e-10));
}

TEST_CASE("E-step indicator") {
  const DesignRow row{Eigen::VectorXd::Ones(1), Eigen::VectorXd::Ones(1)};
  const Params zero{Eigen::VectorXd::Zero(1), Eigen::VectorXd::Zero(1)};
  CHECK(e_step_indicator(2, row, zero) == 0.0);
  CHECK(e_step_indicator(0, row, zero) == doctest::Approx(1.0 / (1.0 + std::exp(-1.0))));
  const Params certain{Eigen::VectorXd::Zero(1), Eigen::VectorXd::Constant(1, 30.0)};
  CHECK(e_step_indicator(0, row, certain) == doctest::Approx(1.0));
}

TEST_CASE("pseudo-row expansion") {
  const Slice s = intercept_slice({0, 5, 1, 2}, {true, false, true, false});
  const Params p{Eigen::VectorXd::Zero(1), Eigen::VectorXd::Zero(1)};
  const DesignRow row{Eigen::VectorXd::Ones(1), Eigen::VectorXd::Ones(1)};
  std::vector<CellWeights> w{cell_weights(row, p, {2}), cell_weights(row, p, {2})};
  const ExpandedRows rows = expand_rows(s, w);
  CHECK(rows.rows() == 2 + 3 + 3);
  CHECK(rows.weight.sum() == doctest::Approx(4.0));
  CHECK(rows.source == std::vector<Index>{0, 1, 1, 1, 2, 3, 3, 3});
  CHECK(rows.y(1) == 0);
  CHECK(rows.y(3) == 2);
  w.pop_back();
  CHECK_THROWS_AS(expand_rows(s, w), ArgumentError);
}

TEST_CASE("weighted updates: weight additivity and the all-structural-zero case") {
  ExpandedRows single;
  single.X = Eigen::MatrixXd::Ones(3, 1);
  single.Z = single.X;
  single.y = Eigen::Vector3i(0, 2, 4);
  single.weight = Eigen::Vector3d(1, 1, 1);
  ExpandedRows split = single;
  split.X = Eigen::MatrixXd::Ones(4, 1);
  split.Z = split.X;
  split.y = Eigen::Vector4i(0, 2, 4, 4);
  split.weight = Eigen::Vector4d(1, 1, 0.5, 0.5);
  const Eigen::VectorXd g = Eigen::VectorXd::Constant(1, 0.3), b = Eigen::VectorXd::Constant(1, 0.2);
  const Eigen::VectorXd d1 = Eigen::Vector3d(0.6, 0, 0), d2 = Eigen::Vector4d(0.6, 0, 0, 0);
  CHECK(weighted_update_gamma(single, g, d1)(0) == doctest::Approx(weighted_update_gamma(split, g, d2)(0)).epsilon(1e-14));
  CHECK(weighted_update_beta(single, b, d1)(0) == doctest::Approx(weighted_update_beta(split, b, d2)(0)).epsilon(1e-14));
  // (1 - D) = 0 leaves no Poisson information, the ridge retry then gives a zero step
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(3);
  CHECK_THROWS_AS(weighted_update_beta(single, b, ones, 0.0), NumericalError);
  CHECK(weighted_update_beta(single, b, ones)(0) == doctest::Approx(b(0)));
}

TEST_CASE("weighted updates iterated with frozen D maximize the weighted objectives") {
  // two units, one missing, K = 1
  const Slice s = intercept_slice({3, 0}, {true, false});
  const Params theta{Eigen::VectorXd::Constant(1, 0.4), Eigen::VectorXd::Constant(1, -0.2)};
  const DesignRow row{Eigen::VectorXd::Ones(1), Eigen::VectorXd::Ones(1)};
  const ExpandedRows rows = expand_rows(s, {cell_weights(row, theta, {1})});
  const Eigen::VectorXd d = e_step_indicators(rows, theta);
  Eigen::VectorXd g = theta.gamma, b = theta.beta;
  for (int i = 0; i < 200; ++i) g = weighted_update_gamma(rows, g, d), b = weighted_update_beta(rows, b, d);
  auto q_gamma = [&](double gamma) {
    double v = 0;
    for (Index r = 0; r < rows.rows(); ++r) v += rows.weight(r) * (d(r) * gamma - softplus(gamma));
    return v;
  };
  auto q_beta = [&](double beta) {
    double v = 0;
    for (Index r = 0; r < rows.rows(); ++r) v += rows.weight(r) * (1 - d(r)) * (rows.y(r) * beta - std::exp(beta));
    return v;
  };
  const auto [gg, unused_g] = grid_argmax([&](double a, double) { return q_gamma(a); }, 0.0, 0.0, 5.0);
  const auto [bb, unused_b] = grid_argmax([&](double a, double) { return q_beta(a); }, 0.0, 0.0, 5.0);
  CHECK(g(0) == doctest::Approx(gg).epsilon(1e-4));
  CHECK(b(0) == doctest::Approx(bb).epsilon(1e-4));
}

TEST_CASE("EM fixed point matches grid maximization of the truncated observed likelihood") {
  struct Instance {
    std::vector<int> y;
    std::vector<bool> observed;
    int K;
  };
  const std::vector<Instance> instances{
      {{0, 2, 0}, {true, true, false}, 1},
      {{0, 2, 0}, {true, true, false}, 2},
      {{0, 3, 0}, {true, true, false}, 2},
      {{0, 4, 1}, {true, true, false}, 2},
  };
  for (const Instance& inst : instances) {
    const Slice s = intercept_slice(inst.y, inst.observed);
    const Params start{Eigen::VectorXd::Constant(1, 0.5), Eigen::VectorXd::Constant(1, -0.5)};
    const Params fp = weighted_fixed_point(s, start, {inst.K});
    auto objective = [&](double gamma, double beta) { return truncated_objective(s, inst.K, gamma, beta); };
    const auto [g, b] = grid_argmax(objective, 0.0, 0.0, 6.0);
    CAPTURE(inst.K);
    CHECK(std::abs(fp.gamma(0) - g) < 1e-3);
    CHECK(std::abs(fp.beta(0) - b) < 1e-3);
  }
}

TEST_CASE("fit_weighted_em uses the data-driven support and reaches the same fixed point") {
  const Slice s = intercept_slice({0, 2, 0}, {true, true, false});
  FitControl ctrl;
  ctrl.tol = 1e-12;
  ctrl.max_iter = 100000;
  const WeightedFit wf = fit_weighted_em(s, initial_params(complete_cases(s)), ctrl);
  REQUIRE(wf.weights.size() == 1);
  const int K = wf.weights.front().support.upper;
  CHECK(K == candidate_support(std::vector<int>{0, 2}).upper);
  auto objective = [&](double gamma, double beta) { return truncated_objective(s, K, gamma, beta); };
  const auto [g, b] = grid_argmax(objective, 0.0, 0.0, 6.0);
  CHECK(std::abs(wf.fit.params.gamma(0) - g) < 1e-3);
  CHECK(std::abs(wf.fit.params.beta(0) - b) < 1e-3);
  CHECK(std::abs(wf.weights.front().w.sum() - 1.0) <= 1e-12);
  for (std::size_t k = 1; k < wf.fit.loglik_trace.size(); ++k)
    CHECK(wf.fit.loglik_trace[k] >= wf.fit.loglik_trace[k - 1]);
}

TEST_CASE("a complete slice reduces to plain scoring bitwise") {
  std::mt19937_64 rng(8);
  for (int rep = 0; rep < 10; ++rep) {
    const Params truth{Eigen::Vector3d(0.7, 0.3, -0.3), Eigen::Vector3d(-0.4, 0.5, 0.2)};
    const Slice s = fixtures::random_slice(rng, 60, 2, truth);
    const Params init = initial_params(s);
    const FitResult a = fit_scoring(s, init);
    const WeightedFit b = fit_weighted_em(s, init);
    CHECK(b.weights.empty());
    CHECK(a.iterations == b.fit.iterations);
    CHECK((a.params.packed().array() == b.fit.params.packed().array()).all());
  }
}

TEST_CASE("weights are labelled with units and time") {
  const Slice s = intercept_slice({0, 2, 0, 1}, {true, true, false, false});
  const std::vector<Index> units{10, 11, 12, 13};
  const WeightedFit wf = fit_weighted_em(s, initial_params(complete_cases(s)), {}, units, 4);
  REQUIRE(wf.weights.size() == 2);
  CHECK(wf.weights[0].unit == 12);
  CHECK(wf.weights[1].unit == 13);
  CHECK(wf.weights[1].time == 4);
  CHECK_THROWS_AS(fit_weighted_em(s, initial_params(complete_cases(s)), {}, std::vector<Index>{1}), ArgumentError);
}
