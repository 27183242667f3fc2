#pragma once

// Zero-inflated Poisson distribution, link functions, log-likelihood, score
// and information. Everything here is templated on the scalar type so the
// same expressions can be evaluated in extended precision by test oracles.

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "zipem/errors.hpp"

namespace zipem {

using Eigen::Index;

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

/// Linear predictors are clamped to [-kPredictorBound, kPredictorBound] before
/// exponentiation.
inline constexpr double kPredictorBound = 30.0;

template <typename Scalar>
inline Scalar clamp_predictor(Scalar eta) {
  return std::clamp(eta, Scalar(-kPredictorBound), Scalar(kPredictorBound));
}

template <typename Scalar>
inline Scalar logistic(Scalar x) {
  using std::exp;
  return x >= Scalar(0) ? Scalar(1) / (Scalar(1) + exp(-x)) : exp(x) / (Scalar(1) + exp(x));
}

/// log(1 + e^x)
template <typename Scalar>
inline Scalar softplus(Scalar x) {
  using std::exp;
  using std::log1p;
  return x > Scalar(0) ? x + log1p(exp(-x)) : log1p(exp(x));
}

/// log(e^a + e^b)
template <typename Scalar>
inline Scalar log_add_exp(Scalar a, Scalar b) {
  using std::exp;
  using std::log1p;
  if (a == -std::numeric_limits<Scalar>::infinity()) return b;
  if (b == -std::numeric_limits<Scalar>::infinity()) return a;
  return a > b ? a + log1p(exp(b - a)) : b + log1p(exp(a - b));
}

/// log(k!) from a table for small k, Stirling series above it.
template <typename Scalar>
Scalar log_factorial(int k) {
  constexpr int kTable = 1024;
  static const std::array<long double, kTable> table = [] {
    std::array<long double, kTable> t{};
    t[0] = 0.0L;
    for (int i = 1; i < kTable; ++i) t[i] = t[i - 1] + std::log(static_cast<long double>(i));
    return t;
  }();
  if (k < 0) throw ArgumentError("log_factorial: negative argument");
  if (k < kTable) return static_cast<Scalar>(table[k]);
  const long double n = static_cast<long double>(k) + 1.0L;
  const long double half_log_2pi = 0.91893853320467274178L;
  return static_cast<Scalar>((n - 0.5L) * std::log(n) - n + half_log_2pi + 1.0L / (12.0L * n) -
                             1.0L / (360.0L * n * n * n));
}

// ---------------------------------------------------------------------------
// Domain types

template <typename Scalar>
struct ZipParams {
  Vector<Scalar> beta;   // Poisson part, one entry per X column
  Vector<Scalar> gamma;  // zero part, one entry per Z column

  Index size() const { return beta.size() + gamma.size(); }

  /// (gamma, beta) stacked, matching the layout of score() and fisher_info().
  Vector<Scalar> packed() const {
    Vector<Scalar> theta(size());
    theta << gamma, beta;
    return theta;
  }

  static ZipParams unpack(const Vector<Scalar>& theta, Index n_gamma) {
    if (n_gamma < 0 || n_gamma > theta.size()) throw ArgumentError("ZipParams::unpack: bad split");
    return {theta.tail(theta.size() - n_gamma), theta.head(n_gamma)};
  }

  bool all_finite() const { return beta.allFinite() && gamma.allFinite(); }

  template <typename S>
  ZipParams<S> cast() const {
    return {beta.template cast<S>(), gamma.template cast<S>()};
  }
};

template <typename Scalar>
struct CellParams {
  Scalar pi;
  Scalar lambda;
};

/// Per-cell design rows and responses for one fit. Rows are cells (unit-time
/// pairs); `observed(i)` false marks a missing response whose `y(i)` is unused.
template <typename Scalar>
struct BasicSlice {
  Matrix<Scalar> X;
  Matrix<Scalar> Z;
  Eigen::VectorXi y;
  Eigen::Array<bool, Eigen::Dynamic, 1> observed;
  std::vector<std::string> x_names;
  std::vector<std::string> z_names;

  Index rows() const { return y.size(); }
  Index n_missing() const { return rows() - observed.count(); }
  bool complete() const { return n_missing() == 0; }

  template <typename S>
  BasicSlice<S> cast() const {
    return {X.template cast<S>(), Z.template cast<S>(), y, observed, x_names, z_names};
  }
};

using Slice = BasicSlice<double>;
using Params = ZipParams<double>;

/// Fully observed slice with default column names.
Slice make_slice(Eigen::MatrixXd X, Eigen::MatrixXd Z, Eigen::VectorXi y);

namespace detail {

template <typename Scalar>
void check_dims(const BasicSlice<Scalar>& s, const ZipParams<Scalar>& p, const char* op) {
  if (s.X.rows() != s.rows() || s.Z.rows() != s.rows() || s.observed.size() != s.rows())
    throw ArgumentError(std::string(op) + ": slice row counts disagree");
  if (s.X.cols() != p.beta.size() || s.Z.cols() != p.gamma.size())
    throw ArgumentError(std::string(op) + ": coefficient lengths do not match design columns");
}

template <typename Scalar>
void require_complete(const BasicSlice<Scalar>& s, const char* op) {
  if (!s.complete())
    throw StateError(std::string(op) + ": slice has " + std::to_string(s.n_missing()) +
                     " missing responses");
}

/// log P(Y = y) written in terms of the (clamped) linear predictors.
template <typename Scalar>
Scalar log_pmf_eta(int y, Scalar eta_z, Scalar eta_x) {
  using std::exp;
  const Scalar lambda = exp(eta_x);
  if (y == 0) return log_add_exp(eta_z, -lambda) - softplus(eta_z);
  return -softplus(eta_z) + Scalar(y) * eta_x - lambda - log_factorial<Scalar>(y);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Links

template <typename DerivedZ, typename DerivedG>
typename DerivedZ::Scalar link_pi(const Eigen::MatrixBase<DerivedZ>& z,
                                  const Eigen::MatrixBase<DerivedG>& gamma) {
  if (z.size() != gamma.size()) throw ArgumentError("link_pi: length(z) != length(gamma)");
  using Scalar = typename DerivedZ::Scalar;
  Scalar eta = 0;
  for (Index j = 0; j < z.size(); ++j) eta += z(j) * gamma(j);
  return logistic(clamp_predictor(eta));
}

template <typename DerivedX, typename DerivedB>
typename DerivedX::Scalar link_lambda(const Eigen::MatrixBase<DerivedX>& x,
                                      const Eigen::MatrixBase<DerivedB>& beta) {
  if (x.size() != beta.size()) throw ArgumentError("link_lambda: length(x) != length(beta)");
  using Scalar = typename DerivedX::Scalar;
  using std::exp;
  Scalar eta = 0;
  for (Index j = 0; j < x.size(); ++j) eta += x(j) * beta(j);
  return exp(clamp_predictor(eta));
}

// ---------------------------------------------------------------------------
// Distribution

template <typename Scalar>
Scalar log_zip_pmf(int y, const CellParams<Scalar>& cell) {
  using std::exp;
  using std::log;
  using std::log1p;
  if (y < 0) throw ArgumentError("zip_pmf: negative count");
  const Scalar ninf = -std::numeric_limits<Scalar>::infinity();
  const Scalar log_pi = cell.pi > Scalar(0) ? log(cell.pi) : ninf;
  const Scalar log_1mpi = cell.pi < Scalar(1) ? log1p(-cell.pi) : ninf;
  if (y == 0) return log_add_exp(log_pi, log_1mpi - cell.lambda);
  if (log_1mpi == ninf) return ninf;
  return log_1mpi + Scalar(y) * log(cell.lambda) - cell.lambda - log_factorial<Scalar>(y);
}

template <typename Scalar>
Scalar zip_pmf(int y, const CellParams<Scalar>& cell) {
  using std::exp;
  return exp(log_zip_pmf(y, cell));
}

/// P(Y <= y)
template <typename Scalar>
Scalar zip_cdf(int y, const CellParams<Scalar>& cell) {
  Scalar total = 0;
  for (int k = 0; k <= y; ++k) total += zip_pmf(k, cell);
  return std::min(total, Scalar(1));
}

// ---------------------------------------------------------------------------
// Likelihood, score and information of a complete slice

template <typename Scalar>
Scalar loglik(const BasicSlice<Scalar>& s, const ZipParams<Scalar>& p) {
  detail::check_dims(s, p, "loglik");
  detail::require_complete(s, "loglik");
  const Vector<Scalar> ez = (s.Z * p.gamma).unaryExpr([](Scalar e) { return clamp_predictor(e); });
  const Vector<Scalar> ex = (s.X * p.beta).unaryExpr([](Scalar e) { return clamp_predictor(e); });
  Scalar total = 0;
  for (Index i = 0; i < s.rows(); ++i) total += detail::log_pmf_eta(s.y(i), ez(i), ex(i));
  return total;
}

/// Sum of log P(y) over observed rows only; missing rows are skipped.
template <typename Scalar>
Scalar observed_loglik(const BasicSlice<Scalar>& s, const ZipParams<Scalar>& p) {
  detail::check_dims(s, p, "observed_loglik");
  Scalar total = 0;
  for (Index i = 0; i < s.rows(); ++i) {
    if (!s.observed(i)) continue;
    const Scalar ez = clamp_predictor(Scalar(s.Z.row(i).dot(p.gamma)));
    const Scalar ex = clamp_predictor(Scalar(s.X.row(i).dot(p.beta)));
    total += detail::log_pmf_eta(s.y(i), ez, ex);
  }
  return total;
}

/// Gradient of loglik, laid out as (d/dgamma, d/dbeta).
template <typename Scalar>
Vector<Scalar> score(const BasicSlice<Scalar>& s, const ZipParams<Scalar>& p) {
  using std::exp;
  detail::check_dims(s, p, "score");
  detail::require_complete(s, "score");
  const Index p1 = s.Z.cols();
  const Index p2 = s.X.cols();
  Vector<Scalar> u = Vector<Scalar>::Zero(p1 + p2);
  for (Index i = 0; i < s.rows(); ++i) {
    const Scalar ez = clamp_predictor(Scalar(s.Z.row(i).dot(p.gamma)));
    const Scalar ex = clamp_predictor(Scalar(s.X.row(i).dot(p.beta)));
    const Scalar lambda = exp(ex);
    const Scalar pi = logistic(ez);
    const int y = s.y(i);
    if (y == 0) {
      // w / (w + e^-lambda) and lambda e^-lambda / (w + e^-lambda), w = e^{eta_z}
      const Scalar a = ez + lambda;
      u.head(p1) += s.Z.row(i).transpose() * (logistic(a) - pi);
      u.tail(p2) += s.X.row(i).transpose() * (-lambda * logistic(-a));
    } else {
      u.head(p1) += s.Z.row(i).transpose() * (-pi);
      u.tail(p2) += s.X.row(i).transpose() * (Scalar(y) - lambda);
    }
  }
  return u;
}

/// Observed information (negative Hessian of loglik) with the realized
/// structural-zero indicators plugged in, laid out as (gamma, beta) blocks.
template <typename Scalar>
Matrix<Scalar> fisher_info(const BasicSlice<Scalar>& s, const ZipParams<Scalar>& p) {
  using std::exp;
  detail::check_dims(s, p, "fisher_info");
  detail::require_complete(s, "fisher_info");
  const Index p1 = s.Z.cols();
  const Index p2 = s.X.cols();
  Matrix<Scalar> info = Matrix<Scalar>::Zero(p1 + p2, p1 + p2);
  for (Index i = 0; i < s.rows(); ++i) {
    const Scalar ez = clamp_predictor(Scalar(s.Z.row(i).dot(p.gamma)));
    const Scalar ex = clamp_predictor(Scalar(s.X.row(i).dot(p.beta)));
    const Scalar lambda = exp(ex);
    const Scalar pi = logistic(ez);
    const auto z = s.Z.row(i).transpose();
    const auto x = s.X.row(i).transpose();
    if (s.y(i) == 0) {
      const Scalar a = ez + lambda;
      // w e^-lambda / (w + e^-lambda)^2
      const Scalar q = logistic(a) * logistic(-a);
      info.topLeftCorner(p1, p1) += (pi * (Scalar(1) - pi) - q) * z * z.transpose();
      info.bottomRightCorner(p2, p2) += (lambda * (logistic(-a) - lambda * q)) * x * x.transpose();
      info.topRightCorner(p1, p2) += (-lambda * q) * z * x.transpose();
    } else {
      info.topLeftCorner(p1, p1) += (pi * (Scalar(1) - pi)) * z * z.transpose();
      info.bottomRightCorner(p2, p2) += lambda * x * x.transpose();
    }
  }
  info.bottomLeftCorner(p2, p1) = info.topRightCorner(p1, p2).transpose();
  return info;
}

/// E[D | y] for the structural-zero indicator: 0 for y > 0, otherwise
/// 1 / (1 + exp(-exp(x'beta) - z'gamma)).
template <typename Scalar>
Scalar structural_zero_posterior(int y, Scalar eta_z, Scalar eta_x) {
  using std::exp;
  if (y > 0) return Scalar(0);
  return logistic(clamp_predictor(eta_z) + exp(clamp_predictor(eta_x)));
}

}  // namespace zipem
