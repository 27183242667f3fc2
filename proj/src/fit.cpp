#include "zipem/fit.hpp"

#include <cmath>
#include <limits>

#include "em_loop.hpp"

namespace zipem {

Slice make_slice(Eigen::MatrixXd X, Eigen::MatrixXd Z, Eigen::VectorXi y) {
  Slice s;
  const Index n = y.size();
  s.observed = Eigen::Array<bool, Eigen::Dynamic, 1>::Constant(n, true);
  for (Index j = 0; j < X.cols(); ++j) s.x_names.push_back("x" + std::to_string(j));
  for (Index j = 0; j < Z.cols(); ++j) s.z_names.push_back("z" + std::to_string(j));
  s.X = std::move(X);
  s.Z = std::move(Z);
  s.y = std::move(y);
  return s;
}

namespace {

Index intercept_column(const Eigen::MatrixXd& m) {
  for (Index j = 0; j < m.cols(); ++j)
    if (m.rows() > 0 && (m.col(j).array() == 1.0).all()) return j;
  return -1;
}

}  // namespace

Params initial_params(const Slice& slice) {
  Params p{Eigen::VectorXd::Zero(slice.X.cols()), Eigen::VectorXd::Zero(slice.Z.cols())};
  double positive_sum = 0;
  Index positive = 0, zeros = 0, observed = 0;
  for (Index i = 0; i < slice.rows(); ++i) {
    if (!slice.observed(i)) continue;
    ++observed;
    if (slice.y(i) > 0) {
      positive_sum += slice.y(i);
      ++positive;
    } else {
      ++zeros;
    }
  }
  const double mean_positive = positive ? positive_sum / double(positive) : 0.0;
  const double zero_fraction =
      std::clamp(observed ? double(zeros) / double(observed) : 0.5, 0.01, 0.99);
  if (const Index j = intercept_column(slice.X); j >= 0) p.beta(j) = std::log(mean_positive + 0.5);
  if (const Index j = intercept_column(slice.Z); j >= 0)
    p.gamma(j) = std::log(zero_fraction / (1.0 - zero_fraction));
  return p;
}

void require_full_rank(const Eigen::MatrixXd& design, const std::vector<std::string>& names,
                       const std::string& which) {
  if (design.cols() == 0) throw DesignError(which + " design has no columns", {});
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  qr.setThreshold(1e-10);
  const Index rank = qr.rank();
  if (rank == design.cols()) return;
  std::vector<std::string> offending;
  std::string list;
  for (Index k = rank; k < design.cols(); ++k) {
    const Index col = qr.colsPermutation().indices()(k);
    const std::string name =
        col < Index(names.size()) ? names[std::size_t(col)] : "column " + std::to_string(col);
    offending.push_back(name);
    list += (list.empty() ? "" : ", ") + name;
  }
  throw DesignError(which + " design is rank deficient; offending columns: " + list,
                    std::move(offending));
}

namespace {

std::optional<Eigen::VectorXd> try_solve(const Eigen::MatrixXd& a, const Eigen::VectorXd& b) {
  Eigen::LDLT<Eigen::MatrixXd> ldlt(a);
  if (ldlt.info() != Eigen::Success) return std::nullopt;
  const Eigen::VectorXd d = ldlt.vectorD();
  const double dmax = d.cwiseAbs().maxCoeff();
  if (!(dmax > 0) || !std::isfinite(dmax) || d.minCoeff() <= 1e-13 * dmax) return std::nullopt;
  Eigen::VectorXd x = ldlt.solve(b);
  if (!x.allFinite()) return std::nullopt;
  return x;
}

}  // namespace

std::optional<Eigen::VectorXd> solve_information(const Eigen::MatrixXd& a, const Eigen::VectorXd& b,
                                                 double ridge) {
  if (auto x = try_solve(a, b)) return x;
  Eigen::MatrixXd ridged = a;
  ridged.diagonal().array() += ridge;
  return try_solve(ridged, b);
}

Eigen::VectorXd standard_errors(const Eigen::MatrixXd& info) {
  const Index p = info.rows();
  const Eigen::VectorXd nan = Eigen::VectorXd::Constant(p, std::numeric_limits<double>::quiet_NaN());
  if (p == 0 || !info.allFinite()) return nan;
  Eigen::LDLT<Eigen::MatrixXd> ldlt(info);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) return nan;
  const Eigen::VectorXd d = ldlt.vectorD();
  if (d.minCoeff() <= 1e-15 * d.cwiseAbs().maxCoeff()) return nan;
  const Eigen::MatrixXd inv = ldlt.solve(Eigen::MatrixXd::Identity(p, p));
  Eigen::VectorXd se(p);
  for (Index j = 0; j < p; ++j) se(j) = inv(j, j) > 0 ? std::sqrt(inv(j, j)) : nan(j);
  return se;
}

double normal_p_value(double z) {
  if (!std::isfinite(z)) return std::numeric_limits<double>::quiet_NaN();
  return std::erfc(std::abs(z) / std::sqrt(2.0));
}

FitResult fit_scoring(const Slice& slice, const Params& init, const FitControl& ctrl) {
  detail::require_complete(slice, "fit_scoring");
  return detail::run_em(slice, init, ctrl, {}, 0).fit;
}

}  // namespace zipem
