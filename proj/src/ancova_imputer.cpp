#include "zipem/ancova_imputer.hpp"

#include <cmath>

namespace zipem {

Eigen::VectorXd BartlettEstimates::lambda_hat() const {
  return alpha.unaryExpr([](double a) { return std::exp(clamp_predictor(a)); });
}

Eigen::VectorXd BartlettEstimates::pi_hat() const {
  return tau.unaryExpr([](double t) { return logistic(clamp_predictor(t)); });
}

BartlettEstimates bartlett_estimates(const Eigen::MatrixXd& x_miss, const Eigen::MatrixXd& z_miss,
                                     const Params& params) {
  if (x_miss.cols() != params.beta.size() || z_miss.cols() != params.gamma.size())
    throw ArgumentError("bartlett_estimates: coefficient lengths do not match design columns");
  if (x_miss.rows() != z_miss.rows())
    throw ArgumentError("bartlett_estimates: X and Z row counts differ");
  return {x_miss * params.beta, z_miss * params.gamma};
}

std::vector<ImputationDecision> impute_cells(const BartlettEstimates& estimates, double p0,
                                             std::span<const Index> units, Index time) {
  if (!(p0 > 0.0 && p0 < 1.0)) throw ArgumentError("impute_cells: p0 must lie in (0, 1)");
  if (!units.empty() && Index(units.size()) != estimates.alpha.size())
    throw ArgumentError("impute_cells: unit labels do not match estimates");
  const Eigen::VectorXd pi = estimates.pi_hat();
  const Eigen::VectorXd lambda = estimates.lambda_hat();
  std::vector<ImputationDecision> out;
  out.reserve(std::size_t(pi.size()));
  for (Index i = 0; i < pi.size(); ++i) {
    ImputationDecision d;
    d.unit = units.empty() ? i : units[std::size_t(i)];
    d.time = time;
    d.pi_hat = pi(i);
    d.lambda_hat = lambda(i);
    d.p0 = p0;
    d.imputed = pi(i) > p0 ? 0 : int(std::min(std::floor(lambda(i)), 1e9));
    out.push_back(d);
  }
  return out;
}

FitResult refit_complete(const Slice& completed, const Params& init, const FitControl& ctrl) {
  return fit_scoring(completed, init, ctrl);
}

Step2Result impute_and_refit(const Slice& slice, const Params& step1, double p0,
                             const FitControl& ctrl, int max_cycles, std::span<const Index> units,
                             Index time) {
  if (max_cycles < 1) throw ArgumentError("impute_and_refit: max_cycles must be >= 1");
  std::vector<Index> missing_rows;
  for (Index i = 0; i < slice.rows(); ++i)
    if (!slice.observed(i)) missing_rows.push_back(i);
  const Index m = Index(missing_rows.size());
  Eigen::MatrixXd x_miss(m, slice.X.cols()), z_miss(m, slice.Z.cols());
  std::vector<Index> labels(missing_rows.size());
  for (Index k = 0; k < m; ++k) {
    const Index i = missing_rows[std::size_t(k)];
    x_miss.row(k) = slice.X.row(i);
    z_miss.row(k) = slice.Z.row(i);
    labels[std::size_t(k)] = units.empty() ? i : units[std::size_t(i)];
  }

  Step2Result out;
  Params params = step1;
  std::vector<int> previous;
  for (int cycle = 1; cycle <= max_cycles; ++cycle) {
    auto decisions = impute_cells(bartlett_estimates(x_miss, z_miss, params), p0, labels, time);
    std::vector<int> current;
    for (const auto& d : decisions) current.push_back(d.imputed);
    if (cycle > 1 && current == previous) {
      out.stable = true;
      break;
    }
    out.decisions = std::move(decisions);
    out.completed = slice;
    for (Index k = 0; k < m; ++k) {
      const Index i = missing_rows[std::size_t(k)];
      out.completed.y(i) = current[std::size_t(k)];
      out.completed.observed(i) = true;
    }
    out.refit = refit_complete(out.completed, params, ctrl);
    out.cycles = cycle;
    params = out.refit.params;
    previous = std::move(current);
    if (m == 0) {
      out.stable = true;
      break;
    }
  }
  return out;
}

}  // namespace zipem
