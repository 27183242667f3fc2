#include "zipem/weighted_em.hpp"

#include <cmath>

#include "em_loop.hpp"
#include "zipem/panel.hpp"

namespace zipem {

CandidateSupport candidate_support(std::span<const int> observed) {
  if (observed.empty()) throw StateError("candidate_support: no observed responses");
  double sum = 0;
  for (int y : observed) sum += y;
  const double m = sum / double(observed.size());
  return {std::max(1, int(std::ceil(m + 3.0 * std::sqrt(m))))};
}

CellWeights cell_weights(const DesignRow& row, const Params& params, const CandidateSupport& support,
                         std::optional<int> observed) {
  CellWeights cw;
  cw.support = support;
  if (observed) {
    if (*observed < 0) throw ArgumentError("cell_weights: negative observed count");
    cw.support.upper = std::max(support.upper, *observed);
    cw.w = Eigen::VectorXd::Zero(cw.support.size());
    cw.w(*observed) = 1.0;
    return cw;
  }
  const CellParams<double> cell{link_pi(row.z, params.gamma), link_lambda(row.x, params.beta)};
  cw.w.resize(support.size());
  for (int k = 0; k <= support.upper; ++k) cw.w(k) = zip_pmf(k, cell);
  const double total = cw.w.sum();
  if (total > 0) {
    cw.w /= total;
  } else {
    // pmf underflowed everywhere on the support (lambda far beyond K)
    cw.w.setZero();
    cw.w(support.upper) = 1.0;
  }
  return cw;
}

double e_step_indicator(int y, const DesignRow& row, const Params& params) {
  if (row.x.size() != params.beta.size() || row.z.size() != params.gamma.size())
    throw ArgumentError("e_step_indicator: dimension mismatch");
  return structural_zero_posterior(y, row.z.dot(params.gamma), row.x.dot(params.beta));
}

ExpandedRows expand_rows(const Slice& slice, const std::vector<CellWeights>& missing_weights) {
  Index total = 0;
  std::size_t next = 0;
  for (Index i = 0; i < slice.rows(); ++i) {
    if (slice.observed(i)) {
      ++total;
    } else {
      if (next >= missing_weights.size())
        throw ArgumentError("expand_rows: fewer weight vectors than missing cells");
      total += missing_weights[next++].w.size();
    }
  }
  if (next != missing_weights.size())
    throw ArgumentError("expand_rows: more weight vectors than missing cells");

  ExpandedRows rows;
  rows.X.resize(total, slice.X.cols());
  rows.Z.resize(total, slice.Z.cols());
  rows.y.resize(total);
  rows.weight.resize(total);
  rows.source.reserve(std::size_t(total));
  Index r = 0;
  next = 0;
  for (Index i = 0; i < slice.rows(); ++i) {
    if (slice.observed(i)) {
      rows.X.row(r) = slice.X.row(i);
      rows.Z.row(r) = slice.Z.row(i);
      rows.y(r) = slice.y(i);
      rows.weight(r) = 1.0;
      rows.source.push_back(i);
      ++r;
      continue;
    }
    const Eigen::VectorXd& w = missing_weights[next++].w;
    for (Index k = 0; k < w.size(); ++k, ++r) {
      rows.X.row(r) = slice.X.row(i);
      rows.Z.row(r) = slice.Z.row(i);
      rows.y(r) = int(k);
      rows.weight(r) = w(k);
      rows.source.push_back(i);
    }
  }
  return rows;
}

Eigen::VectorXd e_step_indicators(const ExpandedRows& rows, const Params& params) {
  const Eigen::VectorXd ez = rows.Z * params.gamma;
  const Eigen::VectorXd ex = rows.X * params.beta;
  Eigen::VectorXd d(rows.rows());
  for (Index r = 0; r < rows.rows(); ++r) d(r) = structural_zero_posterior(rows.y(r), ez(r), ex(r));
  return d;
}

Eigen::VectorXd weighted_update_gamma(const ExpandedRows& rows, const Eigen::VectorXd& gamma,
                                      const Eigen::VectorXd& d, double ridge) {
  if (rows.Z.cols() != gamma.size() || d.size() != rows.rows())
    throw ArgumentError("weighted_update_gamma: dimension mismatch");
  const Eigen::ArrayXd pi =
      (rows.Z * gamma).unaryExpr([](double e) { return logistic(clamp_predictor(e)); }).array();
  const Eigen::ArrayXd m = rows.weight.array() * pi * (1.0 - pi);
  const Eigen::MatrixXd info = rows.Z.transpose() * (rows.Z.array().colwise() * m).matrix();
  const Eigen::VectorXd u = rows.Z.transpose() * (rows.weight.array() * (d.array() - pi)).matrix();
  const auto step = solve_information(info, u, ridge);
  if (!step) throw NumericalError("weighted_update_gamma: singular zero-part information");
  return gamma + *step;
}

Eigen::VectorXd weighted_update_beta(const ExpandedRows& rows, const Eigen::VectorXd& beta,
                                     const Eigen::VectorXd& d, double ridge) {
  if (rows.X.cols() != beta.size() || d.size() != rows.rows())
    throw ArgumentError("weighted_update_beta: dimension mismatch");
  const Eigen::ArrayXd lambda =
      (rows.X * beta).unaryExpr([](double e) { return std::exp(clamp_predictor(e)); }).array();
  const Eigen::ArrayXd poisson_weight = rows.weight.array() * (1.0 - d.array());
  const Eigen::ArrayXd m = poisson_weight * lambda;
  const Eigen::MatrixXd info = rows.X.transpose() * (rows.X.array().colwise() * m).matrix();
  const Eigen::VectorXd u =
      rows.X.transpose() * (poisson_weight * (rows.y.cast<double>().array() - lambda)).matrix();
  const auto step = solve_information(info, u, ridge);
  if (!step) throw NumericalError("weighted_update_beta: singular Poisson-part information");
  return beta + *step;
}

double em_objective(const Slice& slice, const Params& params, const CandidateSupport& support) {
  double v = observed_loglik(slice, params);
  for (Index i = 0; i < slice.rows(); ++i) {
    if (slice.observed(i)) continue;
    const CellParams<double> cell{link_pi(slice.Z.row(i).transpose(), params.gamma),
                                  link_lambda(slice.X.row(i).transpose(), params.beta)};
    v += std::log(zip_cdf(support.upper, cell));
  }
  return v;
}

WeightedFit fit_weighted_em(const Slice& slice, const Params& init, const FitControl& ctrl,
                            std::span<const Index> units, Index time) {
  return detail::run_em(slice, init, ctrl, units, time);
}

namespace detail {

namespace {

std::vector<CellWeights> missing_cell_weights(const Slice& slice, const Params& params,
                                              const CandidateSupport& support,
                                              std::span<const Index> units, Index time) {
  std::vector<CellWeights> out;
  out.reserve(std::size_t(slice.n_missing()));
  for (Index i = 0; i < slice.rows(); ++i) {
    if (slice.observed(i)) continue;
    CellWeights cw =
        cell_weights({slice.X.row(i).transpose(), slice.Z.row(i).transpose()}, params, support);
    cw.unit = units.empty() ? i : units[std::size_t(i)];
    cw.time = time;
    out.push_back(std::move(cw));
  }
  return out;
}

}  // namespace

WeightedFit run_em(const Slice& slice, const Params& init, const FitControl& ctrl,
                   std::span<const Index> units, Index time) {
  detail::check_dims(slice, init, "fit");
  if (!init.all_finite()) throw ArgumentError("fit: non-finite initial parameters");
  if (!units.empty() && Index(units.size()) != slice.rows())
    throw ArgumentError("fit: unit labels do not match slice rows");
  require_full_rank(slice.X, slice.x_names, "Poisson-part");
  require_full_rank(slice.Z, slice.z_names, "zero-part");

  std::vector<int> observed_y;
  for (Index i = 0; i < slice.rows(); ++i)
    if (slice.observed(i)) observed_y.push_back(slice.y(i));
  const bool has_missing = !slice.complete();
  CandidateSupport support;
  if (has_missing) support = candidate_support(observed_y);

  WeightedFit out;
  FitResult& fit = out.fit;
  Params theta = init;
  double objective = em_objective(slice, theta, support);
  fit.loglik_trace.push_back(objective);
  const Index p1 = slice.Z.cols();

  for (int iter = 1; iter <= ctrl.max_iter; ++iter) {
    fit.iterations = iter;
    std::vector<CellWeights> weights;
    if (has_missing) weights = missing_cell_weights(slice, theta, support, units, time);
    const ExpandedRows rows = expand_rows(slice, weights);
    const Eigen::VectorXd d = e_step_indicators(rows, theta);

    Params proposal;
    try {
      proposal.gamma = weighted_update_gamma(rows, theta.gamma, d, ctrl.ridge);
      proposal.beta = weighted_update_beta(rows, theta.beta, d, ctrl.ridge);
    } catch (const NumericalError& e) {
      fit.message = e.what();
      break;
    }
    const Eigen::VectorXd current = theta.packed();
    const Eigen::VectorXd delta = proposal.packed() - current;

    double scale = 1.0;
    bool accepted = false;
    Params candidate;
    double candidate_objective = objective;
    for (int h = 0; h <= ctrl.max_halvings; ++h, scale *= 0.5) {
      candidate = Params::unpack(current + scale * delta, p1);
      candidate_objective = em_objective(slice, candidate, support);
      if (std::isfinite(candidate_objective) && candidate_objective >= objective) {
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      fit.converged = delta.cwiseAbs().maxCoeff() < ctrl.tol;
      if (!fit.converged) fit.message = "step halving exhausted without increasing the log-likelihood";
      break;
    }
    const double change = (scale * delta).cwiseAbs().maxCoeff();
    theta = candidate;
    objective = candidate_objective;
    fit.loglik_trace.push_back(objective);
    if (change < ctrl.tol) {
      fit.converged = true;
      break;
    }
  }
  if (!fit.converged && fit.message.empty())
    fit.message = "iteration limit reached";

  fit.params = theta;
  fit.loglik = observed_loglik(slice, theta);
  const Slice obs = complete_cases(slice);
  fit.info = fisher_info(obs, theta);
  fit.std_errors = standard_errors(fit.info);
  fit.separation_flag = (theta.packed().cwiseAbs().array() > ctrl.separation_bound).any();
  if (has_missing) out.weights = missing_cell_weights(slice, theta, support, units, time);
  return out;
}

}  // namespace detail

}  // namespace zipem
