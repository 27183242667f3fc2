#pragma once

// Step 1 of each time point: EM over missing responses. Every missing cell is
// expanded into one pseudo-row per candidate value k in {0..K}, carrying the
// predictive probability of k as a weight, and gamma/beta are updated by
// weighted Fisher scoring.

#include <span>
#include <vector>

#include "zipem/fit.hpp"

namespace zipem {

struct CandidateSupport {
  int upper = 1;  // K; values are 0..K

  int size() const { return upper + 1; }
};

struct DesignRow {
  Eigen::VectorXd x;
  Eigen::VectorXd z;
};

struct CellWeights {
  Index unit = 0;
  Index time = 0;
  CandidateSupport support;
  Eigen::VectorXd w;  // w(k) for k = 0..K, sums to 1
};

/// Pseudo-row expansion of a slice. Observed cells give one row of weight 1;
/// a missing cell gives K+1 rows sharing its design row.
struct ExpandedRows {
  Eigen::MatrixXd X;
  Eigen::MatrixXd Z;
  Eigen::VectorXi y;
  Eigen::VectorXd weight;
  std::vector<Index> source;  // slice row of each pseudo-row

  Index rows() const { return y.size(); }
};

/// K = max(1, ceil(m + 3 sqrt(m))), m the mean observed response.
CandidateSupport candidate_support(std::span<const int> observed);

/// Point mass at `observed` when given, otherwise the ZIP pmf over the
/// support renormalized to sum to one.
CellWeights cell_weights(const DesignRow& row, const Params& params, const CandidateSupport& support,
                         std::optional<int> observed = std::nullopt);

double e_step_indicator(int y, const DesignRow& row, const Params& params);

ExpandedRows expand_rows(const Slice& slice, const std::vector<CellWeights>& missing_weights);

/// E-step indicators for every pseudo-row.
Eigen::VectorXd e_step_indicators(const ExpandedRows& rows, const Params& params);

/// One weighted scoring step for the zero part, information Z'MWZ with
/// M = diag(pi(1-pi)). Throws NumericalError if singular after the ridge retry.
Eigen::VectorXd weighted_update_gamma(const ExpandedRows& rows, const Eigen::VectorXd& gamma,
                                      const Eigen::VectorXd& d, double ridge = 1e-8);

/// One weighted scoring step for the Poisson part, information
/// X'W diag((1-D) lambda) X and score X'W (1-D)(y - lambda).
Eigen::VectorXd weighted_update_beta(const ExpandedRows& rows, const Eigen::VectorXd& beta,
                                     const Eigen::VectorXd& d, double ridge = 1e-8);

/// Observed-data log-likelihood plus log P(Y <= K) for every missing cell.
/// The weighted updates climb this function and their fixed point maximizes it.
double em_objective(const Slice& slice, const Params& params, const CandidateSupport& support);

struct WeightedFit {
  // fit.loglik is the observed-data log-likelihood; fit.loglik_trace follows em_objective

  FitResult fit;
  std::vector<CellWeights> weights;  // final weights, one per missing slice row
};

/// `units`/`time` label the CellWeights; `units` defaults to the slice row.
WeightedFit fit_weighted_em(const Slice& slice, const Params& init, const FitControl& ctrl = {},
                            std::span<const Index> units = {}, Index time = 0);

}  // namespace zipem
