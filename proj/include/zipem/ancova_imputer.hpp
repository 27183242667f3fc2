#pragma once

// Step 2 of each time point: closed-form ANCOVA estimates of the missing-cell
// effects, the p0 decision rule, and the unweighted refit on completed data.

#include <span>
#include <vector>

#include "zipem/fit.hpp"

namespace zipem {

/// alpha = X_miss beta, tau = Z_miss gamma.
struct BartlettEstimates {
  Eigen::VectorXd alpha;
  Eigen::VectorXd tau;

  Eigen::VectorXd lambda_hat() const;
  Eigen::VectorXd pi_hat() const;
};

struct ImputationDecision {
  Index unit = 0;
  Index time = 0;
  double pi_hat = 0;
  double lambda_hat = 0;
  double p0 = 0.5;
  int imputed = 0;  // 0 iff pi_hat > p0, else floor(lambda_hat)
};

BartlettEstimates bartlett_estimates(const Eigen::MatrixXd& x_miss, const Eigen::MatrixXd& z_miss,
                                     const Params& params);

/// Applies the p0 rule cell by cell; `units` labels the decisions (defaults
/// to the estimate index).
std::vector<ImputationDecision> impute_cells(const BartlettEstimates& estimates, double p0,
                                             std::span<const Index> units = {}, Index time = 0);

FitResult refit_complete(const Slice& completed, const Params& init, const FitControl& ctrl = {});

struct Step2Result {
  std::vector<ImputationDecision> decisions;  // final imputation, one per missing row
  FitResult refit;
  Slice completed;
  int cycles = 0;
  bool stable = false;  // last cycle reproduced the previous imputations
};

/// Impute from the Step-1 parameters, refit, and re-impute from the refit
/// until the imputations stop changing or `max_cycles` refits have run.
/// `units` maps slice rows to unit ids for the decisions.
Step2Result impute_and_refit(const Slice& slice, const Params& step1, double p0,
                             const FitControl& ctrl = {}, int max_cycles = 5,
                             std::span<const Index> units = {}, Index time = 0);

}  // namespace zipem
