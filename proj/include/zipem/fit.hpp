#pragma once

#include <optional>
#include <string>
#include <vector>

#include "zipem/zip_core.hpp"

namespace zipem {

struct FitControl {
  double tol = 1e-6;            // max-abs parameter change
  int max_iter = 100;
  int max_halvings = 10;
  double ridge = 1e-8;          // added once to a singular information block
  double separation_bound = 20; // |coefficient| above this sets separation_flag
};

struct FitResult {
  Params params;
  double loglik = 0;
  int iterations = 0;
  bool converged = false;
  Eigen::MatrixXd info;        // (gamma, beta) blocks
  Eigen::VectorXd std_errors;  // NaN when info is not invertible
  bool separation_flag = false;
  std::string message;         // why iteration stopped when not converged
  std::vector<double> loglik_trace;
};

/// Moment start: beta intercept log(mean positive response + 0.5), gamma
/// intercept logit of the observed zero fraction clamped to [0.01, 0.99],
/// every other coefficient 0. The intercept is the first all-ones column.
Params initial_params(const Slice& slice);

/// Unweighted Fisher scoring with EM on the structural-zero indicators,
/// damped by step halving. Requires a complete slice.
FitResult fit_scoring(const Slice& slice, const Params& init, const FitControl& ctrl = {});

/// Throws DesignError naming the columns that make `design` rank deficient.
void require_full_rank(const Eigen::MatrixXd& design, const std::vector<std::string>& names,
                       const std::string& which);

/// Solves the SPD system `a * x = b`; on a singular `a` retries once with
/// `ridge` added to the diagonal. Returns nullopt when both attempts fail.
std::optional<Eigen::VectorXd> solve_information(const Eigen::MatrixXd& a, const Eigen::VectorXd& b,
                                                 double ridge);

/// Square roots of the diagonal of info^-1, NaN when info is singular.
Eigen::VectorXd standard_errors(const Eigen::MatrixXd& info);

/// Two-sided normal-approximation p-value for z = estimate / se.
double normal_p_value(double z);

}  // namespace zipem
