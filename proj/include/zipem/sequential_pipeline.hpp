#pragma once

// Drives the two-step imputation through times 1..T. Completed responses of
// earlier times enter later designs as covariates: raw when a single prior
// column is informative, compressed to leading principal components otherwise.

#include <string>
#include <vector>

#include "zipem/ancova_imputer.hpp"
#include "zipem/panel.hpp"
#include "zipem/weighted_em.hpp"

namespace zipem {

struct PipelineConfig {
  double p0 = 0.5;
  FitControl ctrl;
  int n_components = 1;
  bool zero_part_same_as_poisson = true;  // false: zero part keeps its base design
  int max_refit_cycles = 5;
  double variance_floor = 1e-12;          // column variance below this is constant
  double collinearity_bound = 0.999;      // |corr| above this with a kept column drops it
  int min_prior_support = 2;              // prior column needs this many entries off its mode

  void validate() const;
};

enum class PriorCovariate { none, raw_previous, pca };

const char* to_string(PriorCovariate p);

struct DroppedColumn {
  std::string name;
  std::string reason;
};

struct TimeModelSpec {
  Index time = 0;  // 0-based
  Eigen::MatrixXd X;
  Eigen::MatrixXd Z;
  std::vector<std::string> x_names;
  std::vector<std::string> z_names;
  PriorCovariate prior = PriorCovariate::none;
  std::vector<Index> prior_times;   // completed columns the design was built from
  double variance_explained = 0;    // PCA only
  std::vector<DroppedColumn> dropped;
};

struct PcaResult {
  Eigen::MatrixXd scores;        // n x k
  Eigen::MatrixXd loadings;      // p x k, unit columns
  Eigen::VectorXd eigenvalues;   // all, descending
  double variance_explained = 0; // share of the leading k
};

/// Principal component scores of the centered columns from the sample
/// covariance. Each loading is signed so its largest-magnitude entry is
/// positive. All-constant input yields zero components.
PcaResult pca_scores(const Eigen::MatrixXd& columns, int n_components = 1);

/// Entries of `v` that differ from its most frequent value.
Index off_mode_count(const Eigen::VectorXd& v);

/// `prior` holds the completed responses of the times listed in
/// `prior_times` (one column each, in that order).
TimeModelSpec build_time_design(const PanelData& panel, Index t, const Eigen::MatrixXd& prior,
                                const std::vector<Index>& prior_times,
                                const PipelineConfig& config = {});

struct TimeRecord {
  Index time = 0;
  bool skipped = false;
  std::string note;
  TimeModelSpec spec;
  WeightedFit step1;
  Step2Result step2;
};

struct PipelineResult {
  PanelData completed;
  std::vector<TimeRecord> times;
  std::vector<ImputationDecision> trace;
  std::vector<Index> skipped_times;
};

PipelineResult run_pipeline(const PanelData& panel, const PipelineConfig& config = {});

/// Share of imputed cells equal to `truth`; NaN when nothing was imputed.
double success_rate(const PipelineResult& result, const Eigen::MatrixXi& truth);

}  // namespace zipem
