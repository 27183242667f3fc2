#pragma once

#include <vector>

#include "zipem/zip_core.hpp"

namespace zipem {

using BoolGrid = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

/// Rectangular n x T response grid with a missingness mask and per-cell
/// covariate rows. Covariates are always fully observed.
struct PanelData {
  Eigen::MatrixXi y;                    // n x T; entries where !observed are unused
  BoolGrid observed;                    // n x T, true = observed
  std::vector<Eigen::MatrixXd> base_x;  // per time, n x p2 (Poisson part)
  std::vector<Eigen::MatrixXd> base_z;  // per time, n x p1 (zero part)
  std::vector<std::string> x_names;
  std::vector<std::string> z_names;
  std::vector<long> group;              // treatment code per unit (wide files), may be empty
  std::vector<long> unit_ids;           // long-format labels, may be empty
  std::vector<long> time_ids;

  Index units() const { return y.rows(); }
  Index times() const { return y.cols(); }
  Index missing_count() const { return observed.size() - observed.count(); }

  /// Throws ArgumentError when shapes disagree or an observed count is negative.
  void validate() const;

  /// Base covariates and responses at time t (0-based), missing cells flagged.
  Slice time_slice(Index t) const;

  /// All cells stacked unit-major, missing cells flagged.
  Slice pooled_slice() const;
};

struct TreatmentDesign {
  bool time_trend = true;           // append a linear time column t = 1..T
  bool zero_part_covariates = true; // false: zero part is intercept only
};

/// Builds the covariates used throughout: intercept, one dummy per
/// non-reference treatment code (smallest code is the reference) and an
/// optional time trend.
PanelData treatment_panel(Eigen::MatrixXi y, BoolGrid observed, std::vector<long> group,
                          const TreatmentDesign& design = {});

/// Drops missing rows.
Slice complete_cases(const Slice& slice);

}  // namespace zipem
