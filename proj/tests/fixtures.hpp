#pragma once

#include <random>
#include <utility>
#include <vector>

#include "zipem/datasets.hpp"
#include "zipem/panel.hpp"

namespace fixtures {

// Cells (unit, week), 1-based, blanked in the fixed 20% corn loss pattern.
inline const std::vector<std::pair<int, int>>& corn_loss_cells() {
  static const std::vector<std::pair<int, int>> cells{
      {1, 5},  {1, 7},  {2, 3},  {2, 8},  {3, 2},  {4, 1},  {4, 3},  {4, 4},  {4, 6},
      {5, 1},  {5, 2},  {5, 5},  {6, 1},  {6, 5},  {6, 8},  {7, 7},  {8, 6},  {9, 3},
      {14, 6}, {15, 1}, {15, 3}, {15, 7}, {15, 8}, {16, 7}, {17, 4}, {17, 8}, {18, 8},
      {20, 4}, {21, 7}, {23, 1}, {23, 3}, {23, 6}, {24, 1}, {24, 2}, {24, 7}, {24, 8}};
  return cells;
}

inline zipem::BoolGrid corn_loss_mask() {
  zipem::BoolGrid obs = zipem::BoolGrid::Constant(24, 9, true);
  for (const auto& [u, w] : corn_loss_cells()) obs(u - 1, w - 1) = false;
  return obs;
}

inline zipem::PanelData corn_with_loss() {
  return zipem::treatment_panel(zipem::corn_counts(), corn_loss_mask(), zipem::corn_treatments());
}

// Random complete slice with an intercept plus `extra` standard-normal
// columns, responses drawn from the ZIP at `truth`.
inline zipem::Slice random_slice(std::mt19937_64& rng, int n, int extra, const zipem::Params& truth,
                                 bool zero_part_same = true) {
  std::normal_distribution<double> normal(0.0, 0.5);
  Eigen::MatrixXd X(n, extra + 1);
  for (int i = 0; i < n; ++i) {
    X(i, 0) = 1.0;
    for (int j = 1; j <= extra; ++j) X(i, j) = normal(rng);
  }
  Eigen::MatrixXd Z = zero_part_same ? X : Eigen::MatrixXd(Eigen::MatrixXd::Ones(n, 1));
  Eigen::VectorXi y(n);
  std::uniform_real_distribution<double> unif;
  for (int i = 0; i < n; ++i) {
    const double pi = zipem::link_pi(Z.row(i).transpose(), truth.gamma);
    const double lambda = zipem::link_lambda(X.row(i).transpose(), truth.beta);
    if (unif(rng) < pi) {
      y(i) = 0;
    } else {
      std::poisson_distribution<int> pois(lambda);
      y(i) = pois(rng);
    }
  }
  return zipem::make_slice(X, Z, y);
}

}  // namespace fixtures
