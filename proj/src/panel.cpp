#include "zipem/panel.hpp"

#include <algorithm>

namespace zipem {

void PanelData::validate() const {
  const Index n = units(), T = times();
  if (observed.rows() != n || observed.cols() != T)
    throw ArgumentError("PanelData: mask shape differs from response grid");
  if (Index(base_x.size()) != T || Index(base_z.size()) != T)
    throw ArgumentError("PanelData: need one covariate block per time");
  for (Index t = 0; t < T; ++t) {
    const auto& bx = base_x[std::size_t(t)];
    const auto& bz = base_z[std::size_t(t)];
    if (bx.rows() != n || bz.rows() != n || bx.cols() != Index(x_names.size()) ||
        bz.cols() != Index(z_names.size()))
      throw ArgumentError("PanelData: covariate block shape mismatch at time " + std::to_string(t + 1));
    if (!bx.allFinite() || !bz.allFinite())
      throw ArgumentError("PanelData: non-finite covariate at time " + std::to_string(t + 1));
  }
  for (Index i = 0; i < n; ++i)
    for (Index t = 0; t < T; ++t)
      if (observed(i, t) && y(i, t) < 0) throw ArgumentError("PanelData: negative count");
  if (!group.empty() && Index(group.size()) != n)
    throw ArgumentError("PanelData: group codes do not match unit count");
}

Slice PanelData::time_slice(Index t) const {
  if (t < 0 || t >= times()) throw ArgumentError("time_slice: time out of range");
  Slice s;
  s.X = base_x[std::size_t(t)];
  s.Z = base_z[std::size_t(t)];
  s.y = y.col(t);
  s.observed = observed.col(t);
  for (Index i = 0; i < s.rows(); ++i)
    if (!s.observed(i)) s.y(i) = 0;
  s.x_names = x_names;
  s.z_names = z_names;
  return s;
}

Slice PanelData::pooled_slice() const {
  const Index n = units(), T = times();
  Slice s;
  s.X.resize(n * T, Index(x_names.size()));
  s.Z.resize(n * T, Index(z_names.size()));
  s.y.resize(n * T);
  s.observed.resize(n * T);
  Index r = 0;
  for (Index i = 0; i < n; ++i) {
    for (Index t = 0; t < T; ++t, ++r) {
      s.X.row(r) = base_x[std::size_t(t)].row(i);
      s.Z.row(r) = base_z[std::size_t(t)].row(i);
      s.observed(r) = observed(i, t);
      s.y(r) = observed(i, t) ? y(i, t) : 0;
    }
  }
  s.x_names = x_names;
  s.z_names = z_names;
  return s;
}

PanelData treatment_panel(Eigen::MatrixXi y, BoolGrid observed, std::vector<long> group,
                          const TreatmentDesign& design) {
  const Index n = y.rows(), T = y.cols();
  if (Index(group.size()) != n) throw ArgumentError("treatment_panel: one group code per unit");
  std::vector<long> levels = group;
  std::sort(levels.begin(), levels.end());
  levels.erase(std::unique(levels.begin(), levels.end()), levels.end());

  std::vector<std::string> names{"(Intercept)"};
  for (std::size_t l = 1; l < levels.size(); ++l) names.push_back("Treat" + std::to_string(levels[l]));
  if (design.time_trend) names.push_back("t");

  PanelData p;
  p.y = std::move(y);
  p.observed = std::move(observed);
  p.x_names = names;
  p.z_names = design.zero_part_covariates ? names : std::vector<std::string>{"(Intercept)"};
  for (Index t = 0; t < T; ++t) {
    Eigen::MatrixXd bx = Eigen::MatrixXd::Zero(n, Index(names.size()));
    bx.col(0).setOnes();
    for (Index i = 0; i < n; ++i) {
      for (std::size_t l = 1; l < levels.size(); ++l)
        if (group[std::size_t(i)] == levels[l]) bx(i, Index(l)) = 1.0;
      if (design.time_trend) bx(i, bx.cols() - 1) = double(t + 1);
    }
    p.base_z.push_back(design.zero_part_covariates ? bx : Eigen::MatrixXd::Ones(n, 1));
    p.base_x.push_back(std::move(bx));
  }
  p.group = std::move(group);
  p.validate();
  return p;
}

Slice complete_cases(const Slice& slice) {
  if (slice.complete()) return slice;
  Slice out;
  const Index n = slice.rows() - slice.n_missing();
  out.X.resize(n, slice.X.cols());
  out.Z.resize(n, slice.Z.cols());
  out.y.resize(n);
  out.observed = Eigen::Array<bool, Eigen::Dynamic, 1>::Constant(n, true);
  out.x_names = slice.x_names;
  out.z_names = slice.z_names;
  Index r = 0;
  for (Index i = 0; i < slice.rows(); ++i) {
    if (!slice.observed(i)) continue;
    out.X.row(r) = slice.X.row(i);
    out.Z.row(r) = slice.Z.row(i);
    out.y(r) = slice.y(i);
    ++r;
  }
  return out;
}

}  // namespace zipem
