#include "zipem/sequential_pipeline.hpp"

#include <cmath>
#include <algorithm>
#include <limits>

namespace zipem {

void PipelineConfig::validate() const {
  if (!(p0 > 0.0 && p0 < 1.0)) throw ArgumentError("pipeline: p0 must lie in (0, 1)");
  if (n_components < 1) throw ArgumentError("pipeline: n_components must be >= 1");
  if (max_refit_cycles < 1) throw ArgumentError("pipeline: max_refit_cycles must be >= 1");
  if (min_prior_support < 0) throw ArgumentError("pipeline: min_prior_support must be >= 0");
  if (ctrl.max_iter < 1 || !(ctrl.tol > 0)) throw ArgumentError("pipeline: invalid fit control");
}

const char* to_string(PriorCovariate p) {
  switch (p) {
    case PriorCovariate::none: return "none";
    case PriorCovariate::raw_previous: return "raw_previous";
    case PriorCovariate::pca: return "pca";
  }
  return "none";
}

namespace {

double sample_variance(const Eigen::VectorXd& v) {
  if (v.size() < 2) return 0.0;
  return (v.array() - v.mean()).square().sum() / double(v.size() - 1);
}

double abs_correlation(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const Eigen::ArrayXd ca = a.array() - a.mean();
  const Eigen::ArrayXd cb = b.array() - b.mean();
  const double den = std::sqrt(ca.square().sum() * cb.square().sum());
  return den > 0 ? std::abs((ca * cb).sum()) / den : 0.0;
}

bool is_ones(const Eigen::VectorXd& v) { return v.size() > 0 && (v.array() == 1.0).all(); }

struct Column {
  std::string name;
  Eigen::VectorXd values;
};

// Applies the drop rule in order; the first all-ones column is always kept.
std::vector<Column> screen(std::vector<Column> candidates, const PipelineConfig& config,
                           std::vector<DroppedColumn>& dropped) {
  std::vector<Column> kept;
  bool have_intercept = false;
  for (auto& c : candidates) {
    if (!have_intercept && is_ones(c.values)) {
      have_intercept = true;
      kept.push_back(std::move(c));
      continue;
    }
    if (sample_variance(c.values) < config.variance_floor) {
      dropped.push_back({c.name, "constant"});
      continue;
    }
    bool collinear = false;
    for (const auto& k : kept) {
      if (is_ones(k.values)) continue;
      if (abs_correlation(c.values, k.values) > config.collinearity_bound) {
        dropped.push_back({c.name, "collinear with " + k.name});
        collinear = true;
        break;
      }
    }
    if (collinear) continue;
    // linear dependence the pairwise rule misses
    Eigen::MatrixXd trial(c.values.size(), Index(kept.size()) + 1);
    for (std::size_t j = 0; j < kept.size(); ++j) trial.col(Index(j)) = kept[j].values;
    trial.col(trial.cols() - 1) = c.values;
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(trial);
    qr.setThreshold(1e-10);
    if (qr.rank() < trial.cols()) {
      dropped.push_back({c.name, "linearly dependent on kept columns"});
      continue;
    }
    kept.push_back(std::move(c));
  }
  return kept;
}

void assemble(const std::vector<Column>& cols, Eigen::MatrixXd& m, std::vector<std::string>& names) {
  if (cols.empty()) return;
  m.resize(cols.front().values.size(), Index(cols.size()));
  names.clear();
  for (std::size_t j = 0; j < cols.size(); ++j) {
    m.col(Index(j)) = cols[j].values;
    names.push_back(cols[j].name);
  }
}

std::vector<Column> base_columns(const Eigen::MatrixXd& m, const std::vector<std::string>& names) {
  std::vector<Column> out;
  for (Index j = 0; j < m.cols(); ++j) out.push_back({names[std::size_t(j)], m.col(j)});
  return out;
}

template <typename E>
[[noreturn]] void rethrow_at(const E& e, Index t) {
  throw E("time " + std::to_string(t + 1) + ": " + e.what());
}

}  // namespace

Index off_mode_count(const Eigen::VectorXd& v) {
  std::vector<double> sorted(v.data(), v.data() + v.size());
  std::sort(sorted.begin(), sorted.end());
  Index best = 0;
  for (std::size_t i = 0; i < sorted.size();) {
    std::size_t j = i;
    while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
    best = std::max(best, Index(j - i));
    i = j;
  }
  return v.size() - best;
}

PcaResult pca_scores(const Eigen::MatrixXd& columns, int n_components) {
  if (n_components < 1) throw ArgumentError("pca_scores: n_components must be >= 1");
  PcaResult out;
  const Index n = columns.rows(), p = columns.cols();
  out.scores.resize(n, 0);
  out.loadings.resize(p, 0);
  if (n < 2 || p == 0) return out;
  const Eigen::MatrixXd centered = columns.rowwise() - columns.colwise().mean();
  const Eigen::MatrixXd cov = centered.transpose() * centered / double(n - 1);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  if (eig.info() != Eigen::Success) throw NumericalError("pca_scores: eigendecomposition failed");
  out.eigenvalues = eig.eigenvalues().reverse().cwiseMax(0.0);
  const double total = out.eigenvalues.sum();
  if (!(total > 1e-12)) {
    out.eigenvalues.setZero();
    return out;
  }
  Index k = std::min<Index>(n_components, p);
  while (k > 0 && out.eigenvalues(k - 1) <= 1e-12 * total) --k;
  out.loadings.resize(p, k);
  for (Index c = 0; c < k; ++c) {
    Eigen::VectorXd v = eig.eigenvectors().col(p - 1 - c);
    Index arg;
    v.cwiseAbs().maxCoeff(&arg);
    if (v(arg) < 0) v = -v;
    out.loadings.col(c) = v;
  }
  out.scores = centered * out.loadings;
  out.variance_explained = out.eigenvalues.head(k).sum() / total;
  return out;
}

TimeModelSpec build_time_design(const PanelData& panel, Index t, const Eigen::MatrixXd& prior,
                                const std::vector<Index>& prior_times,
                                const PipelineConfig& config) {
  if (t < 0 || t >= panel.times()) throw ArgumentError("build_time_design: time out of range");
  if (prior.cols() != Index(prior_times.size()) || (prior.cols() > 0 && prior.rows() != panel.units()))
    throw ArgumentError("build_time_design: prior columns do not match their labels");
  for (Index s : prior_times)
    if (s < 0 || s >= t) throw ArgumentError("build_time_design: prior column is not from an earlier time");

  TimeModelSpec spec;
  spec.time = t;
  spec.prior_times = prior_times;

  // prior responses reduced to their informative columns
  std::vector<Index> informative;
  for (Index j = 0; j < prior.cols(); ++j) {
    const std::string name = "y" + std::to_string(prior_times[std::size_t(j)] + 1);
    if (sample_variance(prior.col(j)) < config.variance_floor)
      spec.dropped.push_back({name, "constant"});
    else if (off_mode_count(prior.col(j)) < config.min_prior_support)
      spec.dropped.push_back({name, "too few values off the mode"});
    else
      informative.push_back(j);
  }
  std::vector<Column> extra;
  if (informative.size() == 1) {
    const Index j = informative.front();
    spec.prior = PriorCovariate::raw_previous;
    extra.push_back({"y" + std::to_string(prior_times[std::size_t(j)] + 1), prior.col(j)});
  } else if (informative.size() > 1) {
    Eigen::MatrixXd cols(prior.rows(), Index(informative.size()));
    for (std::size_t k = 0; k < informative.size(); ++k) cols.col(Index(k)) = prior.col(informative[k]);
    const PcaResult pca = pca_scores(cols, config.n_components);
    spec.prior = PriorCovariate::pca;
    spec.variance_explained = pca.variance_explained;
    for (Index c = 0; c < pca.scores.cols(); ++c)
      extra.push_back({"PC" + std::to_string(c + 1), pca.scores.col(c)});
  }

  const auto& bx = panel.base_x[std::size_t(t)];
  const auto& bz = panel.base_z[std::size_t(t)];
  auto x_cols = base_columns(bx, panel.x_names);
  for (const auto& c : extra) x_cols.push_back(c);
  std::vector<DroppedColumn> x_dropped;
  const auto x_kept = screen(std::move(x_cols), config, x_dropped);
  if (x_kept.empty())
    throw DesignError("time " + std::to_string(t + 1) + ": every Poisson-part column is degenerate",
                      panel.x_names);
  assemble(x_kept, spec.X, spec.x_names);
  spec.dropped.insert(spec.dropped.end(), x_dropped.begin(), x_dropped.end());

  if (config.zero_part_same_as_poisson) {
    spec.Z = spec.X;
    spec.z_names = spec.x_names;
  } else {
    std::vector<DroppedColumn> z_dropped;
    const auto z_kept = screen(base_columns(bz, panel.z_names), config, z_dropped);
    if (z_kept.empty())
      throw DesignError("time " + std::to_string(t + 1) + ": every zero-part column is degenerate",
                        panel.z_names);
    assemble(z_kept, spec.Z, spec.z_names);
    for (auto d : z_dropped) {
      d.name = "zero-part " + d.name;
      spec.dropped.push_back(std::move(d));
    }
  }
  return spec;
}

PipelineResult run_pipeline(const PanelData& panel, const PipelineConfig& config) {
  panel.validate();
  config.validate();
  const Index n = panel.units(), T = panel.times();
  PipelineResult out;
  out.completed = panel;
  std::vector<Index> units(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i)
    units[std::size_t(i)] = panel.unit_ids.empty() ? i : Index(panel.unit_ids[std::size_t(i)]);

  std::vector<Index> done;  // completed times usable as covariates
  for (Index t = 0; t < T; ++t) {
    TimeRecord rec;
    rec.time = t;
    if (panel.observed.col(t).count() == 0) {
      rec.skipped = true;
      rec.note = "no observed responses";
      out.skipped_times.push_back(t);
      out.times.push_back(std::move(rec));
      continue;
    }
    try {
      Eigen::MatrixXd prior(n, Index(done.size()));
      for (std::size_t k = 0; k < done.size(); ++k)
        prior.col(Index(k)) = out.completed.y.col(done[k]).cast<double>();
      rec.spec = build_time_design(panel, t, prior, done, config);

      Slice s;
      s.X = rec.spec.X;
      s.Z = rec.spec.Z;
      s.x_names = rec.spec.x_names;
      s.z_names = rec.spec.z_names;
      s.observed = panel.observed.col(t);
      s.y = panel.y.col(t);
      for (Index i = 0; i < n; ++i)
        if (!s.observed(i)) s.y(i) = 0;

      rec.step1 = fit_weighted_em(s, initial_params(s), config.ctrl, units, t);
      rec.step2 = impute_and_refit(s, rec.step1.fit.params, config.p0, config.ctrl,
                                   config.max_refit_cycles, units, t);
    } catch (const DesignError& e) {
      throw DesignError("time " + std::to_string(t + 1) + ": " + e.what(), e.columns());
    } catch (const ArgumentError& e) {
      rethrow_at(e, t);
    } catch (const StateError& e) {
      rethrow_at(e, t);
    } catch (const NumericalError& e) {
      rethrow_at(e, t);
    }
    for (Index i = 0; i < n; ++i) {
      out.completed.y(i, t) = rec.step2.completed.y(i);
      out.completed.observed(i, t) = true;
    }
    out.trace.insert(out.trace.end(), rec.step2.decisions.begin(), rec.step2.decisions.end());
    out.times.push_back(std::move(rec));
    done.push_back(t);
  }
  return out;
}

double success_rate(const PipelineResult& result, const Eigen::MatrixXi& truth) {
  const auto& c = result.completed;
  if (truth.rows() != c.units() || truth.cols() != c.times())
    throw ArgumentError("success_rate: truth grid shape differs from panel");
  if (result.trace.empty()) return std::numeric_limits<double>::quiet_NaN();
  Index hits = 0;
  for (const auto& d : result.trace) {
    // trace units are labels; map back through unit_ids when present
    Index row = d.unit;
    if (!c.unit_ids.empty()) {
      const auto it = std::find(c.unit_ids.begin(), c.unit_ids.end(), long(d.unit));
      row = Index(it - c.unit_ids.begin());
    }
    if (truth(row, d.time) == d.imputed) ++hits;
  }
  return double(hits) / double(result.trace.size());
}

}  // namespace zipem
