#include "zipem/sim_engine.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numeric>
#include <thread>

#include "zipem/datasets.hpp"

namespace zipem {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

double mean_finite(const std::vector<double>& v) {
  double s = 0;
  int k = 0;
  for (double x : v)
    if (std::isfinite(x)) s += x, ++k;
  return k ? s / k : kNaN;
}

std::vector<std::string> packed_names(const PanelData& p) {
  std::vector<std::string> out;
  for (const auto& n : p.z_names) out.push_back("zero:" + n);
  for (const auto& n : p.x_names) out.push_back("count:" + n);
  return out;
}

}  // namespace

const char* to_string(CorrType c) { return c == CorrType::ar1 ? "ar1" : "exchangeable"; }

CorrType corr_type_from_string(const std::string& s) {
  if (s == "ar1") return CorrType::ar1;
  if (s == "exchangeable") return CorrType::exchangeable;
  throw ArgumentError("unknown correlation type '" + s + "' (expected ar1 or exchangeable)");
}

const char* to_string(Model m) {
  switch (m) {
    case Model::complete: return "complete";
    case Model::missing: return "missing";
    case Model::mode: return "mode";
    case Model::em: return "em";
  }
  return "";
}

void SimConfig::validate() const {
  if (!beta.allFinite()) throw ArgumentError("simulation: beta must be finite");
  if (!(pi_target >= 0.0 && pi_target < 1.0)) throw ArgumentError("simulation: pi must lie in [0, 1)");
  if (n_per_treatment < 1) throw ArgumentError("simulation: n must be >= 1");
  if (T < 1) throw ArgumentError("simulation: T must be >= 1");
  if (!(alpha >= 0.0 && alpha < 1.0)) throw ArgumentError("simulation: alpha must lie in [0, 1)");
  if (loss_fractions.empty()) throw ArgumentError("simulation: no loss fraction given");
  for (double l : loss_fractions)
    if (!(l >= 0.0 && l < 1.0)) throw ArgumentError("simulation: loss fraction must lie in [0, 1)");
  if (replicates < 1) throw ArgumentError("simulation: replicates must be >= 1");
  if (threads < 1) throw ArgumentError("simulation: threads must be >= 1");
  pipeline.validate();
}

Params SimConfig::truth() const {
  Params p;
  p.beta = beta;
  p.gamma = Eigen::VectorXd::Constant(1, pi_target > 0 ? std::log(pi_target / (1 - pi_target))
                                                       : -std::numeric_limits<double>::infinity());
  return p;
}

std::mt19937_64 replicate_rng(std::uint64_t seed, std::uint64_t replicate, std::uint64_t stream) {
  std::seed_seq seq{std::uint32_t(seed), std::uint32_t(seed >> 32), std::uint32_t(replicate),
                    std::uint32_t(replicate >> 32), std::uint32_t(stream)};
  return std::mt19937_64(seq);
}

Eigen::MatrixXd correlation_matrix(CorrType corr, double alpha, int T) {
  if (!(alpha >= 0.0 && alpha < 1.0)) throw ArgumentError("correlation_matrix: alpha must lie in [0, 1)");
  Eigen::MatrixXd r(T, T);
  for (int s = 0; s < T; ++s)
    for (int t = 0; t < T; ++t)
      r(s, t) = s == t ? 1.0 : corr == CorrType::ar1 ? std::pow(alpha, std::abs(s - t)) : alpha;
  return r;
}

int zip_quantile(double u, double pi, double lambda) {
  if (!(u >= 0.0 && u <= 1.0)) throw ArgumentError("zip_quantile: u must lie in [0, 1]");
  const CellParams<double> cell{pi, lambda};
  double cdf = zip_pmf(0, cell);
  const int cap = int(lambda + 40.0 * std::sqrt(lambda) + 50.0);
  int k = 0;
  while (cdf < u && k < cap) cdf += zip_pmf(++k, cell);
  return k;
}

SimulatedPanel simulate_panel(const SimConfig& config, std::mt19937_64& rng) {
  config.validate();
  const int n = 3 * config.n_per_treatment, T = config.T;
  Eigen::LLT<Eigen::MatrixXd> llt(correlation_matrix(config.corr, config.alpha, T));
  if (llt.info() != Eigen::Success) throw ArgumentError("simulate_panel: correlation matrix is not positive definite");
  const Eigen::MatrixXd L = llt.matrixL();

  std::vector<long> group(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) group[std::size_t(i)] = i / config.n_per_treatment + 1;
  std::normal_distribution<double> normal;
  Eigen::MatrixXi y(n, T);
  Eigen::VectorXd e(T);
  for (int i = 0; i < n; ++i) {
    for (int t = 0; t < T; ++t) e(t) = normal(rng);
    const Eigen::VectorXd z = L * e;
    const long g = group[std::size_t(i)];
    for (int t = 0; t < T; ++t) {
      const double eta = config.beta(0) + config.beta(1) * (g == 2) + config.beta(2) * (g == 3) +
                         config.beta(3) * (t + 1);
      y(i, t) = zip_quantile(normal_cdf(z(t)), config.pi_target, std::exp(clamp_predictor(eta)));
    }
  }
  SimulatedPanel out;
  out.truth = y;
  out.panel = treatment_panel(y, BoolGrid::Constant(n, T, true), group, {true, false});
  return out;
}

PanelData delete_mcar(const PanelData& panel, double loss_fraction, std::mt19937_64& rng) {
  if (!(loss_fraction >= 0.0 && loss_fraction < 1.0))
    throw ArgumentError("delete_mcar: loss fraction must lie in [0, 1)");
  const Index n = panel.units(), T = panel.times(), cells = n * T;
  const Index m = Index(std::floor(loss_fraction * double(cells) + 1e-9));
  std::vector<Index> idx(static_cast<std::size_t>(cells));
  std::iota(idx.begin(), idx.end(), Index(0));
  for (Index k = 0; k < m; ++k) {
    std::uniform_int_distribution<Index> pick(k, cells - 1);
    std::swap(idx[std::size_t(k)], idx[std::size_t(pick(rng))]);
  }
  PanelData out = panel;
  for (Index k = 0; k < m; ++k) {
    const Index c = idx[std::size_t(k)];
    out.observed(c / T, c % T) = false;
    out.y(c / T, c % T) = 0;
  }
  return out;
}

ModeFill mode_fill(const PanelData& damaged) {
  ModeFill out{damaged, 0};
  for (Index i = 0; i < damaged.units(); ++i) {
    std::vector<int> seen;
    for (Index t = 0; t < damaged.times(); ++t)
      if (damaged.observed(i, t)) seen.push_back(damaged.y(i, t));
    int fill = 0;
    if (seen.empty()) {
      if (damaged.times() > 0) ++out.empty_units;
    } else {
      std::sort(seen.begin(), seen.end());
      std::size_t best = 0;
      for (std::size_t a = 0; a < seen.size();) {
        std::size_t b = a;
        while (b < seen.size() && seen[b] == seen[a]) ++b;
        if (b - a > best) best = b - a, fill = seen[a];
        a = b;
      }
    }
    for (Index t = 0; t < damaged.times(); ++t) {
      if (damaged.observed(i, t)) continue;
      out.completed.y(i, t) = fill;
      out.completed.observed(i, t) = true;
    }
  }
  return out;
}

FitResult fit_pooled(const PanelData& panel, const FitControl& ctrl) {
  const Slice s = complete_cases(panel.pooled_slice());
  if (s.rows() == 0) throw StateError("fit_pooled: no observed responses");
  return fit_scoring(s, initial_params(s), ctrl);
}

ReplicateRecord run_replicate(const PanelData& full, double loss_fraction, const PipelineConfig& pipeline,
                              std::mt19937_64& rng, int replicate) {
  ReplicateRecord rec;
  rec.replicate = replicate;
  rec.loss_fraction = loss_fraction;
  rec.mae_em = rec.mae_mode = rec.success_em = rec.success_mode = kNaN;

  auto record_fit = [&](Model m, auto&& make_panel) {
    const auto k = std::size_t(m);
    try {
      const FitResult f = fit_pooled(make_panel(), pipeline.ctrl);
      rec.estimate[k] = f.params.packed();
      rec.ok[k] = f.params.all_finite();
      if (!rec.ok[k]) rec.error[k] = "non-finite estimate";
    } catch (const std::exception& e) {
      rec.error[k] = e.what();
    }
  };

  const PanelData damaged = delete_mcar(full, loss_fraction, rng);
  rec.deleted = int(damaged.missing_count());
  record_fit(Model::complete, [&] { return full; });
  record_fit(Model::missing, [&] { return damaged; });

  const ModeFill mode = mode_fill(damaged);
  rec.empty_units = mode.empty_units;
  record_fit(Model::mode, [&] { return mode.completed; });

  std::optional<PipelineResult> em;
  try {
    em = run_pipeline(damaged, pipeline);
    if (!em->skipped_times.empty())
      throw StateError("time " + std::to_string(em->skipped_times.front() + 1) + " has no observed responses");
  } catch (const std::exception& e) {
    em.reset();
    rec.error[std::size_t(Model::em)] = e.what();
  }
  if (em) record_fit(Model::em, [&] { return em->completed; });

  if (rec.deleted > 0) {
    double abs_mode = 0, abs_em = 0;
    int hit_mode = 0, hit_em = 0;
    for (Index i = 0; i < full.units(); ++i) {
      for (Index t = 0; t < full.times(); ++t) {
        if (damaged.observed(i, t)) continue;
        const int truth = full.y(i, t);
        abs_mode += std::abs(mode.completed.y(i, t) - truth);
        hit_mode += mode.completed.y(i, t) == truth;
        if (em) {
          abs_em += std::abs(em->completed.y(i, t) - truth);
          hit_em += em->completed.y(i, t) == truth;
        }
      }
    }
    rec.mae_mode = abs_mode / rec.deleted;
    rec.success_mode = double(hit_mode) / rec.deleted;
    if (em) {
      rec.mae_em = abs_em / rec.deleted;
      rec.success_em = double(hit_em) / rec.deleted;
    }
  }
  return rec;
}

double quantile(std::vector<double> values, double p) {
  if (values.empty()) return kNaN;
  if (!(p >= 0.0 && p <= 1.0)) throw ArgumentError("quantile: p must lie in [0, 1]");
  std::sort(values.begin(), values.end());
  const double h = double(values.size() - 1) * p;
  const auto lo = std::size_t(std::floor(h));
  const auto hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - double(lo)) * (values[hi] - values[lo]);
}

ComparisonReport summarize(std::vector<ReplicateRecord> records, const Eigen::VectorXd& truth,
                           std::vector<std::string> names) {
  ComparisonReport rep;
  rep.names = std::move(names);
  rep.truth = truth;
  rep.replicates = int(records.size());
  const Index p = truth.size();
  for (Model m : kModels) {
    const auto k = std::size_t(m);
    ModelSummary& s = rep.models[k];
    s.mean = s.bias = s.lower = s.upper = Eigen::VectorXd::Constant(p, kNaN);
    std::vector<std::vector<double>> cols(static_cast<std::size_t>(p));
    for (const auto& r : records) {
      if (!r.ok[k] || r.estimate[k].size() != p) {
        ++s.failed;
        continue;
      }
      ++s.used;
      for (Index j = 0; j < p; ++j) cols[std::size_t(j)].push_back(r.estimate[k](j));
    }
    if (s.used == 0) continue;
    for (Index j = 0; j < p; ++j) {
      const auto& c = cols[std::size_t(j)];
      s.mean(j) = std::accumulate(c.begin(), c.end(), 0.0) / double(c.size());
      s.bias(j) = s.mean(j) - truth(j);
      s.lower(j) = quantile(c, 0.025);
      s.upper(j) = quantile(c, 0.975);
    }
  }
  // MAE and success are paired: only replicates where both fills exist
  std::vector<double> me, mm, se, sm;
  for (const auto& r : records) {
    if (!std::isfinite(r.mae_em) || !std::isfinite(r.mae_mode)) continue;
    me.push_back(r.mae_em);
    mm.push_back(r.mae_mode);
    se.push_back(r.success_em);
    sm.push_back(r.success_mode);
  }
  rep.mae_em = mean_finite(me);
  rep.mae_mode = mean_finite(mm);
  rep.success_em = mean_finite(se);
  rep.success_mode = mean_finite(sm);
  rep.records = std::move(records);
  return rep;
}

void parallel_for(int count, int threads, const std::function<void(int)>& body) {
  const int workers = std::max(1, std::min(threads, count));
  if (workers == 1) {
    for (int i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (int i = next++; i < count; i = next++) body(i);
      } catch (...) {
        errors[std::size_t(w)] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

ComparisonReport run_comparison(const SimConfig& config) {
  config.validate();
  std::vector<ReplicateRecord> records(std::size_t(config.replicates));
  std::vector<std::string> names;
  parallel_for(config.replicates, config.threads, [&](int r) {
    auto rng = replicate_rng(config.seed, std::uint64_t(r));
    const SimulatedPanel sim = simulate_panel(config, rng);
    const double loss = config.loss_fractions[std::size_t(r) % config.loss_fractions.size()];
    records[std::size_t(r)] = run_replicate(sim.panel, loss, config.pipeline, rng, r);
  });
  SimConfig probe = config;
  probe.n_per_treatment = 1;
  auto rng = replicate_rng(config.seed, 0);
  names = packed_names(simulate_panel(probe, rng).panel);
  return summarize(std::move(records), config.truth().packed(), std::move(names));
}

CornBenchReport run_corn_bench(const CornBenchConfig& config) {
  config.pipeline.validate();
  if (config.replicates < 1) throw ArgumentError("bench: replicates must be >= 1");
  if (config.losses.empty()) throw ArgumentError("bench: no loss levels given");
  for (double l : config.losses)
    if (!(l >= 0.0 && l < 1.0)) throw ArgumentError("bench: loss fraction must lie in [0, 1)");
  const PanelData corn = corn_panel();
  CornBenchReport out;
  out.full_fit = fit_pooled(corn, config.pipeline.ctrl);
  for (std::size_t level = 0; level < config.losses.size(); ++level) {
    const double loss = config.losses[level];
    std::vector<ReplicateRecord> records(std::size_t(config.replicates));
    parallel_for(config.replicates, config.threads, [&](int r) {
      auto rng = replicate_rng(config.seed, std::uint64_t(r), level + 1);
      records[std::size_t(r)] = run_replicate(corn, loss, config.pipeline, rng, r);
    });
    out.levels.push_back(
        {loss, summarize(std::move(records), out.full_fit.params.packed(), packed_names(corn))});
  }
  return out;
}

}  // namespace zipem
