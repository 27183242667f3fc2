#pragma once

// Monte-Carlo comparison of missing-data strategies for longitudinal ZIP
// panels: correlated panels from a Gaussian copula, MCAR deletion, and four
// fitted models (complete, complete-case, mode-filled, EM-imputed).

#include <array>
#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "zipem/sequential_pipeline.hpp"

namespace zipem {

enum class CorrType { ar1, exchangeable };

const char* to_string(CorrType c);
CorrType corr_type_from_string(const std::string& s);

struct SimConfig {
  Eigen::Vector4d beta{1.0, -0.5, 0.5, 0.1};  // intercept, treatment B, treatment C, time
  double pi_target = 0.4;
  int n_per_treatment = 10;
  int T = 5;
  CorrType corr = CorrType::ar1;
  double alpha = 0.5;
  // Replicate r deletes loss_fractions[r % size] of the cells.
  std::vector<double> loss_fractions{0.2};
  int replicates = 200;
  std::uint64_t seed = 1;
  int threads = 1;
  PipelineConfig pipeline;

  void validate() const;
  /// Generating coefficients in the analysis layout: gamma = (logit pi),
  /// beta as above.
  Params truth() const;
};

/// Per-replicate generator seeded from (seed, replicate, stream).
std::mt19937_64 replicate_rng(std::uint64_t seed, std::uint64_t replicate, std::uint64_t stream = 0);

/// R(alpha): AR(1) alpha^|t-s| or exchangeable alpha off the diagonal.
Eigen::MatrixXd correlation_matrix(CorrType corr, double alpha, int T);

/// Smallest k with F(k) >= u under ZIP(pi, lambda).
int zip_quantile(double u, double pi, double lambda);

struct SimulatedPanel {
  PanelData panel;        // fully observed; X = [1, x1, x2, t], Z = [1]
  Eigen::MatrixXi truth;  // same as panel.y
};

SimulatedPanel simulate_panel(const SimConfig& config, std::mt19937_64& rng);

/// Blanks floor(loss_fraction * n * T) cells chosen uniformly without replacement.
PanelData delete_mcar(const PanelData& panel, double loss_fraction, std::mt19937_64& rng);

struct ModeFill {
  PanelData completed;
  int empty_units = 0;  // units with no observed response, filled with 0
};

/// Each missing cell gets its unit's most frequent observed value, ties to
/// the smallest.
ModeFill mode_fill(const PanelData& damaged);

/// Pooled ZIP fit on the observed cells of a panel.
FitResult fit_pooled(const PanelData& panel, const FitControl& ctrl = {});

enum class Model { complete = 0, missing = 1, mode = 2, em = 3 };
inline constexpr std::array<Model, 4> kModels{Model::complete, Model::missing, Model::mode, Model::em};
const char* to_string(Model m);

struct ReplicateRecord {
  int replicate = 0;
  double loss_fraction = 0;
  int deleted = 0;
  std::array<bool, 4> ok{};              // fit finished with finite estimates
  std::array<Eigen::VectorXd, 4> estimate;  // packed (gamma, beta)
  std::array<std::string, 4> error;
  double mae_em = 0, mae_mode = 0;         // NaN when nothing was deleted
  double success_em = 0, success_mode = 0;
  int empty_units = 0;
};

struct ModelSummary {
  Eigen::VectorXd mean;   // mean estimate over successful replicates
  Eigen::VectorXd bias;   // mean - truth
  Eigen::VectorXd lower;  // 2.5% percentile
  Eigen::VectorXd upper;  // 97.5% percentile
  int used = 0;
  int failed = 0;
};

struct ComparisonReport {
  std::vector<std::string> names;  // coefficient names in packed order
  Eigen::VectorXd truth;
  std::array<ModelSummary, 4> models;
  double mae_em = 0, mae_mode = 0;
  double success_em = 0, success_mode = 0;
  int replicates = 0;
  std::vector<ReplicateRecord> records;
};

/// Type-7 sample quantile.
double quantile(std::vector<double> values, double p);

/// Summaries from replicate records against `truth`.
ComparisonReport summarize(std::vector<ReplicateRecord> records, const Eigen::VectorXd& truth,
                           std::vector<std::string> names);

/// Runs one replicate of the comparison on a fully observed panel.
ReplicateRecord run_replicate(const PanelData& full, double loss_fraction, const PipelineConfig& pipeline,
                              std::mt19937_64& rng, int replicate);

ComparisonReport run_comparison(const SimConfig& config);

struct CornBenchConfig {
  std::vector<double> losses{0.2, 0.3, 0.4, 0.5};
  int replicates = 100;
  std::uint64_t seed = 7;
  int threads = 1;
  PipelineConfig pipeline;
};

struct CornBenchLevel {
  double loss = 0;
  ComparisonReport report;  // truth is the full-data fit
};

struct CornBenchReport {
  FitResult full_fit;
  std::vector<CornBenchLevel> levels;
};

CornBenchReport run_corn_bench(const CornBenchConfig& config);

/// Calls body(i) for i in [0, count) on up to `threads` workers.
void parallel_for(int count, int threads, const std::function<void(int)>& body);

}  // namespace zipem
