#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "zipem/sim_engine.hpp"

namespace zipem {

using Json = nlohmann::ordered_json;

/// Estimate, standard error, z and two-sided p per coefficient.
Json coefficient_table(const Eigen::VectorXd& estimate, const Eigen::VectorXd& se,
                       const std::vector<std::string>& names);

Json fit_report(const FitResult& fit, const std::vector<std::string>& x_names,
                const std::vector<std::string>& z_names);

/// Console table in the usual regression-summary layout, count part first.
void print_fit_table(std::ostream& out, const FitResult& fit, const std::vector<std::string>& x_names,
                     const std::vector<std::string>& z_names);

Json pipeline_report(const PipelineResult& result, std::optional<double> success = std::nullopt);

Json comparison_report(const ComparisonReport& report);

/// replicate,model,coefficient,estimate
std::string replicate_estimates_csv(const ComparisonReport& report);
/// replicate,loss_fraction,model,mae,success_rate
std::string replicate_metrics_csv(const ComparisonReport& report);

}  // namespace zipem
