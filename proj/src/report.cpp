#include "zipem/report.hpp"

#include <cmath>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "zipem/csv.hpp"
#include "zipem/panel_io.hpp"

namespace zipem {

namespace {

// JSON has no NaN; missing numbers become null.
Json number(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

}  // namespace

Json coefficient_table(const Eigen::VectorXd& estimate, const Eigen::VectorXd& se,
                       const std::vector<std::string>& names) {
  Json rows = Json::array();
  for (Index j = 0; j < estimate.size(); ++j) {
    const double s = j < se.size() ? se(j) : std::nan("");
    const double z = estimate(j) / s;
    rows.push_back({{"name", j < Index(names.size()) ? names[std::size_t(j)] : "b" + std::to_string(j)},
                    {"estimate", number(estimate(j))},
                    {"std_error", number(s)},
                    {"z", number(z)},
                    {"p", number(std::isfinite(z) ? normal_p_value(z) : std::nan(""))}});
  }
  return rows;
}

Json fit_report(const FitResult& fit, const std::vector<std::string>& x_names,
                const std::vector<std::string>& z_names) {
  const Index p1 = fit.params.gamma.size(), p2 = fit.params.beta.size();
  Eigen::VectorXd se = fit.std_errors.size() == p1 + p2 ? fit.std_errors
                                                         : Eigen::VectorXd::Constant(p1 + p2, std::nan(""));
  Json j;
  j["converged"] = fit.converged;
  j["iterations"] = fit.iterations;
  j["loglik"] = number(fit.loglik);
  j["separation_flag"] = fit.separation_flag;
  j["message"] = fit.message;
  j["count_part"] = coefficient_table(fit.params.beta, se.tail(p2), x_names);
  j["zero_part"] = coefficient_table(fit.params.gamma, se.head(p1), z_names);
  return j;
}

void print_fit_table(std::ostream& out, const FitResult& fit, const std::vector<std::string>& x_names,
                     const std::vector<std::string>& z_names) {
  const Json j = fit_report(fit, x_names, z_names);
  auto cell = [](const Json& v, int prec) {
    if (v.is_null()) return std::string("NA");
    std::ostringstream s;
    s << std::fixed << std::setprecision(prec) << v.get<double>();
    return s.str();
  };
  auto block = [&](const char* title, const Json& rows) {
    out << title << "\n";
    out << std::left << std::setw(14) << "" << std::right << std::setw(12) << "Estimate" << std::setw(12)
        << "Std. Error" << std::setw(10) << "z value" << std::setw(10) << "Pr(>|z|)" << "\n";
    for (const auto& r : rows)
      out << std::left << std::setw(14) << r["name"].get<std::string>() << std::right << std::setw(12)
          << cell(r["estimate"], 3) << std::setw(12) << cell(r["std_error"], 3) << std::setw(10)
          << cell(r["z"], 3) << std::setw(10) << cell(r["p"], 3) << "\n";
  };
  block("Count model (log link)", j["count_part"]);
  out << "\n";
  block("Zero-inflation model (logit link)", j["zero_part"]);
  out << "\nlog-likelihood " << cell(j["loglik"], 3) << ", " << fit.iterations << " iterations"
      << (fit.converged ? "" : ", not converged (" + fit.message + ")") << "\n";
  if (fit.separation_flag) out << "warning: zero-part separation, coefficients diverge\n";
}

Json pipeline_report(const PipelineResult& result, std::optional<double> success) {
  Json times = Json::array();
  for (const auto& rec : result.times) {
    Json t;
    t["time"] = time_label(result.completed, rec.time);
    t["skipped"] = rec.skipped;
    if (rec.skipped) {
      t["note"] = rec.note;
      times.push_back(std::move(t));
      continue;
    }
    t["prior_covariate"] = to_string(rec.spec.prior);
    t["variance_explained"] = number(rec.spec.variance_explained);
    Json dropped = Json::array();
    for (const auto& d : rec.spec.dropped) dropped.push_back({{"column", d.name}, {"reason", d.reason}});
    t["dropped_columns"] = dropped;
    t["step1"] = fit_report(rec.step1.fit, rec.spec.x_names, rec.spec.z_names);
    t["step2"] = {{"cycles", rec.step2.cycles},
                  {"stable", rec.step2.stable},
                  {"imputed_cells", rec.step2.decisions.size()},
                  {"refit", fit_report(rec.step2.refit, rec.spec.x_names, rec.spec.z_names)}};
    times.push_back(std::move(t));
  }
  Json j;
  j["units"] = result.completed.units();
  j["times"] = result.completed.times();
  j["imputed_cells"] = result.trace.size();
  Json skipped = Json::array();
  for (Index t : result.skipped_times) skipped.push_back(time_label(result.completed, t));
  j["skipped_times"] = skipped;
  if (success) j["success_rate"] = number(*success);
  j["per_time"] = times;
  return j;
}

Json comparison_report(const ComparisonReport& report) {
  Json j;
  j["replicates"] = report.replicates;
  j["mae"] = {{"em", number(report.mae_em)}, {"mode", number(report.mae_mode)}};
  j["success_rate"] = {{"em", number(report.success_em)}, {"mode", number(report.success_mode)}};
  Json models;
  for (Model m : kModels) {
    const auto& s = report.models[std::size_t(m)];
    Json coefs = Json::array();
    for (Index k = 0; k < report.truth.size(); ++k)
      coefs.push_back({{"name", report.names[std::size_t(k)]},
                       {"truth", number(report.truth(k))},
                       {"mean", number(s.mean(k))},
                       {"bias", number(s.bias(k))},
                       {"lower", number(s.lower(k))},
                       {"upper", number(s.upper(k))}});
    models[to_string(m)] = {{"used", s.used}, {"failed", s.failed}, {"coefficients", coefs}};
  }
  j["models"] = models;
  return j;
}

std::string replicate_estimates_csv(const ComparisonReport& report) {
  std::ostringstream out;
  write_csv_row(out, {"replicate", "model", "coefficient", "estimate"});
  for (const auto& r : report.records)
    for (Model m : kModels) {
      const auto k = std::size_t(m);
      if (!r.ok[k]) continue;
      for (Index c = 0; c < r.estimate[k].size(); ++c)
        write_csv_row(out, {std::to_string(r.replicate), to_string(m), report.names[std::size_t(c)],
                            format_double(r.estimate[k](c))});
    }
  return out.str();
}

std::string replicate_metrics_csv(const ComparisonReport& report) {
  std::ostringstream out;
  write_csv_row(out, {"replicate", "loss_fraction", "model", "mae", "success_rate"});
  auto text = [](double v) { return std::isfinite(v) ? format_double(v) : std::string(); };
  for (const auto& r : report.records) {
    write_csv_row(out, {std::to_string(r.replicate), format_double(r.loss_fraction), "em", text(r.mae_em),
                        text(r.success_em)});
    write_csv_row(out, {std::to_string(r.replicate), format_double(r.loss_fraction), "mode",
                        text(r.mae_mode), text(r.success_mode)});
  }
  return out.str();
}

}  // namespace zipem
