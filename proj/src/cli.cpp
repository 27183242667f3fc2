#include "zipem/cli.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <functional>
#include <iostream>
#include <iomanip>
#include <map>
#include <memory>

#include "zipem/csv.hpp"
#include "zipem/datasets.hpp"
#include "zipem/panel_io.hpp"
#include "zipem/report.hpp"

namespace zipem {

namespace {

namespace fs = std::filesystem;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Every configurable option registers a getter so the resolved configuration
// can be written back with the same keys the command line accepts.
struct Registry {
  std::vector<std::pair<std::string, std::function<Json()>>> fields;

  template <typename T>
  CLI::Option* option(CLI::App* app, const std::string& name, T& var, const std::string& help) {
    fields.emplace_back(name, [&var] { return Json(var); });
    return app->add_option("--" + name, var, help)->capture_default_str();
  }

  CLI::Option* flag(CLI::App* app, const std::string& name, bool& var, const std::string& help) {
    fields.emplace_back(name, [&var] { return Json(var); });
    return app->add_flag("--" + name + ",!--no-" + name, var, help)->capture_default_str();
  }
};

struct FitOptions {
  std::string input;
  std::string format = "auto";
  bool time_trend = true;
  bool zero_part_covariates = true;
  double tol = 1e-6;
  int max_iter = 100;
  std::string output;
};

struct ImputeOptions {
  std::string input;
  std::string format = "auto";
  std::string output;
  std::string truth;
  double p0 = 0.5;
  int n_components = 1;
  int max_cycles = 5;
  int min_prior_support = 2;
  bool zero_part_same = true;
  bool time_trend = true;
  double tol = 1e-6;
  int max_iter = 100;
};

struct SimulateOptions {
  double pi = 0.4;
  double alpha = 0.5;
  int n = 10;
  int T = 5;
  std::string corr = "ar1";
  std::vector<double> beta{1.0, -0.5, 0.5, 0.1};
  std::vector<double> loss{0.2};
  int replicates = 200;
  std::uint64_t seed = 1;
  int threads = 1;
  double p0 = 0.5;
  std::string output;
};

struct BenchOptions {
  std::vector<double> loss{0.2, 0.3, 0.4, 0.5};
  int replicates = 100;
  std::uint64_t seed = 7;
  int threads = 1;
  double p0 = 0.5;
  std::string output;
};

struct Program {
  CLI::App app{"Zero-inflated Poisson longitudinal imputation"};
  std::map<std::string, Registry> registry;
  std::map<std::string, std::string> config_path;
  FitOptions fit;
  ImputeOptions impute;
  SimulateOptions sim;
  BenchOptions bench;

  Program() {
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all", "Show help for every subcommand");

    auto* f = app.add_subcommand("fit", "Fit a pooled ZIP model to a complete panel and print the coefficient table");
    auto& rf = registry["fit"];
    rf.option(f, "input", fit.input, "Panel file (wide We1..WeT,Treat or long unit,time,y,...)");
    rf.option(f, "format", fit.format, "auto, wide or long")->check(CLI::IsMember({"auto", "wide", "long"}));
    rf.flag(f, "time-trend", fit.time_trend, "Include a linear time column");
    rf.flag(f, "zero-part-covariates", fit.zero_part_covariates,
            "Use the count-part covariates in the zero part (else intercept only)");
    rf.option(f, "tol", fit.tol, "Convergence tolerance")->check(CLI::PositiveNumber);
    rf.option(f, "max-iter", fit.max_iter, "Iteration limit")->check(CLI::PositiveNumber);
    rf.option(f, "output", fit.output, "Directory for fit.json (optional)");
    add_config(f, "fit");

    auto* i = app.add_subcommand("impute", "Impute missing responses time by time");
    auto& ri = registry["impute"];
    ri.option(i, "input", impute.input, "Panel file with blank missing responses");
    ri.option(i, "format", impute.format, "auto, wide or long")->check(CLI::IsMember({"auto", "wide", "long"}));
    ri.option(i, "output", impute.output, "Output directory");
    ri.option(i, "truth", impute.truth, "Complete panel to score the imputations against (optional)");
    ri.option(i, "p0", impute.p0, "Impute 0 when the zero probability exceeds this")->check(CLI::Range(0.0, 1.0));
    ri.option(i, "n-components", impute.n_components, "Principal components of prior responses")
        ->check(CLI::PositiveNumber);
    ri.option(i, "max-cycles", impute.max_cycles, "Refit and re-impute cycles per time")->check(CLI::PositiveNumber);
    ri.option(i, "min-prior-support", impute.min_prior_support,
              "Prior response columns need this many values off their mode")
        ->check(CLI::NonNegativeNumber);
    ri.flag(i, "zero-part-same", impute.zero_part_same, "Zero part uses the count-part design");
    ri.flag(i, "time-trend", impute.time_trend, "Include a linear time column in the base design");
    ri.option(i, "tol", impute.tol, "Convergence tolerance")->check(CLI::PositiveNumber);
    ri.option(i, "max-iter", impute.max_iter, "Iteration limit")->check(CLI::PositiveNumber);
    add_config(i, "impute");

    auto* s = app.add_subcommand("simulate", "Monte-Carlo comparison of complete, complete-case, mode and EM models");
    auto& rs = registry["simulate"];
    rs.option(s, "pi", sim.pi, "Zero-inflation probability")->check(CLI::Range(0.0, 0.999999));
    rs.option(s, "alpha", sim.alpha, "Within-unit correlation")->check(CLI::Range(0.0, 0.999999));
    rs.option(s, "n", sim.n, "Units per treatment")->check(CLI::PositiveNumber);
    rs.option(s, "T", sim.T, "Number of times")->check(CLI::PositiveNumber);
    rs.option(s, "corr", sim.corr, "ar1 or exchangeable")->check(CLI::IsMember({"ar1", "exchangeable"}));
    rs.option(s, "beta", sim.beta, "Count coefficients: intercept, B, C, time")->expected(4)->delimiter(',');
    rs.option(s, "loss", sim.loss, "Loss fractions, cycled over replicates")->delimiter(',');
    rs.option(s, "replicates", sim.replicates, "Replicates")->check(CLI::PositiveNumber);
    rs.option(s, "seed", sim.seed, "Random seed");
    rs.option(s, "threads", sim.threads, "Worker threads")->check(CLI::PositiveNumber);
    rs.option(s, "p0", sim.p0, "Imputation threshold")->check(CLI::Range(0.0, 1.0));
    rs.option(s, "output", sim.output, "Output directory");
    add_config(s, "simulate");

    auto* b = app.add_subcommand("bench-corn", "Repeated random deletion on the bundled corn data");
    auto& rb = registry["bench-corn"];
    rb.option(b, "loss", bench.loss, "Loss fractions")->delimiter(',');
    rb.option(b, "replicates", bench.replicates, "Replicates per loss level")->check(CLI::PositiveNumber);
    rb.option(b, "seed", bench.seed, "Random seed");
    rb.option(b, "threads", bench.threads, "Worker threads")->check(CLI::PositiveNumber);
    rb.option(b, "p0", bench.p0, "Imputation threshold")->check(CLI::Range(0.0, 1.0));
    rb.option(b, "output", bench.output, "Output directory (optional)");
    add_config(b, "bench-corn");
  }

  void add_config(CLI::App* sub, const std::string& name) {
    sub->add_option("--config", config_path[name], "JSON file of option values; explicit flags win");
  }

  Json resolved(const std::string& command) const {
    Json j;
    j["command"] = command;
    for (const auto& [key, get] : registry.at(command).fields) j[key] = get();
    return j;
  }
};

std::vector<std::string> reversed_tail(const std::vector<std::string>& args) {
  return {args.rbegin(), args.rend() - (args.empty() ? 0 : 1)};
}

std::string config_value(const Json& v, const std::string& key) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  if (v.is_number()) return v.dump();
  if (v.is_array()) {
    std::string out;
    for (const auto& e : v) {
      if (!e.is_number() && !e.is_string()) throw UsageError("config key '" + key + "': unsupported array entry");
      out += (out.empty() ? "" : ",") + (e.is_string() ? e.get<std::string>() : e.dump());
    }
    return out;
  }
  throw UsageError("config key '" + key + "': unsupported value type");
}

// Options named in the config file that the command line left unset.
std::vector<std::string> config_arguments(const Program& first, const std::string& command,
                                          const CLI::App* sub) {
  const std::string& path = first.config_path.at(command);
  if (path.empty()) return {};
  Json cfg;
  try {
    cfg = Json::parse(read_file(path));
  } catch (const Json::exception& e) {
    throw UsageError("config file '" + path + "' is not valid JSON: " + e.what());
  }
  if (!cfg.is_object()) throw UsageError("config file '" + path + "' must hold a JSON object");
  std::vector<std::string> extra;
  for (const auto& [key, value] : cfg.items()) {
    if (key == "command") {
      if (value != command) throw UsageError("config file is for command '" + value.dump() + "'");
      continue;
    }
    const auto& fields = first.registry.at(command).fields;
    const bool known = std::any_of(fields.begin(), fields.end(), [&](const auto& f) { return f.first == key; });
    if (!known) throw UsageError("unknown configuration key '" + key + "' for " + command);
    if (sub->get_option("--" + key)->count() > 0) continue;
    if (value.is_string() && value.get<std::string>().empty()) continue;  // unset path
    extra.push_back("--" + key + "=" + config_value(value, key));
  }
  return extra;
}

FitControl control(double tol, int max_iter) {
  FitControl c;
  c.tol = tol;
  c.max_iter = max_iter;
  return c;
}

void write_outputs(const std::string& dir, const Json& resolved,
                   const std::vector<std::pair<std::string, std::string>>& files) {
  fs::create_directories(dir);
  for (const auto& [name, content] : files) write_file((fs::path(dir) / name).string(), content);
  write_file((fs::path(dir) / "resolved_config.json").string(), resolved.dump(2) + "\n");
}

int run_fit(const Program& p, std::ostream& out) {
  const auto& o = p.fit;
  if (o.input.empty()) throw UsageError("fit: --input is required");
  const PanelData panel = read_panel(o.input, panel_format_from_string(o.format),
                                     {o.time_trend, o.zero_part_covariates});
  if (panel.missing_count() > 0)
    throw StateError("fit: the panel has " + std::to_string(panel.missing_count()) +
                     " missing responses; run impute first");
  const FitResult f = fit_pooled(panel, control(o.tol, o.max_iter));
  print_fit_table(out, f, panel.x_names, panel.z_names);
  if (!o.output.empty())
    write_outputs(o.output, p.resolved("fit"), {{"fit.json", fit_report(f, panel.x_names, panel.z_names).dump(2) + "\n"}});
  return 0;
}

int run_impute(const Program& p, std::ostream& out) {
  const auto& o = p.impute;
  if (o.input.empty() || o.output.empty()) throw UsageError("impute: --input and --output are required");
  const std::string text = read_file(o.input);
  PanelFormat format = panel_format_from_string(o.format);
  if (format == PanelFormat::automatic) format = detect_format(text);
  const TreatmentDesign design{o.time_trend, true};
  const PanelData panel = read_panel_text(text, format, design);

  PipelineConfig cfg;
  cfg.p0 = o.p0;
  cfg.ctrl = control(o.tol, o.max_iter);
  cfg.n_components = o.n_components;
  cfg.max_refit_cycles = o.max_cycles;
  cfg.min_prior_support = o.min_prior_support;
  cfg.zero_part_same_as_poisson = o.zero_part_same;
  const PipelineResult result = run_pipeline(panel, cfg);

  std::optional<double> success;
  if (!o.truth.empty()) {
    const PanelData truth = read_panel(o.truth, format, design);
    if (truth.missing_count() > 0) throw ArgumentError("impute: --truth panel has missing responses");
    success = success_rate(result, truth.y);
  }
  const std::string completed = format == PanelFormat::long_ ? write_long(result.completed) : write_wide(result.completed);
  write_outputs(o.output, p.resolved("impute"),
                {{"completed.csv", completed},
                 {"trace.csv", write_trace(result.completed, result.trace)},
                 {"report.json", pipeline_report(result, success).dump(2) + "\n"}});
  out << "imputed " << result.trace.size() << " cells over " << panel.times() << " times";
  if (!result.skipped_times.empty()) out << " (" << result.skipped_times.size() << " times skipped)";
  if (success) out << "; success rate " << *success;
  out << "\n";
  return 0;
}

int run_simulate(const Program& p, std::ostream& out) {
  const auto& o = p.sim;
  if (o.output.empty()) throw UsageError("simulate: --output is required");
  SimConfig c;
  c.beta = Eigen::Vector4d(o.beta[0], o.beta[1], o.beta[2], o.beta[3]);
  c.pi_target = o.pi;
  c.alpha = o.alpha;
  c.n_per_treatment = o.n;
  c.T = o.T;
  c.corr = corr_type_from_string(o.corr);
  c.loss_fractions = o.loss;
  c.replicates = o.replicates;
  c.seed = o.seed;
  c.threads = o.threads;
  c.pipeline.p0 = o.p0;
  const ComparisonReport r = run_comparison(c);

  std::ostringstream plot;
  write_csv_row(plot, {"pi", "alpha", "n", "model", "metric", "value"});
  const std::string pi = format_double(o.pi), al = format_double(o.alpha), n = std::to_string(o.n);
  auto text = [](double v) { return std::isfinite(v) ? format_double(v) : std::string(); };
  write_csv_row(plot, {pi, al, n, "em", "mae", text(r.mae_em)});
  write_csv_row(plot, {pi, al, n, "mode", "mae", text(r.mae_mode)});
  for (Model m : kModels) {
    const auto& s = r.models[std::size_t(m)];
    write_csv_row(plot, {pi, al, n, to_string(m), "bias_beta0", text(s.bias(1))});
    write_csv_row(plot, {pi, al, n, to_string(m), "bias_gamma0", text(s.bias(0))});
  }
  write_outputs(o.output, p.resolved("simulate"),
                {{"replicate_estimates.csv", replicate_estimates_csv(r)},
                 {"replicate_metrics.csv", replicate_metrics_csv(r)},
                 {"plot.csv", plot.str()},
                 {"report.json", comparison_report(r).dump(2) + "\n"}});
  out << "replicates " << r.replicates << ": MAE em " << r.mae_em << ", mode " << r.mae_mode << "\n";
  return 0;
}

int run_bench(const Program& p, std::ostream& out) {
  const auto& o = p.bench;
  CornBenchConfig c;
  c.losses = o.loss;
  c.replicates = o.replicates;
  c.seed = o.seed;
  c.threads = o.threads;
  c.pipeline.p0 = o.p0;
  const CornBenchReport r = run_corn_bench(c);

  std::ostringstream pc2, two;
  write_csv_row(pc2, {"loss", "coefficient", "mean", "lower", "upper", "full_data"});
  write_csv_row(two, {"loss", "success_rate"});
  Json levels = Json::array();
  out << "loss  success\n";
  for (const auto& l : r.levels) {
    const auto& em = l.report.models[std::size_t(Model::em)];
    for (Index k = 0; k < l.report.truth.size(); ++k)
      write_csv_row(pc2, {format_double(l.loss), l.report.names[std::size_t(k)], format_double(em.mean(k)),
                          format_double(em.lower(k)), format_double(em.upper(k)),
                          format_double(l.report.truth(k))});
    write_csv_row(two, {format_double(l.loss), format_double(l.report.success_em)});
    out << std::fixed << std::setprecision(2) << l.loss << "  " << 100.0 * l.report.success_em << "%\n"
        << std::defaultfloat;
    Json lj = comparison_report(l.report);
    lj["loss"] = l.loss;
    levels.push_back(std::move(lj));
  }
  if (!o.output.empty()) {
    const auto& names = corn_panel().x_names;
    Json j;
    j["full_data"] = fit_report(r.full_fit, names, names);
    j["levels"] = levels;
    write_outputs(o.output, p.resolved("bench-corn"),
                  {{"table_pc2.csv", pc2.str()}, {"table_two.csv", two.str()}, {"report.json", j.dump(2) + "\n"}});
  }
  return 0;
}

}  // namespace

int cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  auto first = std::make_unique<Program>();
  std::string command;
  std::vector<std::string> extra;
  try {
    first->app.parse(reversed_tail(args));
    command = first->app.get_subcommands().front()->get_name();
    extra = config_arguments(*first, command, first->app.get_subcommands().front());
  } catch (const CLI::ParseError& e) {
    const int code = first->app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }

  Program second;
  std::vector<std::string> full = args;
  full.insert(full.end(), extra.begin(), extra.end());
  try {
    second.app.parse(reversed_tail(full));
  } catch (const CLI::ParseError& e) {
    err << "error in configuration values: ";
    const int code = second.app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    if (command == "fit") return run_fit(second, out);
    if (command == "impute") return run_impute(second, out);
    if (command == "simulate") return run_simulate(second, out);
    return run_bench(second, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace zipem
