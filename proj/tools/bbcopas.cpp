// bbcopas command line: fit, sensitivity, simulate, plot.

#include "bbcopas/errors.hpp"
#include "bbcopas/io.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

namespace fs = std::filesystem;
using namespace bbcopas;

namespace {

enum Exit { kOk = 0, kConfig = 2, kConvergence = 3, kNumeric = 4 };

struct Globals {
  std::optional<int> quad_order;
  std::optional<std::string> method;
  std::optional<std::string> gamma1;
  std::optional<std::string> link;
  std::optional<std::string> out;
  std::optional<std::uint64_t> seed;
};

void apply_globals(const Globals& g, RunConfig& cfg) {
  if (g.quad_order) set_config_value(cfg, "quad_order", std::to_string(*g.quad_order));
  if (g.method) set_config_value(cfg, "method", *g.method);
  if (g.gamma1) set_config_value(cfg, "gamma1", *g.gamma1);
  if (g.link) set_config_value(cfg, "link", *g.link);
  if (g.out) set_config_value(cfg, "out", *g.out);
  if (g.seed) set_config_value(cfg, "seed", std::to_string(*g.seed));
}

const std::set<ReportFormat> kAllFormats = {ReportFormat::csv, ReportFormat::json, ReportFormat::svg};

void print_written(const std::vector<fs::path>& files) {
  for (const auto& f : files) std::printf("wrote %s\n", f.string().c_str());
}

void print_fit_line(const ReportRow& r) {
  if (!r.ok) {
    std::printf("%7.4f %7.4f %5.2f  failed: %s\n", r.c0, r.c1, r.p, r.error.c_str());
    return;
  }
  std::printf("%7.4f %7.4f %5.2f  SAUC %.4f [%.4f, %.4f]  sens %.4f spec %.4f  gamma1 %.4f%s\n", r.c0,
              r.c1, r.p, r.sroc.sauc, r.sroc.ci_low, r.sroc.ci_high, r.sroc.sop_sensitivity,
              r.sroc.sop_specificity, r.gamma1, r.converged ? "" : "  (not converged)");
}

int run_fit(const std::string& csv, const RunConfig& cfg, double p) {
  const auto data = read_studies_file(csv);
  const auto opts = cfg.fit_options();
  FitResult fit;
  if (p == 1.0) {
    fit = fit_unadjusted(data.studies, std::nullopt, opts);
  } else {
    const auto& [c0, c1] = cfg.c_pairs.front();
    const auto spec = SelectionSpec::normalized(c0, c1, cfg.gamma1, p);
    fit = fit_adjusted(data.studies, spec, opts);
  }
  const auto report = make_report(fit, data, cfg);
  std::printf("%7s %7s %5s\n", "c0", "c1", "p");
  print_fit_line(report.rows.front());
  print_written(emit_report(report, kAllFormats, cfg.out_dir));
  return fit.converged ? kOk : kConvergence;
}

int run_sensitivity(const std::string& csv, const RunConfig& cfg) {
  const auto data = read_studies_file(csv);
  const auto table = sensitivity_analysis(data.studies, cfg.c_pairs, cfg.p_grid, cfg.fit_options());
  const auto report = make_report(table, data, cfg);
  std::printf("%7s %7s %5s\n", "c0", "c1", "p");
  int failed = 0;
  for (const auto& r : report.rows) {
    print_fit_line(r);
    failed += !r.ok;
  }
  print_written(emit_report(report, kAllFormats, cfg.out_dir));
  if (failed) std::fprintf(stderr, "%d of %zu cells failed\n", failed, report.rows.size());
  return kOk;
}

int run_simulate(RunConfig cfg) {
  if (!cfg.gamma1_explicit) {
    cfg.gamma1_mode = Gamma1Mode::fixed;
    cfg.gamma1 = cfg.scenario.gamma1;
  }
  const auto sim = cfg.simulation_config();
  const auto summary = run_simulation_study(sim);
  const auto& sc = sim.scenario;
  std::printf("sens %.3f spec %.3f sigma (%.2f, %.2f) studies %d replications %d seed %llu\n", sc.sens,
              sc.spec, sc.sigma_theta, sc.sigma_alpha, sc.studies, sim.replications,
              static_cast<unsigned long long>(sc.seed));
  std::printf("published fraction %.3f (target %.3f)\n", summary.mean_published_fraction, sc.p_target);
  std::printf("%-10s %8s %8s %8s\n", "studies", "zero%", "<=3%", "<=5%");
  std::printf("%-10s %8.1f %8.1f %8.1f\n", "full", summary.full.zero, summary.full.le3, summary.full.le5);
  std::printf("%-10s %8.1f %8.1f %8.1f\n", "published", summary.published.zero, summary.published.le3,
              summary.published.le5);
  std::printf("true SAUCx100 %.1f\n", 100 * summary.true_sauc);
  for (const auto& e : summary.estimators)
    std::printf("%-32s %5.1f (%4.1f)  ok %d failed %d\n", e.label.c_str(), 100 * e.mean_sauc,
                100 * e.sd_sauc, e.ok, e.failed);
  print_written(emit_report(summary, {ReportFormat::csv, ReportFormat::json}, cfg.out_dir));
  return kOk;
}

int run_plot(const std::string& json_path, const std::string& out) {
  std::ifstream in(json_path);
  if (!in) throw ParseError("cannot open results file '" + json_path + "'", 0, "path");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("results file is not valid JSON: ") + e.what(), 0, "json");
  }
  const auto report = report_from_json(j);
  print_written(write_files_atomic(out, render_svgs(report)));
  return kOk;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bivariate binomial meta-analysis of diagnostic accuracy with Copas-type selection "
               "sensitivity analysis"};
  app.require_subcommand(1);

  Globals g;
  app.add_option("--quad-order", g.quad_order, "Gauss-Hermite nodes per dimension");
  app.add_option("--method", g.method, "marginal selection probability: approx|exact");
  app.add_option("--gamma1", g.gamma1, "profile, or a fixed value");
  app.add_option("--link", g.link, "logistic|probit");
  app.add_option("--out", g.out, "output directory");
  app.add_option("--seed", g.seed, "random seed");

  std::string csv, config, results, scenario;
  double p = 1.0;
  std::optional<int> studies, reps;

  auto* fit = app.add_subcommand("fit", "single fit at one marginal probability");
  fit->fallthrough();
  fit->add_option("studies", csv, "studies CSV")->required();
  fit->add_option("--config", config, "run configuration file");
  fit->add_option("--p", p, "marginal selection probability")->check(CLI::Range(0.0, 1.0));

  auto* sens = app.add_subcommand("sensitivity", "fits over the c-pair by p grid");
  sens->fallthrough();
  sens->add_option("studies", csv, "studies CSV")->required();
  sens->add_option("--config", config, "run configuration file");

  auto* sim = app.add_subcommand("simulate", "simulation study on generated populations");
  sim->fallthrough();
  sim->add_option("--scenario", scenario, "experiment 1..6 or a scenario file")->required();
  sim->add_option("--studies", studies, "population size per meta-analysis")->check(CLI::Range(2, 100000));
  sim->add_option("--reps", reps, "replications")->check(CLI::Range(1, 1000000));

  auto* plot = app.add_subcommand("plot", "re-render figures from a results JSON");
  plot->fallthrough();
  plot->add_option("results", results, "results JSON")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }

  try {
    RunConfig cfg;
    if (!config.empty()) read_run_config(config, cfg);
    if (*sim) {
      if (scenario.size() == 1 && scenario[0] >= '1' && scenario[0] <= '6')
        set_config_value(cfg, "scenario", scenario);
      else
        read_run_config(scenario, cfg);
      if (studies) set_config_value(cfg, "studies", std::to_string(*studies));
      if (reps) set_config_value(cfg, "replications", std::to_string(*reps));
    }
    apply_globals(g, cfg);

    if (*fit) {
      if (!(p > 0.0)) throw InvalidArgument("--p must lie in (0, 1]");
      return run_fit(csv, cfg, p);
    }
    if (*sens) return run_sensitivity(csv, cfg);
    if (*sim) return run_simulate(cfg);
    return run_plot(results, g.out ? *g.out : cfg.out_dir);
  } catch (const ParseError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kConfig;
  } catch (const InvalidArgument& e) {
    std::fprintf(stderr, "configuration error: %s\n", e.what());
    return kConfig;
  } catch (const IoError& e) {
    std::fprintf(stderr, "i/o error: %s\n", e.what());
    return kConfig;
  } catch (const ConvergenceFailure& e) {
    std::fprintf(stderr, "convergence failure: %s\n", e.what());
    return kConvergence;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "numeric failure: %s\n", e.what());
    return kNumeric;
  }
}
