#pragma once

// Studies CSV, run configuration, and result reports (CSV, JSON, SVG).

#include "bbcopas/estimator.hpp"
#include "bbcopas/simulation.hpp"

#include <nlohmann/json_fwd.hpp>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace bbcopas {

// ---- studies -------------------------------------------------------------

struct StudiesFile {
  std::vector<Study2x2> studies;
  std::vector<std::string> cutoffs; // one per study; empty when absent
  bool has_cutoff = false;
};

// Header row required; columns are matched by name (case-insensitive):
// study (or label), TP, FP, FN, TN, and optionally cutoff. Throws ParseError
// naming the 1-based line and the offending field.
StudiesFile parse_studies_csv(std::istream& in);
StudiesFile read_studies_file(const std::filesystem::path& path);

// ---- configuration -------------------------------------------------------

// key = value lines; '#' starts a comment.
struct RunConfig {
  Link link = Link::logistic;
  int quad_order = 21;
  QuadratureMode quad_mode = QuadratureMode::adaptive;
  std::vector<std::pair<double, double>> c_pairs = default_c_pairs();
  std::vector<double> p_grid = default_p_grid();
  Gamma1Mode gamma1_mode = Gamma1Mode::profile;
  double gamma1 = 1.0;
  bool gamma1_explicit = false; // set by a gamma1 assignment
  SelectionMethod method = SelectionMethod::approx;
  std::size_t exact_cap = kDefaultExactCap;
  double f_tolerance = 1e-9;
  double x_tolerance = 1e-7;
  int max_iterations = 2000;
  double level = 0.95;
  std::string out_dir = "out";
  std::uint64_t seed = 20240501;

  // Simulation.
  SimScenario scenario = experiment_scenario(1);
  int replications = 100;
  std::vector<EstimatorSpec> estimators = {
      {EstimatorKind::mle_published},
      {EstimatorKind::proposal, 0.70710678118654752440, 0.70710678118654752440}};

  FitOptions fit_options() const;
  SimulationConfig simulation_config() const;
};

// Applies the assignments in the stream on top of cfg. Unknown keys and bad
// values throw ParseError with the line number and key.
void parse_run_config(std::istream& in, RunConfig& cfg);
void read_run_config(const std::filesystem::path& path, RunConfig& cfg);

// Single-value setters shared by the config parser and the command line.
// Throw InvalidArgument on bad values.
void set_config_value(RunConfig& cfg, const std::string& key, const std::string& value);

// ---- reports -------------------------------------------------------------

enum class ReportFormat { csv, json, svg };

// Everything a report needs, in a form that round-trips through JSON.
struct ReportRow {
  double c0 = 0.0, c1 = 0.0, p = 1.0;
  bool baseline = false;
  bool ok = false;
  bool converged = false;
  std::string error;
  std::string message;
  ModelParams params;
  double gamma0 = 0.0, gamma1 = 0.0; // gamma0 = +inf stored as null
  double loglik = 0.0;
  SrocSummary sroc;
  std::vector<std::string> se_names;
  std::vector<double> se;
  int iterations = 0;
  double constraint_residual = 0.0;
};

struct Report {
  static constexpr int kSchemaVersion = 1;
  std::string kind; // "fit" | "sensitivity"
  Link link = Link::logistic;
  int quad_order = 21;
  std::string method;
  std::string gamma1_mode;
  double level = 0.95;
  StudiesFile data;
  std::vector<std::pair<double, double>> c_pairs;
  std::vector<double> p_grid;
  std::vector<ReportRow> rows;
};

Report make_report(const FitResult& fit, const StudiesFile& data, const RunConfig& cfg);
Report make_report(const SensitivityTable& table, const StudiesFile& data, const RunConfig& cfg);

nlohmann::json to_json(const Report& report);
Report report_from_json(const nlohmann::json& j);

std::string render_csv(const Report& report);
// File name -> SVG document: one SROC panel and one SAUC-vs-p panel per
// c pair (the trend panel only when the grid has more than one p).
std::map<std::string, std::string> render_svgs(const Report& report);

std::string render_csv(const SimulationSummary& summary);
std::string render_replications_csv(const SimulationSummary& summary);
nlohmann::json to_json(const SimulationSummary& summary);

// Renders the requested formats and writes them into dir atomically
// (temporary file, then rename). The directory is created and probed for
// writability before any file is written; failures throw IoError. Returns
// the written paths.
std::vector<std::filesystem::path> emit_report(const Report& report,
                                               const std::set<ReportFormat>& formats,
                                               const std::filesystem::path& dir);
std::vector<std::filesystem::path> emit_report(const SimulationSummary& summary,
                                               const std::set<ReportFormat>& formats,
                                               const std::filesystem::path& dir);

// Writes name -> content files into dir with the same guarantees.
std::vector<std::filesystem::path> write_files_atomic(
    const std::filesystem::path& dir, const std::map<std::string, std::string>& files);

} // namespace bbcopas
