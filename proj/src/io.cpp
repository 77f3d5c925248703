#include "bbcopas/io.hpp"

#include "bbcopas/errors.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <unordered_set>

namespace bbcopas {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string trim(std::string_view s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return std::string(s.substr(a, b - a));
}

std::string lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

std::string format_g(double x, int digits = 10) {
  if (std::isnan(x)) return "NA";
  if (std::isinf(x)) return x > 0 ? "Inf" : "-Inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, x);
  return buf;
}

std::string format_fixed(double x, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, x);
  return buf;
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
    case '&': out += "&amp;"; break;
    case '<': out += "&lt;"; break;
    case '>': out += "&gt;"; break;
    case '"': out += "&quot;"; break;
    default: out += c;
    }
  }
  return out;
}

// Splits one CSV record; double quotes may enclose fields and "" escapes a quote.
std::vector<std::string> split_csv(const std::string& line, std::size_t lineno) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false, was_quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += c;
      }
    } else if (c == '"') {
      if (!trim(cur).empty())
        throw ParseError("line " + std::to_string(lineno) + ": stray quote inside a field", lineno,
                         "field " + std::to_string(out.size() + 1));
      cur.clear();
      quoted = was_quoted = true;
    } else if (c == ',') {
      out.push_back(was_quoted ? cur : trim(cur));
      cur.clear();
      was_quoted = false;
    } else {
      cur += c;
    }
  }
  if (quoted)
    throw ParseError("line " + std::to_string(lineno) + ": unterminated quoted field", lineno,
                     "field " + std::to_string(out.size() + 1));
  out.push_back(was_quoted ? cur : trim(cur));
  return out;
}

int parse_count(const std::string& text, std::size_t lineno, const std::string& field) {
  int v = 0;
  const char* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (text.empty() || ec != std::errc() || ptr != end)
    throw ParseError("line " + std::to_string(lineno) + ": field " + field +
                         " is not an integer count: '" + text + "'",
                     lineno, field);
  if (v < 0)
    throw ParseError("line " + std::to_string(lineno) + ": field " + field +
                         " must be non-negative, got " + text,
                     lineno, field);
  return v;
}

double parse_real(const std::string& text) {
  const std::string t = trim(text);
  double v = 0.0;
  const char* end = t.data() + t.size();
  const auto [ptr, ec] = std::from_chars(t.data(), end, v);
  if (t.empty() || ec != std::errc() || ptr != end || !std::isfinite(v))
    throw InvalidArgument("expected a finite number, got '" + t + "'");
  return v;
}

long long parse_integer(const std::string& text) {
  const std::string t = trim(text);
  long long v = 0;
  const char* end = t.data() + t.size();
  const auto [ptr, ec] = std::from_chars(t.data(), end, v);
  if (t.empty() || ec != std::errc() || ptr != end)
    throw InvalidArgument("expected an integer, got '" + t + "'");
  return v;
}

std::vector<std::string> split_list(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(text);
  while (std::getline(in, cur, sep)) {
    cur = trim(cur);
    if (!cur.empty()) out.push_back(cur);
  }
  return out;
}

std::pair<int, int> parse_range(const std::string& text) {
  const auto parts = split_list(text, ',');
  if (parts.size() != 2) throw InvalidArgument("expected 'low, high', got '" + text + "'");
  const long long a = parse_integer(parts[0]), b = parse_integer(parts[1]);
  if (a < 1 || b < a) throw InvalidArgument("range must satisfy 1 <= low <= high");
  return {static_cast<int>(a), static_cast<int>(b)};
}

std::string c_tag(double c0, double c1) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "c0_%.3f_c1_%.3f", c0, c1);
  return buf;
}

// JSON numbers: non-finite values are stored as null.
json num(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }
double num_or(const json& j, const char* key, double fallback) {
  if (!j.contains(key) || j.at(key).is_null()) return fallback;
  return j.at(key).get<double>();
}

} // namespace

// ---- studies -------------------------------------------------------------

StudiesFile parse_studies_csv(std::istream& in) {
  std::string line;
  std::size_t lineno = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (lineno == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
    if (trim(line).empty()) continue;
    header = split_csv(line, lineno);
    break;
  }
  if (header.empty()) throw ParseError("studies file is empty (header row expected)", 0, "header");

  const std::size_t header_line = lineno;
  std::map<std::string, std::size_t> col;
  for (std::size_t i = 0; i < header.size(); ++i) {
    std::string name = lower(trim(header[i]));
    if (name == "label") name = "study";
    if (name == "cut-off" || name == "cut_off") name = "cutoff";
    if (col.count(name))
      throw ParseError("line " + std::to_string(header_line) + ": duplicate column '" +
                           header[i] + "'",
                       header_line, header[i]);
    col[name] = i;
  }
  for (const char* need : {"study", "tp", "fp", "fn", "tn"}) {
    if (!col.count(need)) {
      std::string shown = need;
      if (shown != "study") std::transform(shown.begin(), shown.end(), shown.begin(), ::toupper);
      throw ParseError("line " + std::to_string(header_line) + ": missing required column '" +
                           shown + "'",
                       header_line, shown);
    }
  }

  StudiesFile out;
  out.has_cutoff = col.count("cutoff") > 0;
  std::unordered_set<std::string> seen;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    const auto fields = split_csv(line, lineno);
    if (fields.size() != header.size())
      throw ParseError("line " + std::to_string(lineno) + ": expected " +
                           std::to_string(header.size()) + " fields, found " +
                           std::to_string(fields.size()),
                       lineno, "row");
    Study2x2 s;
    s.label = fields[col["study"]];
    if (s.label.empty())
      throw ParseError("line " + std::to_string(lineno) + ": empty study label", lineno, "study");
    s.n11 = parse_count(fields[col["tp"]], lineno, "TP");
    s.n10 = parse_count(fields[col["fp"]], lineno, "FP");
    s.n01 = parse_count(fields[col["fn"]], lineno, "FN");
    s.n00 = parse_count(fields[col["tn"]], lineno, "TN");
    if (s.n1() == 0)
      throw ParseError("line " + std::to_string(lineno) + ": domain error, TP + FN = 0 (no diseased subjects)",
                       lineno, "TP+FN");
    if (s.n0() == 0)
      throw ParseError("line " + std::to_string(lineno) + ": domain error, FP + TN = 0 (no non-diseased subjects)",
                       lineno, "FP+TN");
    if (!seen.insert(s.label).second)
      throw ParseError("line " + std::to_string(lineno) + ": duplicate study label '" + s.label +
                           "'",
                       lineno, "study");
    out.cutoffs.push_back(out.has_cutoff ? fields[col["cutoff"]] : std::string());
    out.studies.push_back(std::move(s));
  }
  if (out.studies.empty())
    throw ParseError("studies file has a header but no studies", lineno, "row");
  return out;
}

StudiesFile read_studies_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open studies file '" + path.string() + "'", 0, "path");
  return parse_studies_csv(in);
}

// ---- configuration -------------------------------------------------------

void set_config_value(RunConfig& cfg, const std::string& key_in, const std::string& value_in) {
  const std::string key = lower(trim(key_in));
  const std::string value = trim(value_in);
  auto& sc = cfg.scenario;

  if (key == "link") {
    cfg.link = parse_link(value);
  } else if (key == "quad_order" || key == "quad-order") {
    const long long v = parse_integer(value);
    if (v < 5 || v > 200) throw InvalidArgument("quad_order must lie in [5, 200]");
    cfg.quad_order = static_cast<int>(v);
  } else if (key == "quad_mode") {
    if (value == "adaptive") cfg.quad_mode = QuadratureMode::adaptive;
    else if (value == "fixed") cfg.quad_mode = QuadratureMode::fixed;
    else throw InvalidArgument("quad_mode must be adaptive or fixed");
  } else if (key == "c_pairs") {
    std::vector<std::pair<double, double>> pairs;
    for (const auto& item : split_list(value, ',')) {
      const auto parts = split_list(item, ':');
      if (parts.size() != 2) throw InvalidArgument("c pair must be written c0:c1, got '" + item + "'");
      const auto s = SelectionSpec::normalized(parse_real(parts[0]), parse_real(parts[1]), 1.0, 1.0);
      pairs.emplace_back(s.c0, s.c1);
    }
    if (pairs.empty()) throw InvalidArgument("c_pairs is empty");
    cfg.c_pairs = pairs;
  } else if (key == "p_grid") {
    std::vector<double> grid;
    for (const auto& item : split_list(value, ',')) {
      const double p = parse_real(item);
      if (!(p > 0.0 && p <= 1.0)) throw InvalidArgument("p values must lie in (0, 1]");
      grid.push_back(p);
    }
    if (grid.empty()) throw InvalidArgument("p_grid is empty");
    cfg.p_grid = grid;
  } else if (key == "gamma1") {
    cfg.gamma1_explicit = true;
    if (value == "profile") {
      cfg.gamma1_mode = Gamma1Mode::profile;
    } else {
      const double g = parse_real(value);
      if (g < 0.0) throw InvalidArgument("gamma1 must be >= 0");
      cfg.gamma1_mode = Gamma1Mode::fixed;
      cfg.gamma1 = g;
    }
  } else if (key == "gamma1_start") {
    const double g = parse_real(value);
    if (g < 0.0) throw InvalidArgument("gamma1_start must be >= 0");
    cfg.gamma1 = g;
  } else if (key == "method") {
    cfg.method = parse_selection_method(value);
  } else if (key == "exact_cap") {
    const long long v = parse_integer(value);
    if (v < 1) throw InvalidArgument("exact_cap must be positive");
    cfg.exact_cap = static_cast<std::size_t>(v);
  } else if (key == "f_tolerance" || key == "x_tolerance") {
    const double v = parse_real(value);
    if (!(v > 0.0)) throw InvalidArgument(key + " must be positive");
    (key == "f_tolerance" ? cfg.f_tolerance : cfg.x_tolerance) = v;
  } else if (key == "max_iterations") {
    const long long v = parse_integer(value);
    if (v < 1) throw InvalidArgument("max_iterations must be positive");
    cfg.max_iterations = static_cast<int>(v);
  } else if (key == "level") {
    const double v = parse_real(value);
    if (!(v > 0.0 && v < 1.0)) throw InvalidArgument("level must lie in (0, 1)");
    cfg.level = v;
  } else if (key == "out") {
    if (value.empty()) throw InvalidArgument("out must not be empty");
    cfg.out_dir = value;
  } else if (key == "seed") {
    const long long v = parse_integer(value);
    if (v < 0) throw InvalidArgument("seed must be non-negative");
    cfg.seed = static_cast<std::uint64_t>(v);
  } else if (key == "scenario") {
    const long long v = parse_integer(value);
    sc = experiment_scenario(static_cast<int>(v));
  } else if (key == "sens" || key == "spec") {
    const double v = parse_real(value);
    if (!(v > 0.0 && v < 1.0)) throw InvalidArgument(key + " must lie in (0, 1)");
    (key == "sens" ? sc.sens : sc.spec) = v;
  } else if (key == "beta") {
    sc.beta = parse_real(value);
  } else if (key == "sigma_theta" || key == "sigma_alpha") {
    const double v = parse_real(value);
    if (!(v > 0.0)) throw InvalidArgument(key + " must be positive");
    (key == "sigma_theta" ? sc.sigma_theta : sc.sigma_alpha) = v;
  } else if (key == "n1_range") {
    std::tie(sc.n1_min, sc.n1_max) = parse_range(value);
  } else if (key == "n0_range") {
    std::tie(sc.n0_min, sc.n0_max) = parse_range(value);
  } else if (key == "sim_gamma1") {
    const double v = parse_real(value);
    if (v < 0.0) throw InvalidArgument("sim_gamma1 must be >= 0");
    sc.gamma1 = v;
  } else if (key == "p_target") {
    const double v = parse_real(value);
    if (!(v > 0.0 && v <= 1.0)) throw InvalidArgument("p_target must lie in (0, 1]");
    sc.p_target = v;
  } else if (key == "sim_c") {
    const auto parts = split_list(value, ':');
    if (parts.size() != 2) throw InvalidArgument("sim_c must be written c0:c1");
    const auto s = SelectionSpec::normalized(parse_real(parts[0]), parse_real(parts[1]), 1.0, 1.0);
    sc.c0 = s.c0;
    sc.c1 = s.c1;
  } else if (key == "studies") {
    const long long v = parse_integer(value);
    if (v < 2) throw InvalidArgument("studies must be >= 2");
    sc.studies = static_cast<int>(v);
  } else if (key == "replications") {
    const long long v = parse_integer(value);
    if (v < 1) throw InvalidArgument("replications must be >= 1");
    cfg.replications = static_cast<int>(v);
  } else if (key == "estimators") {
    std::vector<EstimatorSpec> ests;
    for (const auto& item : split_list(value, ',')) {
      const auto parts = split_list(item, ':');
      if (parts[0] == "mle") {
        if (parts.size() != 1) throw InvalidArgument("mle takes no arguments");
        ests.push_back({EstimatorKind::mle_published});
      } else if (parts[0] == "proposal" && parts.size() == 3) {
        const auto s = SelectionSpec::normalized(parse_real(parts[1]), parse_real(parts[2]), 1.0, 1.0);
        ests.push_back({EstimatorKind::proposal, s.c0, s.c1});
      } else {
        throw InvalidArgument("estimator must be mle or proposal:c0:c1, got '" + item + "'");
      }
    }
    if (ests.empty()) throw InvalidArgument("estimators is empty");
    cfg.estimators = ests;
  } else {
    throw InvalidArgument("unknown key '" + key + "'");
  }
}

void parse_run_config(std::istream& in, RunConfig& cfg) {
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ParseError("line " + std::to_string(lineno) + ": expected key = value", lineno, trim(line));
    const std::string key = trim(line.substr(0, eq));
    try {
      set_config_value(cfg, key, line.substr(eq + 1));
    } catch (const std::exception& e) {
      throw ParseError("line " + std::to_string(lineno) + ": " + key + ": " + e.what(), lineno, key);
    }
  }
}

void read_run_config(const fs::path& path, RunConfig& cfg) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open config file '" + path.string() + "'", 0, "path");
  parse_run_config(in, cfg);
}

FitOptions RunConfig::fit_options() const {
  FitOptions o;
  o.likelihood = LikelihoodConfig::make(link, quad_order, quad_mode);
  o.selection.method = method;
  o.selection.exact_cap = exact_cap;
  o.gamma1_mode = gamma1_mode;
  o.gamma1 = gamma1;
  o.optim.f_tolerance = f_tolerance;
  o.optim.x_tolerance = x_tolerance;
  o.optim.max_iterations = max_iterations;
  o.level = level;
  return o;
}

SimulationConfig RunConfig::simulation_config() const {
  SimulationConfig c;
  c.scenario = scenario;
  c.scenario.seed = seed;
  c.scenario.link = link;
  c.replications = replications;
  c.estimators = estimators;
  c.fit = fit_options();
  return c;
}

// ---- reports -------------------------------------------------------------

namespace {

ReportRow row_from_fit(const FitResult& fit, double c0, double c1, double p, bool baseline) {
  ReportRow r;
  r.c0 = c0;
  r.c1 = c1;
  r.p = p;
  r.baseline = baseline;
  r.ok = true;
  r.converged = fit.converged;
  r.message = fit.message;
  r.params = fit.params;
  r.gamma0 = fit.gamma0;
  r.gamma1 = fit.gamma1;
  r.loglik = fit.loglik;
  r.sroc = fit.sroc;
  r.se = fit.standard_errors();
  for (std::size_t i = 0; i < r.se.size(); ++i)
    r.se_names.push_back(i < ModelParams::kNames.size() ? ModelParams::kNames[i] : "gamma1");
  r.iterations = fit.iterations;
  r.constraint_residual = fit.constraint_residual;
  return r;
}

void fill_common(Report& rep, const StudiesFile& data, const RunConfig& cfg) {
  rep.link = cfg.link;
  rep.quad_order = cfg.quad_order;
  rep.method = to_string(cfg.method);
  rep.gamma1_mode = cfg.gamma1_mode == Gamma1Mode::profile ? "profile" : "fixed";
  rep.level = cfg.level;
  rep.data = data;
}

} // namespace

Report make_report(const FitResult& fit, const StudiesFile& data, const RunConfig& cfg) {
  Report rep;
  rep.kind = "fit";
  fill_common(rep, data, cfg);
  rep.c_pairs = {{fit.spec.c0, fit.spec.c1}};
  rep.p_grid = {fit.p};
  rep.rows.push_back(row_from_fit(fit, fit.spec.c0, fit.spec.c1, fit.p, fit.p == 1.0));
  return rep;
}

Report make_report(const SensitivityTable& table, const StudiesFile& data, const RunConfig& cfg) {
  Report rep;
  rep.kind = "sensitivity";
  fill_common(rep, data, cfg);
  rep.c_pairs = table.c_pairs;
  rep.p_grid = table.p_grid;
  for (const auto& row : table.rows) {
    ReportRow r;
    if (row.ok) {
      r = row_from_fit(row.fit, row.spec.c0, row.spec.c1, row.p, row.baseline);
    } else {
      r.c0 = row.spec.c0;
      r.c1 = row.spec.c1;
      r.p = row.p;
      r.baseline = row.baseline;
      r.error = row.error;
    }
    rep.rows.push_back(std::move(r));
  }
  return rep;
}

json to_json(const Report& report) {
  json j;
  j["schema_version"] = Report::kSchemaVersion;
  j["kind"] = report.kind;
  j["link"] = std::string(to_string(report.link));
  j["quad_order"] = report.quad_order;
  j["method"] = report.method;
  j["gamma1_mode"] = report.gamma1_mode;
  j["level"] = report.level;
  json studies = json::array();
  for (std::size_t i = 0; i < report.data.studies.size(); ++i) {
    const auto& s = report.data.studies[i];
    json o{{"study", s.label}, {"TP", s.n11}, {"FP", s.n10}, {"FN", s.n01}, {"TN", s.n00}};
    if (report.data.has_cutoff) o["cutoff"] = report.data.cutoffs[i];
    studies.push_back(o);
  }
  j["studies"] = studies;
  j["c_pairs"] = json::array();
  for (const auto& [c0, c1] : report.c_pairs) j["c_pairs"].push_back({c0, c1});
  j["p_grid"] = report.p_grid;
  j["rows"] = json::array();
  for (const auto& r : report.rows) {
    json o;
    o["c0"] = r.c0;
    o["c1"] = r.c1;
    o["p"] = r.p;
    o["baseline"] = r.baseline;
    o["ok"] = r.ok;
    if (!r.ok) {
      o["error"] = r.error;
      j["rows"].push_back(o);
      continue;
    }
    o["converged"] = r.converged;
    o["message"] = r.message;
    o["theta"] = r.params.theta;
    o["alpha"] = r.params.alpha;
    o["beta"] = r.params.beta;
    o["sigma_theta"] = r.params.sigma_theta;
    o["sigma_alpha"] = r.params.sigma_alpha;
    o["gamma0"] = num(r.gamma0);
    o["gamma1"] = r.gamma1;
    o["loglik"] = num(r.loglik);
    o["sauc"] = r.sroc.sauc;
    o["sauc_variance"] = num(r.sroc.sauc_variance);
    o["ci_low"] = num(r.sroc.ci_low);
    o["ci_high"] = num(r.sroc.ci_high);
    o["sop_sensitivity"] = r.sroc.sop_sensitivity;
    o["sop_specificity"] = r.sroc.sop_specificity;
    json se = json::object();
    for (std::size_t i = 0; i < r.se.size(); ++i) se[r.se_names[i]] = num(r.se[i]);
    o["se"] = se;
    o["se_order"] = r.se_names;
    o["iterations"] = r.iterations;
    o["constraint_residual"] = num(r.constraint_residual);
    j["rows"].push_back(o);
  }
  return j;
}

Report report_from_json(const json& j) {
  try {
    if (!j.contains("schema_version") || j.at("schema_version").get<int>() != Report::kSchemaVersion)
      throw ParseError("unsupported or missing schema_version", 0, "schema_version");
    Report rep;
    rep.kind = j.at("kind").get<std::string>();
    if (rep.kind != "fit" && rep.kind != "sensitivity")
      throw ParseError("no figures for results of kind '" + rep.kind + "'", 0, "kind");
    rep.link = parse_link(j.at("link").get<std::string>());
    rep.quad_order = j.at("quad_order").get<int>();
    rep.method = j.at("method").get<std::string>();
    rep.gamma1_mode = j.at("gamma1_mode").get<std::string>();
    rep.level = j.at("level").get<double>();
    for (const auto& s : j.at("studies")) {
      rep.data.studies.push_back({s.at("TP").get<int>(), s.at("FP").get<int>(), s.at("FN").get<int>(),
                                  s.at("TN").get<int>(), s.at("study").get<std::string>()});
      if (s.contains("cutoff")) {
        rep.data.has_cutoff = true;
        rep.data.cutoffs.push_back(s.at("cutoff").get<std::string>());
      } else {
        rep.data.cutoffs.emplace_back();
      }
    }
    for (const auto& c : j.at("c_pairs")) rep.c_pairs.emplace_back(c.at(0).get<double>(), c.at(1).get<double>());
    rep.p_grid = j.at("p_grid").get<std::vector<double>>();
    for (const auto& o : j.at("rows")) {
      ReportRow r;
      r.c0 = o.at("c0").get<double>();
      r.c1 = o.at("c1").get<double>();
      r.p = o.at("p").get<double>();
      r.baseline = o.at("baseline").get<bool>();
      r.ok = o.at("ok").get<bool>();
      if (!r.ok) {
        r.error = o.value("error", "");
        rep.rows.push_back(std::move(r));
        continue;
      }
      r.converged = o.at("converged").get<bool>();
      r.message = o.value("message", "");
      r.params = {o.at("theta").get<double>(), o.at("alpha").get<double>(), o.at("beta").get<double>(),
                  o.at("sigma_theta").get<double>(), o.at("sigma_alpha").get<double>()};
      r.gamma0 = num_or(o, "gamma0", std::numeric_limits<double>::infinity());
      r.gamma1 = o.at("gamma1").get<double>();
      r.loglik = num_or(o, "loglik", kNaN);
      r.sroc.sauc = o.at("sauc").get<double>();
      r.sroc.sauc_variance = num_or(o, "sauc_variance", kNaN);
      r.sroc.ci_low = num_or(o, "ci_low", kNaN);
      r.sroc.ci_high = num_or(o, "ci_high", kNaN);
      r.sroc.level = rep.level;
      r.sroc.sop_sensitivity = o.at("sop_sensitivity").get<double>();
      r.sroc.sop_specificity = o.at("sop_specificity").get<double>();
      r.se_names = o.at("se_order").get<std::vector<std::string>>();
      for (const auto& name : r.se_names) r.se.push_back(num_or(o.at("se"), name.c_str(), kNaN));
      r.iterations = o.value("iterations", 0);
      r.constraint_residual = num_or(o, "constraint_residual", kNaN);
      rep.rows.push_back(std::move(r));
    }
    return rep;
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed results file: ") + e.what(), 0, "json");
  }
}

std::string render_csv(const Report& report) {
  std::ostringstream os;
  os << "c0,c1,p,baseline,ok,converged,theta,alpha,beta,sigma_theta,sigma_alpha,gamma0,gamma1,"
        "se_theta,se_alpha,se_beta,se_sigma_theta,se_sigma_alpha,se_gamma1,loglik,sauc,sauc_se,"
        "ci_low,ci_high,sop_sensitivity,sop_specificity,message\n";
  for (const auto& r : report.rows) {
    os << format_g(r.c0) << ',' << format_g(r.c1) << ',' << format_g(r.p) << ','
       << (r.baseline ? 1 : 0) << ',' << (r.ok ? 1 : 0) << ',';
    if (!r.ok) {
      os << "0" << std::string(20, ',') << csv_escape(r.error) << '\n';
      continue;
    }
    os << (r.converged ? 1 : 0) << ',' << format_g(r.params.theta) << ','
       << format_g(r.params.alpha) << ',' << format_g(r.params.beta) << ','
       << format_g(r.params.sigma_theta) << ',' << format_g(r.params.sigma_alpha) << ','
       << format_g(r.gamma0) << ',' << format_g(r.gamma1);
    for (std::size_t i = 0; i < 6; ++i) os << ',' << (i < r.se.size() ? format_g(r.se[i]) : "NA");
    os << ',' << format_g(r.loglik) << ',' << format_g(r.sroc.sauc) << ','
       << format_g(std::sqrt(r.sroc.sauc_variance)) << ',' << format_g(r.sroc.ci_low) << ','
       << format_g(r.sroc.ci_high) << ',' << format_g(r.sroc.sop_sensitivity) << ','
       << format_g(r.sroc.sop_specificity) << ',' << csv_escape(trim(r.message)) << '\n';
  }
  return os.str();
}

// ---- SVG -----------------------------------------------------------------

namespace {

constexpr double kW = 520, kH = 520, kLeft = 64, kRight = 24, kTop = 40, kBottom = 56;
const char* const kPalette[] = {"#1b4f9c", "#d1495b", "#2a9d8f", "#e9a03b", "#7b4fa0", "#5c5c5c"};

struct Frame {
  double x0, x1, y0, y1;
  double px(double x) const { return kLeft + (x - x0) / (x1 - x0) * (kW - kLeft - kRight); }
  double py(double y) const { return kH - kBottom - (y - y0) / (y1 - y0) * (kH - kTop - kBottom); }
};

std::string pt(const Frame& f, double x, double y) {
  return format_fixed(f.px(x), 2) + "," + format_fixed(f.py(y), 2);
}

void axes(std::ostringstream& os, const Frame& f, const std::string& title, const std::string& xlab,
          const std::string& ylab, double xstep, double ystep) {
  os << "<rect x=\"" << format_fixed(kLeft, 2) << "\" y=\"" << format_fixed(kTop, 2)
     << "\" width=\"" << format_fixed(kW - kLeft - kRight, 2) << "\" height=\""
     << format_fixed(kH - kTop - kBottom, 2) << "\" fill=\"none\" stroke=\"#333\"/>\n";
  for (double x = f.x0; x <= f.x1 + 1e-9; x += xstep) {
    os << "<line x1=\"" << format_fixed(f.px(x), 2) << "\" y1=\"" << format_fixed(f.py(f.y0), 2)
       << "\" x2=\"" << format_fixed(f.px(x), 2) << "\" y2=\"" << format_fixed(f.py(f.y0) + 5, 2)
       << "\" stroke=\"#333\"/>\n<text x=\"" << format_fixed(f.px(x), 2) << "\" y=\""
       << format_fixed(f.py(f.y0) + 18, 2) << "\" text-anchor=\"middle\">" << format_fixed(x, 1)
       << "</text>\n";
  }
  for (double y = f.y0; y <= f.y1 + 1e-9; y += ystep) {
    os << "<line x1=\"" << format_fixed(f.px(f.x0) - 5, 2) << "\" y1=\"" << format_fixed(f.py(y), 2)
       << "\" x2=\"" << format_fixed(f.px(f.x0), 2) << "\" y2=\"" << format_fixed(f.py(y), 2)
       << "\" stroke=\"#333\"/>\n<text x=\"" << format_fixed(f.px(f.x0) - 8, 2) << "\" y=\""
       << format_fixed(f.py(y) + 4, 2) << "\" text-anchor=\"end\">" << format_fixed(y, 2)
       << "</text>\n";
  }
  os << "<text x=\"" << format_fixed(kW / 2, 2) << "\" y=\"24\" text-anchor=\"middle\" "
     << "font-size=\"14\">" << xml_escape(title) << "</text>\n";
  os << "<text x=\"" << format_fixed((kLeft + kW - kRight) / 2, 2) << "\" y=\""
     << format_fixed(kH - 14, 2) << "\" text-anchor=\"middle\">" << xml_escape(xlab)
     << "</text>\n";
  os << "<text transform=\"translate(18," << format_fixed((kTop + kH - kBottom) / 2, 2)
     << ") rotate(-90)\" text-anchor=\"middle\">" << xml_escape(ylab) << "</text>\n";
}

std::string svg_open() {
  return "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<svg xmlns=\"http://www.w3.org/2000/svg\" "
         "width=\"520\" height=\"520\" viewBox=\"0 0 520 520\" font-family=\"sans-serif\" "
         "font-size=\"11\">\n<rect width=\"520\" height=\"520\" fill=\"white\"/>\n";
}

std::string c_title(double c0, double c1) {
  return "c0 = " + format_fixed(c0, 3) + ", c1 = " + format_fixed(c1, 3);
}

// Rows for a c pair: the shared baseline first, then the pair's own rows.
std::vector<const ReportRow*> group_rows(const Report& rep, double c0, double c1) {
  std::vector<const ReportRow*> out;
  for (const auto& r : rep.rows)
    if (r.baseline) out.push_back(&r);
  for (const auto& r : rep.rows)
    if (!r.baseline && std::abs(r.c0 - c0) < 1e-9 && std::abs(r.c1 - c1) < 1e-9) out.push_back(&r);
  return out;
}

std::string render_sroc_panel(const Report& rep, double c0, double c1) {
  const Frame f{0.0, 1.0, 0.0, 1.0};
  std::ostringstream os;
  os << svg_open();
  axes(os, f, "SROC, " + c_title(c0, c1), "1 - specificity (FPR)", "sensitivity (TPR)", 0.2, 0.2);
  os << "<line x1=\"" << format_fixed(f.px(0), 2) << "\" y1=\"" << format_fixed(f.py(0), 2)
     << "\" x2=\"" << format_fixed(f.px(1), 2) << "\" y2=\"" << format_fixed(f.py(1), 2)
     << "\" stroke=\"#bbb\" stroke-dasharray=\"4 4\"/>\n";
  for (const auto& s : rep.data.studies) {
    const double fpr = static_cast<double>(s.n10) / s.n0();
    const double tpr = static_cast<double>(s.n11) / s.n1();
    os << "<circle cx=\"" << format_fixed(f.px(fpr), 2) << "\" cy=\"" << format_fixed(f.py(tpr), 2)
       << "\" r=\"3\" fill=\"none\" stroke=\"#777\"/>\n";
  }
  const auto rows = group_rows(rep, c0, c1);
  int k = 0;
  double legend_y = kTop + 16;
  for (const auto* r : rows) {
    if (!r->ok) continue;
    const char* color = kPalette[k++ % 6];
    os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.6\" points=\""
       << pt(f, 0.0, 0.0);
    for (int i = 1; i < 200; ++i) {
      const double x = i / 200.0;
      os << ' ' << pt(f, x, sroc_curve(r->params.alpha, r->params.beta, x, rep.link));
    }
    os << ' ' << pt(f, 1.0, 1.0) << "\"/>\n";
    const double sx = 1.0 - r->sroc.sop_specificity, sy = r->sroc.sop_sensitivity;
    os << "<rect x=\"" << format_fixed(f.px(sx) - 4, 2) << "\" y=\"" << format_fixed(f.py(sy) - 4, 2)
       << "\" width=\"8\" height=\"8\" fill=\"" << color << "\"/>\n";
    const double lx = f.px(0.52);
    os << "<line x1=\"" << format_fixed(lx, 2) << "\" y1=\"" << format_fixed(f.py(0) - 200 + legend_y, 2)
       << "\" x2=\"" << format_fixed(lx + 18, 2) << "\" y2=\""
       << format_fixed(f.py(0) - 200 + legend_y, 2) << "\" stroke=\"" << color
       << "\" stroke-width=\"2\"/>\n<text x=\"" << format_fixed(lx + 24, 2) << "\" y=\""
       << format_fixed(f.py(0) - 196 + legend_y, 2) << "\">p = " << format_g(r->p, 3)
       << ", SAUC = " << format_fixed(r->sroc.sauc, 3) << "</text>\n";
    legend_y += 16;
  }
  os << "</svg>\n";
  return os.str();
}

std::string render_trend_panel(const Report& rep, double c0, double c1) {
  const auto rows = group_rows(rep, c0, c1);
  std::vector<const ReportRow*> ok;
  for (const auto* r : rows)
    if (r->ok) ok.push_back(r);
  std::sort(ok.begin(), ok.end(), [](const ReportRow* a, const ReportRow* b) { return a->p < b->p; });

  double ymin = 1.0;
  for (const auto* r : ok) {
    const double lo = std::isfinite(r->sroc.ci_low) ? r->sroc.ci_low : r->sroc.sauc;
    ymin = std::min(ymin, lo);
  }
  ymin = std::max(0.0, std::floor(ymin * 10.0 - 1e-9) / 10.0);
  if (ymin > 0.9) ymin = 0.9;
  const Frame f{0.0, 1.0, ymin, 1.0};
  std::ostringstream os;
  os << svg_open();
  axes(os, f, "SAUC vs p, " + c_title(c0, c1), "marginal selection probability p", "SAUC", 0.2,
       (1.0 - ymin) > 0.5 ? 0.1 : 0.05);
  std::vector<const ReportRow*> band;
  for (const auto* r : ok)
    if (std::isfinite(r->sroc.ci_low) && std::isfinite(r->sroc.ci_high)) band.push_back(r);
  if (band.size() >= 2) {
    os << "<polygon fill=\"#1b4f9c\" fill-opacity=\"0.15\" stroke=\"none\" points=\"";
    for (std::size_t i = 0; i < band.size(); ++i)
      os << (i ? " " : "") << pt(f, band[i]->p, band[i]->sroc.ci_high);
    for (std::size_t i = band.size(); i-- > 0;) os << ' ' << pt(f, band[i]->p, band[i]->sroc.ci_low);
    os << "\"/>\n";
  }
  if (!ok.empty()) {
    os << "<polyline fill=\"none\" stroke=\"#1b4f9c\" stroke-width=\"1.8\" points=\"";
    for (std::size_t i = 0; i < ok.size(); ++i) os << (i ? " " : "") << pt(f, ok[i]->p, ok[i]->sroc.sauc);
    os << "\"/>\n";
    for (const auto* r : ok)
      os << "<circle cx=\"" << format_fixed(f.px(r->p), 2) << "\" cy=\""
         << format_fixed(f.py(r->sroc.sauc), 2) << "\" r=\"3.5\" fill=\"#1b4f9c\"/>\n";
  }
  os << "</svg>\n";
  return os.str();
}

} // namespace

std::map<std::string, std::string> render_svgs(const Report& report) {
  std::map<std::string, std::string> out;
  for (const auto& [c0, c1] : report.c_pairs) {
    const std::string tag = c_tag(c0, c1);
    out["sroc_" + tag + ".svg"] = render_sroc_panel(report, c0, c1);
    if (report.p_grid.size() > 1) out["sauc_trend_" + tag + ".svg"] = render_trend_panel(report, c0, c1);
  }
  return out;
}

// ---- simulation output ---------------------------------------------------

std::string render_csv(const SimulationSummary& s) {
  std::ostringstream os;
  const auto& sc = s.config.scenario;
  os << "estimator,replications,ok,failed,true_sauc_x100,mean_sauc_x100,sd_sauc_x100,mean_theta,"
        "mean_alpha,mean_sens,mean_spec,studies,p_target,mean_published_fraction,"
        "full_zero_pct,full_le3_pct,full_le5_pct,published_zero_pct,published_le3_pct,"
        "published_le5_pct\n";
  for (const auto& e : s.estimators) {
    os << csv_escape(e.label) << ',' << s.config.replications << ',' << e.ok << ',' << e.failed
       << ',' << format_g(100 * s.true_sauc) << ',' << format_g(100 * e.mean_sauc) << ','
       << format_g(100 * e.sd_sauc) << ',' << format_g(e.mean_theta) << ','
       << format_g(e.mean_alpha) << ',' << format_g(e.mean_sens) << ',' << format_g(e.mean_spec)
       << ',' << sc.studies << ',' << format_g(sc.p_target) << ','
       << format_g(s.mean_published_fraction) << ',' << format_g(s.full.zero) << ','
       << format_g(s.full.le3) << ',' << format_g(s.full.le5) << ',' << format_g(s.published.zero)
       << ',' << format_g(s.published.le3) << ',' << format_g(s.published.le5) << '\n';
  }
  return os.str();
}

std::string render_replications_csv(const SimulationSummary& s) {
  std::ostringstream os;
  os << "replication,published,full_zero_pct,published_zero_pct,estimator,ok,sauc,theta,alpha,"
        "sens,spec,error\n";
  for (const auto& rec : s.replications) {
    for (std::size_t k = 0; k < rec.estimates.size(); ++k) {
      const auto& e = rec.estimates[k];
      os << rec.index << ',' << rec.published << ',' << format_g(rec.full.zero) << ','
         << format_g(rec.published_rates.zero) << ',' << csv_escape(s.estimators[k].label) << ','
         << (e.ok ? 1 : 0) << ',';
      if (e.ok)
        os << format_g(e.sauc) << ',' << format_g(e.theta) << ',' << format_g(e.alpha) << ','
           << format_g(e.sens) << ',' << format_g(e.spec) << ",\n";
      else
        os << "NA,NA,NA,NA,NA," << csv_escape(e.error) << '\n';
    }
  }
  return os.str();
}

json to_json(const SimulationSummary& s) {
  const auto& sc = s.config.scenario;
  json j;
  j["schema_version"] = Report::kSchemaVersion;
  j["kind"] = "simulation";
  j["scenario"] = {{"sens", sc.sens},
                   {"spec", sc.spec},
                   {"beta", sc.beta},
                   {"sigma_theta", sc.sigma_theta},
                   {"sigma_alpha", sc.sigma_alpha},
                   {"n1_range", {sc.n1_min, sc.n1_max}},
                   {"n0_range", {sc.n0_min, sc.n0_max}},
                   {"gamma1", sc.gamma1},
                   {"p_target", sc.p_target},
                   {"c0", sc.c0},
                   {"c1", sc.c1},
                   {"studies", sc.studies},
                   {"seed", sc.seed},
                   {"link", std::string(to_string(sc.link))}};
  j["replications"] = s.config.replications;
  j["true_sauc"] = s.true_sauc;
  j["mean_published_fraction"] = s.mean_published_fraction;
  j["sparsity"] = {{"full", {{"zero", s.full.zero}, {"le3", s.full.le3}, {"le5", s.full.le5}}},
                   {"published",
                    {{"zero", s.published.zero}, {"le3", s.published.le3}, {"le5", s.published.le5}}}};
  j["estimators"] = json::array();
  for (const auto& e : s.estimators)
    j["estimators"].push_back({{"label", e.label},
                               {"ok", e.ok},
                               {"failed", e.failed},
                               {"mean_sauc", num(e.mean_sauc)},
                               {"sd_sauc", num(e.sd_sauc)},
                               {"mean_theta", num(e.mean_theta)},
                               {"mean_alpha", num(e.mean_alpha)},
                               {"mean_sens", num(e.mean_sens)},
                               {"mean_spec", num(e.mean_spec)}});
  j["per_replication"] = json::array();
  for (const auto& rec : s.replications) {
    json r{{"index", rec.index}, {"published", rec.published}, {"estimates", json::array()}};
    for (const auto& e : rec.estimates) {
      json o{{"ok", e.ok}};
      if (e.ok) {
        o["sauc"] = e.sauc;
        o["theta"] = e.theta;
        o["alpha"] = e.alpha;
      } else {
        o["error"] = e.error;
      }
      r["estimates"].push_back(o);
    }
    j["per_replication"].push_back(r);
  }
  return j;
}

// ---- writing -------------------------------------------------------------

std::vector<fs::path> write_files_atomic(const fs::path& dir,
                                         const std::map<std::string, std::string>& files) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir))
    throw IoError("cannot create output directory '" + dir.string() + "'" +
                  (ec ? ": " + ec.message() : std::string()));
  const fs::path probe = dir / ".bbcopas_write_probe";
  {
    std::ofstream out(probe);
    if (!out || !(out << "probe") || !out.flush())
      throw IoError("output directory '" + dir.string() + "' is not writable");
  }
  fs::remove(probe, ec);

  std::vector<fs::path> written;
  for (const auto& [name, content] : files) {
    const fs::path target = dir / name;
    const fs::path tmp = dir / ("." + name + ".tmp");
    {
      std::ofstream out(tmp, std::ios::binary);
      out << content;
      out.flush();
      if (!out) throw IoError("failed writing '" + tmp.string() + "'");
    }
    fs::rename(tmp, target, ec);
    if (ec) throw IoError("cannot rename '" + tmp.string() + "' to '" + target.string() + "': " + ec.message());
    written.push_back(target);
  }
  return written;
}

std::vector<fs::path> emit_report(const Report& report, const std::set<ReportFormat>& formats,
                                  const fs::path& dir) {
  if (report.rows.empty()) throw InvalidArgument("emit_report: no result rows");
  std::map<std::string, std::string> files;
  const std::string stem = report.kind;
  if (formats.count(ReportFormat::csv)) files[stem + ".csv"] = render_csv(report);
  if (formats.count(ReportFormat::json)) files[stem + ".json"] = to_json(report).dump(2) + "\n";
  if (formats.count(ReportFormat::svg))
    for (auto& [name, doc] : render_svgs(report)) files[name] = std::move(doc);
  return write_files_atomic(dir, files);
}

std::vector<fs::path> emit_report(const SimulationSummary& summary,
                                  const std::set<ReportFormat>& formats, const fs::path& dir) {
  std::map<std::string, std::string> files;
  if (formats.count(ReportFormat::csv)) {
    files["simulation_summary.csv"] = render_csv(summary);
    files["simulation_replications.csv"] = render_replications_csv(summary);
  }
  if (formats.count(ReportFormat::json)) files["simulation.json"] = to_json(summary).dump(2) + "\n";
  return write_files_atomic(dir, files);
}

} // namespace bbcopas
