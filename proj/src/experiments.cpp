#include "sdelaw/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <stdexcept>

#include "sdelaw/general_linear.hpp"
#include "sdelaw/variance.hpp"

namespace sdelaw {

namespace {

std::string constant_formula_name(ConstantFormula id) {
  switch (id) {
    case ConstantFormula::beta_case1: return "beta_case1";
    case ConstantFormula::beta_case2: return "beta_case2";
    case ConstantFormula::xi_eq_h: return "xi_eq_h";
    case ConstantFormula::theta: return "theta";
    case ConstantFormula::pc_em_bem: return "pc_em_bem";
    case ConstantFormula::numeric_extrapolation: return "numeric_extrapolation";
  }
  return "unknown";
}

std::string csv_quote(const std::string& field) {
  if (field.find_first_of(",\"\n") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

SchemeSpec parse_scheme(const nlohmann::json& doc, const std::string& key) {
  SchemeSpec spec;
  if (!doc.contains(key)) return spec;
  const auto& node = doc.at(key);
  if (node.contains("family")) spec.family = family_from_name(node.at("family"));
  if (node.contains("param")) spec.param = node.at("param");
  if (node.contains("N")) spec.N = node.at("N");
  if (spec.N < 1) throw std::invalid_argument("config." + key + ".N: must be >= 1");
  return spec;
}

StepScheme build_from_spec(const SchemeSpec& spec, double T) {
  return build_scheme_tn(spec.family, spec.param, T, spec.N);
}

}  // namespace

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void ResultTable::add_row(std::initializer_list<double> values) {
  std::vector<std::string> row;
  row.reserve(values.size());
  for (double v : values) row.push_back(format_double(v));
  rows.push_back(std::move(row));
}

void ResultTable::add_row(std::vector<std::string> values) { rows.push_back(std::move(values)); }

std::string ResultTable::to_csv() const {
  std::string out;
  for (std::size_t c = 0; c < columns.size(); ++c) {
    if (c) out += ',';
    out += csv_quote(columns[c]);
  }
  out += '\n';
  for (const auto& row : rows) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) out += ',';
      out += csv_quote(row[c]);
    }
    out += '\n';
  }
  return out;
}

nlohmann::json ResultTable::to_json() const {
  nlohmann::json doc;
  doc["columns"] = columns;
  doc["rows"] = rows;
  doc["metadata"] = metadata;
  return doc;
}

nlohmann::json ExperimentConfig::effective() const {
  nlohmann::json doc;
  doc["experiment"] = experiment;
  doc["model"] = {{"alpha", model.alpha}, {"x0", model.x0}, {"y0", model.y0}, {"T", model.T}};
  doc["scheme"] = {{"family", family_name(scheme.family)},
                   {"param", scheme.param},
                   {"N", scheme.N}};
  doc["T_list"] = T_list;
  doc["N_list"] = N_list;
  doc["M"] = M;
  doc["seed"] = seed;
  doc["chunk"] = chunk;
  doc["workers"] = workers;
  doc["lambda"] = {{"lo", lambda_grid.lo}, {"step", lambda_grid.step}, {"count", lambda_grid.count}};
  doc["normalization"] =
      normalization == MgfNormalization::inv_n0_squared ? "n0_squared" : "n0";
  doc["compare"] = {
      {"symplectic",
       {{"family", family_name(compare_symplectic.family)},
        {"param", compare_symplectic.param},
        {"N", compare_symplectic.N}}},
      {"nonsymplectic",
       {{"family", family_name(compare_nonsymplectic.family)},
        {"param", compare_nonsymplectic.param},
        {"N", compare_nonsymplectic.N}}},
      {"epsilon", epsilon}};
  return doc;
}

ExperimentConfig parse_config(const nlohmann::json& doc) {
  ExperimentConfig cfg;
  if (!doc.contains("experiment"))
    throw std::invalid_argument("config.experiment: missing");
  cfg.experiment = doc.at("experiment");
  static const std::vector<std::string> known = {"variance_scan", "constants",       "clt",
                                                 "ldp_estimate",  "compare",         "general_linear"};
  if (std::find(known.begin(), known.end(), cfg.experiment) == known.end())
    throw std::invalid_argument("config.experiment: unknown experiment '" + cfg.experiment + "'");

  if (doc.contains("model")) {
    const auto& m = doc.at("model");
    cfg.model = OscillatorModel(m.value("alpha", 1.0), m.value("x0", 1.0), m.value("y0", 0.0),
                                m.value("T", 20.0));
  }
  cfg.scheme = parse_scheme(doc, "scheme");
  if (doc.contains("T_list")) {
    cfg.T_list = doc.at("T_list").get<std::vector<double>>();
    if (cfg.T_list.empty()) throw std::invalid_argument("config.T_list: must be non-empty");
  }
  if (doc.contains("N_list")) {
    cfg.N_list = doc.at("N_list").get<std::vector<std::size_t>>();
    if (cfg.N_list.empty()) throw std::invalid_argument("config.N_list: must be non-empty");
  }
  cfg.M = doc.value("M", cfg.M);
  if (cfg.M < 1) throw std::invalid_argument("config.M: must be >= 1");
  cfg.seed = doc.value("seed", cfg.seed);
  cfg.chunk = doc.value("chunk", cfg.chunk);
  cfg.workers = doc.value("workers", cfg.workers);
  if (doc.contains("lambda")) {
    const auto& l = doc.at("lambda");
    cfg.lambda_grid.lo = l.value("lo", cfg.lambda_grid.lo);
    cfg.lambda_grid.step = l.value("step", cfg.lambda_grid.step);
    cfg.lambda_grid.count = l.value("count", cfg.lambda_grid.count);
    if (cfg.lambda_grid.count < 3 || !(cfg.lambda_grid.step > 0))
      throw std::invalid_argument("config.lambda: need step > 0 and count >= 3");
  }
  if (doc.contains("normalization")) {
    const std::string n = doc.at("normalization");
    if (n == "n0_squared")
      cfg.normalization = MgfNormalization::inv_n0_squared;
    else if (n == "n0")
      cfg.normalization = MgfNormalization::inv_n0;
    else
      throw std::invalid_argument("config.normalization: expected 'n0_squared' or 'n0'");
  }
  if (doc.contains("compare")) {
    const auto& c = doc.at("compare");
    cfg.compare_symplectic = parse_scheme(c, "symplectic");
    cfg.compare_nonsymplectic = parse_scheme(c, "nonsymplectic");
    cfg.epsilon = c.value("epsilon", cfg.epsilon);
    if (!(cfg.epsilon > 0)) throw std::invalid_argument("config.compare.epsilon: must be > 0");
  }
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config file: " + path.string());
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::parse_error& e) {
    throw std::invalid_argument(path.string() + ": " + e.what());
  }
  return parse_config(doc);
}

std::uint64_t config_hash(const ExperimentConfig& config) {
  const std::string dump = config.effective().dump();
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char c : dump) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

namespace {

ResultTable run_variance_scan(const ExperimentConfig& cfg) {
  ResultTable table;
  table.columns = {"T",  "N", "h", "var_emp_over_h2", "bootstrap_se_over_h2",
                   "var_closed_over_h2", "K_T"};
  MCConfig mc{cfg.M, cfg.seed, cfg.chunk};
  const auto rows = mc_variance_scan(cfg.model, cfg.scheme.family, cfg.scheme.param,
                                     cfg.T_list, cfg.scheme.N, mc);
  for (const auto& r : rows)
    table.add_row({r.T, static_cast<double>(r.N), r.h, r.var_emp_over_h2,
                   r.bootstrap_se_over_h2, r.var_closed_over_h2, r.K_T});
  return table;
}

ResultTable run_constants(const ExperimentConfig& cfg) {
  ResultTable table;
  table.columns = {"family", "param", "K_T", "formula"};
  struct Entry {
    SchemeFamily family;
    double param;
  };
  const std::vector<Entry> catalog = {
      {SchemeFamily::beta, 0.0},
      {SchemeFamily::beta, 0.25},
      {SchemeFamily::beta, 0.5},
      {SchemeFamily::beta, 0.75},
      {SchemeFamily::beta, 1.0},
      {SchemeFamily::beta, 0.5 - std::sqrt(6.0) / 6.0},
      {SchemeFamily::beta, 0.5 + std::sqrt(6.0) / 6.0},
      {SchemeFamily::theta, 0.0},
      {SchemeFamily::theta, 0.25},
      {SchemeFamily::theta, 1.0},
      {SchemeFamily::exponential, 0.0},
      {SchemeFamily::integral, 0.0},
      {SchemeFamily::optimal, 0.0},
      {SchemeFamily::half_h, 0.0},
      {SchemeFamily::pc_em_bem, 0.0},
  };
  for (const auto& e : catalog) {
    const ErrorConstant k = error_constant(e.family, e.param, cfg.model.alpha, cfg.model.T);
    table.add_row({family_name(e.family), format_double(e.param), format_double(k.K_T),
                   constant_formula_name(k.formula_id)});
  }
  return table;
}

ResultTable run_clt(const ExperimentConfig& cfg) {
  const StepScheme scheme = build_from_spec(cfg.scheme, cfg.model.T);
  const ErrorConstant k =
      error_constant(cfg.scheme.family, cfg.scheme.param, cfg.model.alpha, cfg.model.T);
  const CltReport rep = clt_check(cfg.model, scheme, k.K_T, cfg.M, cfg.seed);
  ResultTable table;
  table.columns = {"M", "ks_statistic", "ks_critical_1pct", "m2_gap", "m4_gap"};
  table.add_row({static_cast<double>(rep.M), rep.ks_statistic, rep.ks_critical_1pct,
                 rep.m2_gap, rep.m4_gap});
  return table;
}

ResultTable run_ldp_estimate(const ExperimentConfig& cfg) {
  const StepScheme scheme = build_from_spec(cfg.scheme, cfg.model.T);
  const RateEstimate est =
      estimate_rate_function(cfg.model, scheme, cfg.lambda_grid, cfg.M, cfg.seed,
                             cfg.normalization, cfg.workers);
  ResultTable table;
  table.columns = {"lambda", "Lambda", "y", "I", "usable"};
  for (std::size_t j = 0; j < est.lambdas.size(); ++j)
    table.add_row({format_double(est.lambdas[j]), format_double(est.Lambda_vals[j]),
                   format_double(est.y_vals[j]), format_double(est.I_vals[j]),
                   est.usable[j] ? "1" : "0"});
  table.metadata["nonconvex_count"] = est.nonconvex_count;
  table.metadata["truncated"] = est.truncated;
  try {
    const RateCurvatureFit fit = fit_rate_curvature(est);
    table.metadata["fit_curvature"] = fit.curvature;
    table.metadata["fit_points_used"] = fit.points_used;
    const ErrorConstant k =
        error_constant(cfg.scheme.family, cfg.scheme.param, cfg.model.alpha, cfg.model.T);
    table.metadata["closed_form_curvature"] =
        rate_function_closed(k.K_T, cfg.model.T).curvature();
  } catch (const std::exception& e) {
    table.metadata["fit_error"] = e.what();
  }
  return table;
}

ResultTable run_compare(const ExperimentConfig& cfg) {
  const double T = cfg.model.T;
  const StepScheme s = build_from_spec(cfg.compare_symplectic, T);
  const StepScheme ns = build_from_spec(cfg.compare_nonsymplectic, T);
  const double K_s = error_constant(cfg.compare_symplectic.family, cfg.compare_symplectic.param,
                                    cfg.model.alpha, T)
                         .K_T;
  const double K_ns = error_constant(cfg.compare_nonsymplectic.family,
                                     cfg.compare_nonsymplectic.param, cfg.model.alpha, T)
                          .K_T;
  const ErrorLaw law_s = variance_brute(cfg.model, s);
  const ErrorLaw law_ns = variance_brute(cfg.model, ns);
  const ComparisonReport rep =
      compare_methods(K_s, K_ns, T, cfg.epsilon, cfg.compare_symplectic.N, law_s, law_ns);
  ResultTable table;
  table.columns = {"K_s",
                   "K_ns",
                   "T",
                   "epsilon",
                   "N",
                   "R_eps",
                   "log_ratio_bound",
                   "log_tail_centered_s",
                   "log_tail_centered_ns",
                   "log_tail_eps_s",
                   "log_tail_eps_ns",
                   "centered_inequality_holds",
                   "ratio_bound_holds"};
  table.add_row({rep.K_s, rep.K_ns, rep.T, rep.epsilon, static_cast<double>(rep.N), rep.R_eps,
                 rep.log_ratio_bound, rep.log_tail_centered_s, rep.log_tail_centered_ns,
                 rep.log_tail_eps_s, rep.log_tail_eps_ns,
                 rep.centered_inequality_holds ? 1.0 : 0.0, rep.ratio_bound_holds ? 1.0 : 0.0});
  return table;
}

ResultTable run_general_linear(const ExperimentConfig& cfg) {
  const LinearModel lin = oscillator_as_linear(cfg.model);
  const auto factory = [&](std::size_t N) {
    return scheme_as_general(
        build_scheme_tn(cfg.scheme.family, cfg.scheme.param, cfg.model.T, N), cfg.model.alpha);
  };
  const VectorErrorLaw law = extrapolate_error_constants(lin, factory, cfg.N_list);
  ResultTable table;
  table.columns = {"H_11", "H_12", "H_21", "H_22", "K_1", "K_2", "remainder_order",
                   "mean_1", "mean_2"};
  table.add_row({law.H_T(0, 0), law.H_T(0, 1), law.H_T(1, 0), law.H_T(1, 1), law.H_T(0, 0),
                 law.H_T(1, 1), law.remainder_order, law.mean(0), law.mean(1)});
  table.metadata["quad_delta"] = law.quad_delta;
  return table;
}

}  // namespace

ResultTable run_experiment(const ExperimentConfig& config) {
  ResultTable table;
  if (config.experiment == "variance_scan")
    table = run_variance_scan(config);
  else if (config.experiment == "constants")
    table = run_constants(config);
  else if (config.experiment == "clt")
    table = run_clt(config);
  else if (config.experiment == "ldp_estimate")
    table = run_ldp_estimate(config);
  else if (config.experiment == "compare")
    table = run_compare(config);
  else if (config.experiment == "general_linear")
    table = run_general_linear(config);
  else
    throw std::invalid_argument("unknown experiment: " + config.experiment);

  table.metadata["experiment"] = config.experiment;
  table.metadata["seed"] = config.seed;
  table.metadata["config_hash"] = config_hash(config);
  table.metadata["effective_config"] = config.effective();
  return table;
}

ResultTable list_catalog() {
  ResultTable table;
  table.columns = {"family", "param_range", "symplectic", "constant_formula"};
  table.add_row({"beta", "beta in [0,1]", "true", "beta_case1|beta_case2"});
  table.add_row({"theta", "theta in [0,1/2) u (1/2,1]", "false", "theta"});
  table.add_row({"exponential", "-", "true", "xi_eq_h"});
  table.add_row({"integral", "-", "true", "xi_eq_h"});
  table.add_row({"optimal", "-", "true", "xi_eq_h"});
  table.add_row({"half_h", "-", "true", "xi_eq_h"});
  table.add_row({"pc_em_bem", "-", "false", "pc_em_bem"});
  table.add_row({"custom", "user coefficients", "depends", "numeric_extrapolation"});
  return table;
}

std::filesystem::path write_result(const ResultTable& table, const ExperimentConfig& config,
                                   const std::filesystem::path& out_dir,
                                   const std::string& format) {
  std::filesystem::create_directories(out_dir);
  const std::string stem = config.experiment;
  std::filesystem::path data_path;
  if (format == "csv") {
    data_path = out_dir / (stem + ".csv");
    std::ofstream out(data_path, std::ios::binary);
    out << table.to_csv();
  } else if (format == "json") {
    data_path = out_dir / (stem + ".json");
    std::ofstream out(data_path, std::ios::binary);
    out << table.to_json().dump(2) << '\n';
  } else {
    throw std::invalid_argument("unknown output format: " + format);
  }
  const std::filesystem::path meta_path = out_dir / (stem + ".meta.json");
  std::ofstream meta(meta_path, std::ios::binary);
  meta << table.metadata.dump(2) << '\n';
  return data_path;
}

}  // namespace sdelaw
