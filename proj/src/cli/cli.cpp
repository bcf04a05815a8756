#include "calitr/cli.hpp"

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "calitr/calibration.hpp"
#include "calitr/dataset.hpp"
#include "calitr/error.hpp"
#include "calitr/io.hpp"
#include "calitr/kernels.hpp"
#include "calitr/nuisance.hpp"
#include "calitr/policy.hpp"
#include "calitr/scenario.hpp"
#include "calitr/simulate.hpp"
#include "calitr/value.hpp"

namespace calitr {

namespace {

namespace fs = std::filesystem;

class Log {
 public:
  Log(std::ostream& err, int level) : err_(err), level_(level) {}
  void info(const std::string& msg) const {
    if (level_ >= 1) err_ << "calitr: " << msg << "\n";
  }
  void debug(const std::string& msg) const {
    if (level_ >= 2) err_ << "calitr: " << msg << "\n";
  }

 private:
  std::ostream& err_;
  int level_;
};

struct Common {
  std::uint64_t seed = 0;
  bool quiet = false;
  bool verbose = false;
};

struct GaFlags {
  int pop = GaConfig{}.population_size;
  int gens = GaConfig{}.generations;
  int restarts = GaConfig{}.restarts;

  void add(CLI::App* app) {
    app->add_option("--ga-pop", pop, "GA population size");
    app->add_option("--ga-gens", gens, "GA generations");
    app->add_option("--ga-restarts", restarts, "GA restarts");
  }
  GaConfig config(std::uint64_t seed) const {
    GaConfig c;
    c.population_size = pop;
    c.generations = gens;
    c.restarts = restarts;
    c.seed = seed;
    c.validate();
    return c;
  }
  json to_json() const { return {{"population", pop}, {"generations", gens}, {"restarts", restarts}}; }
};

Stabilization parse_stabilize(const std::string& s, double gamma) {
  if (s == "default") return CalibrationConfig::for_gamma(gamma).stabilization;
  if (s == "off") return Stabilization::off();
  if (s == "auto") return Stabilization::automatic();
  char* end = nullptr;
  const double a = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0' || !(a > 0.0)) {
    throw Error(Errc::InvalidArgument, "--stabilize expects off, auto, default or a positive number");
  }
  return Stabilization::fixed(a);
}

CalibrationConfig calibration_config(double gamma, const std::string& stabilize,
                                     std::optional<double> tol, std::optional<int> max_iter) {
  CalibrationConfig c = CalibrationConfig::for_gamma(gamma);
  c.stabilization = parse_stabilize(stabilize, gamma);
  if (tol) c.tol = *tol;
  if (max_iter) c.max_iter = *max_iter;
  c.validate();
  return c;
}

// Output locations do not change artifact content, so they stay out of the
// hashed config.
json hashed_config(json cfg) {
  for (const char* key : {"out", "weights_out", "table", "plot", "json"}) cfg.erase(key);
  return cfg;
}

json make_provenance(std::string_view command, std::uint64_t seed, const json& cfg) {
  return provenance(command, seed, hashed_config(cfg));
}

fs::path sidecar_path(const fs::path& weights) { return fs::path(weights.string() + ".json"); }

void write_json(const fs::path& path, const json& j, const Log& log) {
  write_text(path, canonical_dump(j));
  log.info("wrote " + path.string());
}

std::string vec_str(const Vector& v) {
  std::string s = "[";
  for (Index k = 0; k < v.size(); ++k) s += (k ? "," : "") + format_g12(v[k]);
  return s + "]";
}

// ---- calibrate -------------------------------------------------------------

struct CalibrateArgs {
  std::string data, constraints, out, stabilize = "default";
  double gamma = 0.0;
  std::optional<double> tol;
  std::optional<int> max_iter;
  bool allow_infeasible = false;
};

int cmd_calibrate(const CalibrateArgs& a, const Common& c, const Log& log) {
  json cfg = {{"command", "calibrate"}, {"data", a.data}, {"constraints", a.constraints},
              {"gamma", a.gamma}, {"stabilize", a.stabilize}, {"out", a.out},
              {"allow_infeasible", a.allow_infeasible}, {"seed", c.seed}};
  if (a.tol) cfg["tol"] = *a.tol;
  if (a.max_iter) cfg["max_iter"] = *a.max_iter;
  log.info("config " + cfg.dump());

  const ConstraintSpec spec = read_constraint_spec(a.constraints);
  const SourceSample sample = read_sample(a.data);
  spec.validate(sample.p());
  const CalibrationConfig cc = calibration_config(a.gamma, a.stabilize, a.tol, a.max_iter);
  const WeightSolution ws = calibrate(build_constraint_matrix(sample, spec), cc, a.allow_infeasible);
  log.debug("lambda " + vec_str(ws.lambda_hat) + " residual " + format_g12(ws.residual));

  const json prov = make_provenance("calibrate", c.seed, cfg);
  write_text(a.out, provenance_line(prov) + weights_csv(ws));
  log.info("wrote " + a.out);
  json side = weight_diagnostics(ws);
  side["constraints"] = to_json(spec);
  side["provenance"] = prov;
  write_json(sidecar_path(a.out), side, log);
  return kExitOk;
}

// ---- fit-nuisance ----------------------------------------------------------

struct FitArgs {
  std::string data, out, mode = "I";
};

int cmd_fit(const FitArgs& a, const Common& c, const Log& log) {
  const json cfg = {{"command", "fit-nuisance"}, {"data", a.data}, {"mode", a.mode},
                    {"out", a.out}, {"seed", c.seed}};
  log.info("config " + cfg.dump());
  const NuisanceMode mode = parse_mode(a.mode);
  const SourceSample sample = read_sample(a.data);
  const NuisanceFit fit = NuisanceFit::fit(sample, NuisanceOptions::for_mode(mode, c.seed));
  json j = fit.to_json();
  j["n"] = sample.n();
  j["p"] = sample.p();
  j["provenance"] = make_provenance("fit-nuisance", c.seed, cfg);
  write_json(a.out, j, log);
  return kExitOk;
}

// ---- learn -----------------------------------------------------------------

struct LearnArgs {
  std::string data, constraints, out, weights_out, mode = "I", method, stabilize = "default";
  double gamma = 0.0;
  GaFlags ga;
};

int cmd_learn(const LearnArgs& a, const Common& c, const Log& log) {
  json cfg = {{"command", "learn"}, {"data", a.data}, {"constraints", a.constraints},
              {"mode", a.mode}, {"method", a.method}, {"gamma", a.gamma},
              {"stabilize", a.stabilize}, {"out", a.out}, {"weights_out", a.weights_out},
              {"ga", a.ga.to_json()}, {"seed", c.seed}};
  log.info("config " + cfg.dump());

  const NuisanceMode mode = parse_mode(a.mode);
  const GaConfig ga = a.ga.config(c.seed);
  const SourceSample sample = read_sample(a.data);

  std::optional<Method> method;
  if (!a.method.empty()) method = parse_method(a.method);
  std::optional<CalibrationConfig> cal;
  double gamma = a.gamma;
  if (!method) {
    cal = calibration_config(gamma, a.stabilize, std::nullopt, std::nullopt);
  } else if (auto mc = method_calibration(*method)) {
    gamma = mc->gamma;
    cal = calibration_config(gamma, a.stabilize, std::nullopt, std::nullopt);
  }
  const bool qlearn = method && *method == Method::QLearning;

  ConstraintSpec spec;
  if (cal) {
    if (a.constraints.empty()) {
      throw Error(Errc::InvalidArgument, "--constraints is required for calibrated learning");
    }
    spec = read_constraint_spec(a.constraints);
    spec.validate(sample.p());
  }

  // Step 1 (calibration) throws before the nuisance fit and search start.
  const LearnResult r = qlearn ? learn_rule(sample, Method::QLearning, spec, mode, ga, c.seed)
                               : learn_rule(sample, cal, spec, mode, ga, c.seed);
  log.debug("beta " + vec_str(r.rule.beta()));

  json j = rule_to_json(r.rule, r.estimate, r.se);
  j["mode"] = to_string(mode);
  j["method"] = method ? to_string(*method) : std::string("calibrated");
  j["gamma"] = cal ? json(gamma) : json(nullptr);
  j["n"] = sample.n();
  j["ci_lower"] = r.estimate - 1.96 * r.se;
  j["ci_upper"] = r.estimate + 1.96 * r.se;
  j["provenance"] = make_provenance("learn", c.seed, cfg);
  write_json(a.out, j, log);
  if (!a.weights_out.empty()) {
    if (!r.weights) throw Error(Errc::InvalidArgument, "--weights-out needs a calibrated method");
    write_text(a.weights_out, provenance_line(j["provenance"]) + weights_csv(*r.weights));
    json side = weight_diagnostics(*r.weights);
    side["constraints"] = to_json(spec);
    side["provenance"] = j["provenance"];
    write_json(sidecar_path(a.weights_out), side, log);
  }
  return kExitOk;
}

// ---- evaluate --------------------------------------------------------------

struct EvaluateArgs {
  std::string data, rule, weights, target, out, mode = "I";
};

int cmd_evaluate(const EvaluateArgs& a, const Common& c, const Log& log) {
  const json cfg = {{"command", "evaluate"}, {"data", a.data}, {"rule", a.rule},
                    {"weights", a.weights}, {"target", a.target}, {"mode", a.mode},
                    {"out", a.out}, {"seed", c.seed}};
  log.info("config " + cfg.dump());
  const NuisanceMode mode = parse_mode(a.mode);
  const SourceSample sample = read_sample(a.data);
  const LinearRule rule = rule_from_json(read_json(a.rule));
  if (rule.p() != sample.p()) {
    throw Error(Errc::DimensionMismatch, "rule has " + std::to_string(rule.p()) +
                                             " covariates, data has " + std::to_string(sample.p()));
  }
  const NuisanceFit fit = NuisanceFit::fit(sample, NuisanceOptions::for_mode(mode, c.seed));

  ValueEstimate e;
  if (!a.weights.empty()) {
    const Vector w = read_weights(a.weights);
    if (w.size() != sample.n()) {
      throw Error(Errc::LengthMismatch, "weights file has " + std::to_string(w.size()) +
                                            " rows, data has " + std::to_string(sample.n()));
    }
    const json side = read_json(sidecar_path(a.weights));
    if (!side.contains("constraints") || !side.contains("lambda") || !side.contains("gamma")) {
      throw Error(Errc::ParseError, "weights sidecar needs constraints, lambda and gamma");
    }
    const ConstraintSpec spec = constraint_spec_from_json(side["constraints"]);
    spec.validate(sample.p());
    const ConstraintMatrix G = build_constraint_matrix(sample, spec);
    WeightSolution ws;
    ws.gamma = side["gamma"].get<double>();
    const auto lam = side["lambda"].get<std::vector<double>>();
    if (static_cast<Index>(lam.size()) != G.q()) {
      throw Error(Errc::LengthMismatch, "lambda length differs from the number of constraints");
    }
    ws.lambda_hat = Eigen::Map<const Vector>(lam.data(), G.q());
    ws.weights = w;
    ws.W = w * static_cast<double>(sample.n());
    e = estimate_value(sample, rule, fit, Weighting{G, ws});
  } else {
    e = estimate_value(sample, rule, fit);
  }
  json j = e.to_json();
  if (!a.target.empty()) {
    const TargetSample target(read_sample(a.target));
    if (target.p() != sample.p()) throw Error(Errc::DimensionMismatch, "target covariates differ");
    j["target_value"] = evaluate_on_target(target, rule, fit_target_nuisance(target, c.seed));
    j["target_n"] = target.n();
  }
  j["provenance"] = make_provenance("evaluate", c.seed, cfg);
  write_json(a.out, j, log);
  return kExitOk;
}

// ---- report ----------------------------------------------------------------

struct ReportArgs {
  std::vector<std::string> inputs;
  std::string out, json_out;
};

int cmd_report(const ReportArgs& a, const Common& c, std::ostream& out, const Log& log) {
  const json cfg = {{"command", "report"}, {"inputs", a.inputs}, {"out", a.out},
                    {"json", a.json_out}, {"seed", c.seed}};
  log.info("config " + cfg.dump());
  if (a.inputs.empty()) throw Error(Errc::EmptyInput, "report needs at least one estimate file");
  json rows = json::array();
  for (const auto& path : a.inputs) {
    const json e = read_json(path);
    for (const char* key : {"value", "se", "n", "mode"}) {
      if (!e.is_object() || !e.contains(key)) {
        throw Error(Errc::SchemaMismatch, path + ": estimate lacks '" + key + "'");
      }
    }
    if (!e["value"].is_number() || !e["se"].is_number() || !e["mode"].is_string()) {
      throw Error(Errc::SchemaMismatch, path + ": value/se must be numbers and mode a string");
    }
    const double v = e["value"].get<double>(), se = e["se"].get<double>();
    rows.push_back({{"file", path},
                    {"mode", e["mode"]},
                    {"calibrated", e.value("calibrated", false)},
                    {"n", e["n"]},
                    {"value", v},
                    {"se", se},
                    {"ci_lower", v - 1.96 * se},
                    {"ci_upper", v + 1.96 * se}});
  }
  const json prov = make_provenance("report", c.seed, cfg);
  std::string tsv = provenance_line(prov) + "file\tmode\tcalibrated\tn\tvalue\tse\tci_lower\tci_upper\n";
  for (const auto& r : rows) {
    tsv += r["file"].get<std::string>() + "\t" + r["mode"].get<std::string>() + "\t" +
           (r["calibrated"].get<bool>() ? "true" : "false") + "\t" + r["n"].dump() + "\t" +
           format_g12(r["value"].get<double>()) + "\t" + format_g12(r["se"].get<double>()) + "\t" +
           format_g12(r["ci_lower"].get<double>()) + "\t" + format_g12(r["ci_upper"].get<double>()) +
           "\n";
  }
  if (a.out.empty()) {
    out << tsv;
  } else {
    write_text(a.out, tsv);
    log.info("wrote " + a.out);
  }
  if (!a.json_out.empty()) write_json(a.json_out, {{"rows", rows}, {"provenance", prov}}, log);
  return kExitOk;
}

// ---- simulate --------------------------------------------------------------

struct SimulateArgs {
  std::vector<int> scenarios{1};
  std::vector<long> ns{1000};
  std::string design = "obs", mode = "I", methods = "eb,el,orig", out, table, plot;
  int reps = 200;
  long n_target = 100000;
  long pseudo_N = 100000;
  GaFlags ga;
};

std::string cell(const std::optional<double>& v) { return v ? format_g12(*v) : "NA"; }

std::string simulate_table(const std::vector<ReplicationReport>& reports) {
  std::string t = "method\tstatistic";
  for (const auto& r : reports) {
    t += "\ts" + std::to_string(r.config.scenario.scenario) + "_n" + std::to_string(r.config.scenario.n);
  }
  t += "\n";
  t += "truth\tV_t";
  for (const auto& r : reports) t += "\t" + format_g12(r.target_truth);
  t += "\n";
  const auto& methods = reports.front().config.methods;
  using Getter = std::optional<double> (*)(const MethodSummary&);
  const std::vector<std::pair<const char*, Getter>> stats = {
      {"mean", [](const MethodSummary& s) -> std::optional<double> { return s.mean_estimate; }},
      {"sd", [](const MethodSummary& s) { return s.sd; }},
      {"se", [](const MethodSummary& s) -> std::optional<double> { return s.mean_se; }},
      {"cp_plus", [](const MethodSummary& s) { return s.cp_plus; }},
      {"cp_t", [](const MethodSummary& s) -> std::optional<double> { return s.cp_t; }},
      {"pseudo_truth", [](const MethodSummary& s) { return s.pseudo_truth; }},
      {"target_value", [](const MethodSummary& s) -> std::optional<double> { return s.mean_target_value; }},
      {"pcd", [](const MethodSummary& s) -> std::optional<double> { return s.mean_pcd; }},
      {"included", [](const MethodSummary& s) -> std::optional<double> { return s.included; }},
      {"excluded", [](const MethodSummary& s) -> std::optional<double> { return s.excluded; }},
  };
  for (Method m : methods) {
    for (const auto& [name, get] : stats) {
      t += to_string(m) + "\t" + name;
      for (const auto& r : reports) {
        const MethodSummary& s = r.get(m);
        t += "\t" + (s.included == 0 && std::string(name) != "included" && std::string(name) != "excluded"
                         ? std::string("NA")
                         : cell(get(s)));
      }
      t += "\n";
    }
  }
  return t;
}

std::string plot_csv(const std::vector<ReplicationReport>& reports) {
  std::string t = "scenario,n,method,rep,ok,error,estimate,se,target_value,pcd\n";
  for (const auto& r : reports) {
    for (const auto& s : r.methods) {
      for (const auto& rec : s.records) {
        t += std::to_string(r.config.scenario.scenario) + "," + std::to_string(r.config.scenario.n) +
             "," + to_string(s.method) + "," + std::to_string(rec.rep) + "," + (rec.ok ? "1" : "0") +
             "," + rec.error + "," + format_g12(rec.estimate) + "," + format_g12(rec.se) + "," +
             format_g12(rec.target_value) + "," + format_g12(rec.pcd) + "\n";
      }
    }
  }
  return t;
}

int cmd_simulate(const SimulateArgs& a, const Common& c, std::ostream& out, const Log& log) {
  const json cfg = {{"command", "simulate"}, {"scenarios", a.scenarios}, {"ns", a.ns},
                    {"design", a.design}, {"mode", a.mode}, {"methods", a.methods},
                    {"reps", a.reps}, {"n_target", a.n_target}, {"pseudo_N", a.pseudo_N},
                    {"ga", a.ga.to_json()}, {"out", a.out}, {"table", a.table},
                    {"plot", a.plot}, {"seed", c.seed}};
  log.info("config " + cfg.dump());

  StudyConfig base;
  base.scenario.design = parse_design(a.design);
  base.scenario.N_target = a.n_target;
  base.scenario.seed = c.seed;
  base.mode = parse_mode(a.mode);
  base.methods = parse_methods(a.methods);
  base.reps = a.reps;
  base.ga = a.ga.config(c.seed);
  base.pseudo_N = a.pseudo_N;
  base.keep_records = !a.plot.empty();

  std::vector<ReplicationReport> reports;
  for (int sc : a.scenarios) {
    std::optional<StudyTruths> truths;
    for (long n : a.ns) {
      StudyConfig cfg_k = base;
      cfg_k.scenario.scenario = sc;
      cfg_k.scenario.n = n;
      cfg_k.validate();
      const auto t0 = std::chrono::steady_clock::now();
      // Truths depend on the scenario and seed only; reuse across n.
      if (!truths) truths = compute_truths(cfg_k);
      reports.push_back(run_replications(cfg_k, *truths));
      const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      log.info("scenario " + std::to_string(sc) + " n " + std::to_string(n) + " done in " +
               format_g12(secs) + " s");
    }
  }

  const json prov = make_provenance("simulate", c.seed, cfg);
  json studies = json::array();
  for (const auto& r : reports) studies.push_back(r.to_json());
  const json doc = {{"studies", studies}, {"provenance", prov}};
  if (a.out.empty()) {
    out << canonical_dump(doc);
  } else {
    write_json(a.out, doc, log);
  }
  if (!a.table.empty()) {
    write_text(a.table, provenance_line(prov) + simulate_table(reports));
    log.info("wrote " + a.table);
  }
  if (!a.plot.empty()) {
    write_text(a.plot, provenance_line(prov) + plot_csv(reports));
    log.info("wrote " + a.plot);
  }
  return kExitOk;
}

void emit_error(std::ostream& err, std::string_view code, const std::string& message) {
  const json j = {{"error", {{"code", code}, {"message", message}}}};
  err << j.dump() << "\n";
}

void apply_thread_env() {
  const char* env = std::getenv("CALITR_THREADS");
  if (env == nullptr || *env == '\0') return;
  char* end = nullptr;
  const long n = std::strtol(env, &end, 10);
  if (*end != '\0' || n < 1) {
    throw Error(Errc::InvalidArgument, "CALITR_THREADS must be a positive integer");
  }
  set_thread_count(static_cast<int>(n));
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Calibrated individualized treatment rules under covariate shift", "calitr"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_version_flag("--version", std::string(kToolVersion));
  Common common;
  app.add_flag("-q,--quiet", common.quiet, "Only print errors");
  app.add_flag("-v,--verbose", common.verbose, "Print solver details");

  auto seed_opt = [&](CLI::App* sub) {
    sub->add_option("--seed", common.seed, "Random seed (default 0)");
  };

  CalibrateArgs ca;
  CLI::App* cal = app.add_subcommand("calibrate", "Solve calibration weights");
  cal->add_option("--data", ca.data, "Source CSV (y,a,x1..xp)")->required();
  cal->add_option("--constraints", ca.constraints, "Constraint spec JSON")->required();
  cal->add_option("--gamma", ca.gamma, "Cressie-Read gamma");
  cal->add_option("--stabilize", ca.stabilize, "off, auto, default or a fixed a_n");
  cal->add_option("--tol", ca.tol, "Dual residual tolerance");
  cal->add_option("--max-iter", ca.max_iter, "Newton iteration cap");
  cal->add_flag("--allow-infeasible", ca.allow_infeasible, "Solve even outside the convex hull");
  cal->add_option("--out", ca.out, "Weights CSV; diagnostics go to <out>.json")->required();
  seed_opt(cal);

  FitArgs fa;
  CLI::App* fit = app.add_subcommand("fit-nuisance", "Fit propensity and outcome models");
  fit->add_option("--data", fa.data, "Source CSV")->required();
  fit->add_option("--mode", fa.mode, "I (parametric) or II (nonparametric)");
  fit->add_option("--out", fa.out, "Nuisance JSON")->required();
  seed_opt(fit);

  LearnArgs la;
  CLI::App* learn = app.add_subcommand("learn", "Calibrate, fit nuisances and search the rule");
  learn->add_option("--data", la.data, "Source CSV")->required();
  learn->add_option("--constraints", la.constraints, "Constraint spec JSON");
  learn->add_option("--gamma", la.gamma, "Cressie-Read gamma");
  learn->add_option("--method", la.method, "eb, el, ls, orig or qlearn (overrides --gamma)");
  learn->add_option("--mode", la.mode, "I or II");
  learn->add_option("--stabilize", la.stabilize, "off, auto, default or a fixed a_n");
  learn->add_option("--out", la.out, "Rule JSON")->required();
  learn->add_option("--weights-out", la.weights_out, "Also write the calibration weights CSV");
  la.ga.add(learn);
  seed_opt(learn);

  EvaluateArgs ea;
  CLI::App* ev = app.add_subcommand("evaluate", "Estimate the value of a given rule");
  ev->add_option("--data", ea.data, "Source CSV")->required();
  ev->add_option("--rule", ea.rule, "Rule JSON")->required();
  ev->add_option("--weights", ea.weights, "Weights CSV from calibrate (needs its .json sidecar)");
  ev->add_option("--target", ea.target, "Target CSV for a target-sample AIPW evaluation");
  ev->add_option("--mode", ea.mode, "I or II");
  ev->add_option("--out", ea.out, "Estimate JSON")->required();
  seed_opt(ev);

  ReportArgs ra;
  CLI::App* rep = app.add_subcommand("report", "Merge estimate files into one table");
  rep->add_option("inputs", ra.inputs, "Estimate JSON files");
  rep->add_option("--out", ra.out, "TSV path (stdout when omitted)");
  rep->add_option("--json", ra.json_out, "Also write the merged rows as JSON");

  SimulateArgs sa;
  CLI::App* sim = app.add_subcommand("simulate", "Run the replication study");
  sim->add_option("--scenario", sa.scenarios, "Scenario(s) 1..4")->delimiter(',');
  sim->add_option("--n", sa.ns, "Source sample size(s)")->delimiter(',');
  sim->add_option("--design", sa.design, "obs or rand");
  sim->add_option("--mode", sa.mode, "I or II");
  sim->add_option("--methods", sa.methods, "Comma list of eb, el, ls, orig, qlearn");
  sim->add_option("--reps", sa.reps, "Replications");
  sim->add_option("--n-target", sa.n_target, "Target pool size");
  sim->add_option("--pseudo-n", sa.pseudo_N, "Source draw size for pseudo-population truths");
  sim->add_option("--out", sa.out, "Report JSON (stdout when omitted)");
  sim->add_option("--table", sa.table, "TSV summary table");
  sim->add_option("--emit-plot-data", sa.plot, "Per-replication CSV");
  sa.ga.add(sim);
  seed_opt(sim);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::CallForVersion& e) {
    out << kToolVersion << "\n";
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    emit_error(err, code_string(Errc::InvalidArgument), e.what());
    return kExitValidation;
  }

  const Log log(err, common.quiet ? 0 : (common.verbose ? 2 : 1));
  try {
    apply_thread_env();
    if (*cal) return cmd_calibrate(ca, common, log);
    if (*fit) return cmd_fit(fa, common, log);
    if (*learn) return cmd_learn(la, common, log);
    if (*ev) return cmd_evaluate(ea, common, log);
    if (*rep) return cmd_report(ra, common, out, log);
    if (*sim) return cmd_simulate(sa, common, out, log);
  } catch (const Error& e) {
    emit_error(err, e.code_name(), e.what());
    return e.kind() == ErrorKind::Numerical ? kExitNumerical : kExitValidation;
  } catch (const json::exception& e) {
    emit_error(err, code_string(Errc::ParseError), e.what());
    return kExitValidation;
  } catch (const std::exception& e) {
    emit_error(err, "internal.error", e.what());
    return kExitNumerical;
  }
  return kExitValidation;
}

}  // namespace calitr
