#include "calitr/simulate.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <memory>
#include <sstream>

#include "calitr/error.hpp"
#include "calitr/kernels.hpp"
#include "calitr/random.hpp"
#include "calitr/value.hpp"

namespace calitr {

namespace {

// Stream ids for draws that are not replications. Replication r uses stream r.
constexpr std::uint64_t kTargetStream = 0x7461726765740000ULL;
constexpr std::uint64_t kPseudoStream = 0x70736575646f0000ULL;

std::uint64_t gamma_tag(double gamma) {
  return static_cast<std::uint64_t>(std::llround((gamma + 10.0) * 1000.0));
}

CovariatePool make_pool(Matrix X, Vector weights) {
  CovariatePool pool;
  pool.mu = outcome_table(X);
  pool.X = std::move(X);
  pool.weights = std::move(weights);
  return pool;
}

double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

}  // namespace

double CovariatePool::value(const LinearRule& rule) const {
  const IntVector d = rule.decisions(X);
  double s = 0.0;
  for (Index i = 0; i < X.rows(); ++i) s += weights[i] * mu(i, d[i]);
  return s;
}

BatchValueFn CovariatePool::batch_value() const {
  auto xt = std::make_shared<const Matrix>(with_intercept(X));
  auto c = std::make_shared<const Vector>(weights.cwiseProduct(mu.col(1) - mu.col(0)));
  const double base = weights.dot(mu.col(0));
  return [xt, c, base](const Matrix& betas) {
    return kernels::omp::rule_values(*xt, *c, base, betas);
  };
}

CovariatePool target_pool(int scenario, Index N, std::uint64_t seed) {
  Rng rng = make_rng(seed, kTargetStream);
  Matrix X = sample_target_covariates(scenario, N, rng);
  return make_pool(std::move(X), Vector::Constant(N, 1.0 / static_cast<double>(N)));
}

Truth grid_truth(const CovariatePool& pool, const RefineConfig& refine) {
  const SearchResult r = grid_refine_sphere(pool.batch_value(), pool.X.cols(), refine);
  return {r.rule, r.value};
}

ConstraintSpec scenario_constraints(int scenario, const std::vector<int>& covariates) {
  const Vector all = target_means(scenario);
  Vector t(static_cast<Index>(covariates.size()));
  for (std::size_t k = 0; k < covariates.size(); ++k) {
    const int j = covariates[k];
    if (j < 1 || j > kScenarioP) {
      throw Error(Errc::IndexOutOfRange, "scenario covariate index must lie in 1..3");
    }
    t[static_cast<Index>(k)] = all[j - 1];
  }
  return ConstraintSpec::covariate_means(covariates, t);
}

CovariatePool pseudo_pool(int scenario, double gamma, const ConstraintSpec& spec, Index N,
                          std::uint64_t seed) {
  Rng rng = make_rng(seed, kPseudoStream + gamma_tag(gamma));
  Matrix X = sample_source_covariates(scenario, N, rng);
  CalibrationConfig cfg = CalibrationConfig::for_gamma(gamma);
  cfg.stabilization = Stabilization::off();
  const WeightSolution ws = calibrate(build_constraint_matrix(X, spec), cfg);
  return make_pool(std::move(X), ws.weights);
}

double density_ratio_mse(int scenario, const std::vector<int>& covariates, double gamma, Index N,
                         std::uint64_t seed) {
  if (scenario < 2 || scenario > 4) {
    throw Error(Errc::UnsupportedScenario, "density-ratio MSE needs scenario 2, 3 or 4");
  }
  Rng rng = make_rng(seed, kPseudoStream + gamma_tag(gamma));
  const Matrix X = sample_source_covariates(scenario, N, rng);
  CalibrationConfig cfg = CalibrationConfig::for_gamma(gamma);
  cfg.stabilization = Stabilization::off();
  const WeightSolution ws =
      calibrate(build_constraint_matrix(X, scenario_constraints(scenario, covariates)), cfg);
  return density_ratio_mse(scenario, X, ws.W);
}

double density_ratio_mse(int scenario, const Matrix& X, const Vector& W) {
  if (scenario < 2 || scenario > 4) {
    throw Error(Errc::UnsupportedScenario, "density-ratio MSE needs scenario 2, 3 or 4");
  }
  if (W.size() != X.rows()) throw Error(Errc::LengthMismatch, "one weight per row expected");
  double s = 0.0;
  for (Index i = 0; i < X.rows(); ++i) {
    const double e = W[i] - true_density_ratio(scenario, X.row(i));
    s += e * e;
  }
  return s / static_cast<double>(X.rows());
}

std::string to_string(Method m) {
  switch (m) {
    case Method::EB: return "eb";
    case Method::EL: return "el";
    case Method::LS: return "ls";
    case Method::Original: return "orig";
    case Method::QLearning: return "qlearn";
  }
  return "?";
}

Method parse_method(const std::string& s) {
  std::string u = s;
  std::transform(u.begin(), u.end(), u.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (u == "eb") return Method::EB;
  if (u == "el") return Method::EL;
  if (u == "ls") return Method::LS;
  if (u == "orig" || u == "original") return Method::Original;
  if (u == "qlearn" || u == "q") return Method::QLearning;
  throw Error(Errc::InvalidArgument, "unknown method '" + s + "'");
}

std::vector<Method> parse_methods(const std::string& csv) {
  std::vector<Method> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    const Method m = parse_method(item);
    if (std::find(out.begin(), out.end(), m) == out.end()) out.push_back(m);
  }
  if (out.empty()) throw Error(Errc::InvalidArgument, "no methods given");
  return out;
}

std::optional<CalibrationConfig> method_calibration(Method m) {
  switch (m) {
    case Method::EB: return CalibrationConfig::for_gamma(0.0);
    case Method::EL: return CalibrationConfig::for_gamma(-1.0);
    case Method::LS: return CalibrationConfig::for_gamma(1.0);
    default: return std::nullopt;
  }
}

void StudyConfig::validate() const {
  scenario.validate();
  ga.validate();
  if (reps < 1) throw Error(Errc::InvalidArgument, "reps must be positive");
  if (methods.empty()) throw Error(Errc::InvalidArgument, "no methods given");
  if (pseudo_N < 1000) throw Error(Errc::InvalidArgument, "pseudo_N must be at least 1000");
}

namespace {

struct Calibrated {
  ConstraintMatrix G;
  WeightSolution ws;
};

std::optional<Calibrated> calibrate_for(const SourceSample& sample,
                                        const std::optional<CalibrationConfig>& calibration,
                                        const ConstraintSpec& spec) {
  if (!calibration) return std::nullopt;
  ConstraintMatrix G = build_constraint_matrix(sample.X(), spec);
  WeightSolution ws = calibrate(G, *calibration);
  return Calibrated{std::move(G), std::move(ws)};
}

LearnResult search(const SourceSample& sample, const std::optional<Calibrated>& cal,
                   const NuisanceFit& fit, const GaConfig& ga, std::uint64_t seed) {
  std::optional<Weighting> weighting;
  if (cal) weighting.emplace(Weighting{cal->G, cal->ws});
  const Vector w = cal ? cal->ws.weights
                       : Vector::Constant(sample.n(), 1.0 / static_cast<double>(sample.n()));
  const RuleValue value(sample.X(), psi_table(sample, fit.at_sample()), w);
  GaConfig g = ga;
  g.seed = seed;
  const SearchResult found =
      ga_optimize([&](const Matrix& B) { return value.batch(B); }, sample.p(), g);
  const ValueEstimate e = estimate_value(sample, found.rule, fit, weighting);
  std::optional<WeightSolution> ws;
  if (cal) ws = cal->ws;
  return {found.rule, e.value, e.se, std::move(ws)};
}

LearnResult q_learning(const SourceSample& sample, const NuisanceFit& fit) {
  const LinearRule rule = q_learning_rule(sample);
  const ValueEstimate e = estimate_value(sample, rule, fit);
  return {rule, e.value, e.se, std::nullopt};
}

}  // namespace

LearnResult learn_rule(const SourceSample& sample, const std::optional<CalibrationConfig>& calibration,
                       const ConstraintSpec& spec, const NuisanceFit& fit, const GaConfig& ga,
                       std::uint64_t seed) {
  return search(sample, calibrate_for(sample, calibration, spec), fit, ga, seed);
}

LearnResult learn_rule(const SourceSample& sample, Method method, const ConstraintSpec& spec,
                       const NuisanceFit& fit, const GaConfig& ga, std::uint64_t seed) {
  if (method == Method::QLearning) return q_learning(sample, fit);
  return learn_rule(sample, method_calibration(method), spec, fit, ga, seed);
}

LearnResult learn_rule(const SourceSample& sample, const std::optional<CalibrationConfig>& calibration,
                       const ConstraintSpec& spec, NuisanceMode mode, const GaConfig& ga,
                       std::uint64_t seed) {
  const std::optional<Calibrated> cal = calibrate_for(sample, calibration, spec);
  const NuisanceFit fit = NuisanceFit::fit(sample, NuisanceOptions::for_mode(mode, seed));
  return search(sample, cal, fit, ga, seed);
}

LearnResult learn_rule(const SourceSample& sample, Method method, const ConstraintSpec& spec,
                       NuisanceMode mode, const GaConfig& ga, std::uint64_t seed) {
  if (method == Method::QLearning) {
    return q_learning(sample, NuisanceFit::fit(sample, NuisanceOptions::for_mode(mode, seed)));
  }
  return learn_rule(sample, method_calibration(method), spec, mode, ga, seed);
}

StudyTruths compute_truths(const StudyConfig& config) {
  const ScenarioSpec& sc = config.scenario;
  CovariatePool target = target_pool(sc.scenario, sc.N_target, sc.seed);
  Truth opt = grid_truth(target, config.refine);
  StudyTruths t{std::move(target), std::move(opt), {}};
  const ConstraintSpec spec = scenario_constraints(sc.scenario);
  for (Method m : config.methods) {
    const auto cfg = method_calibration(m);
    if (!cfg) {
      t.pseudo_opt.emplace_back();
      continue;
    }
    const CovariatePool pool = pseudo_pool(sc.scenario, cfg->gamma, spec, config.pseudo_N, sc.seed);
    t.pseudo_opt.emplace_back(grid_truth(pool, config.refine));
  }
  return t;
}

const MethodSummary& ReplicationReport::get(Method m) const {
  for (const auto& s : methods) {
    if (s.method == m) return s;
  }
  throw Error(Errc::InvalidArgument, "method " + to_string(m) + " not in report");
}

ReplicationReport run_replications(const StudyConfig& config) {
  config.validate();
  return run_replications(config, compute_truths(config));
}

ReplicationReport run_replications(const StudyConfig& config, const StudyTruths& truths) {
  config.validate();
  const ScenarioSpec& sc = config.scenario;
  const ConstraintSpec spec = scenario_constraints(sc.scenario);
  const auto reps = static_cast<std::size_t>(config.reps);
  const std::size_t M = config.methods.size();
  std::vector<std::vector<ReplicationRecord>> rec(M, std::vector<ReplicationRecord>(reps));

  kernels::omp::for_each(reps, [&](std::size_t r) {
    Rng rng = make_rng(sc.seed, r);
    const SourceSample sample = generate_source(sc, rng);
    const std::uint64_t seed_r = derive_seed(sc.seed, r);
    std::optional<NuisanceFit> fit;
    std::string fit_error;
    try {
      fit.emplace(NuisanceFit::fit(sample, NuisanceOptions::for_mode(config.mode, seed_r)));
    } catch (const Error& e) {
      fit_error = std::string(e.code_name());
    }
    for (std::size_t k = 0; k < M; ++k) {
      ReplicationRecord& out = rec[k][r];
      out.rep = static_cast<int>(r);
      if (!fit) {
        out.error = fit_error;
        continue;
      }
      try {
        const LearnResult lr = learn_rule(sample, config.methods[k], spec, *fit, config.ga, seed_r);
        out.ok = std::isfinite(lr.estimate) && std::isfinite(lr.se);
        if (!out.ok) out.error = "value.non_finite";
        out.estimate = lr.estimate;
        out.se = lr.se;
        out.beta = lr.rule.beta();
        out.target_value = truths.target.value(lr.rule);
        out.pcd = pcd(lr.rule, truths.target_opt.rule, truths.target.X);
      } catch (const Error& e) {
        out.ok = false;
        out.error = std::string(e.code_name());
      }
    }
  });

  ReplicationReport report;
  report.config = config;
  report.target_truth = truths.target_opt.value;
  report.target_beta = truths.target_opt.rule.beta();
  for (std::size_t k = 0; k < M; ++k) {
    MethodSummary s;
    s.method = config.methods[k];
    if (k < truths.pseudo_opt.size() && truths.pseudo_opt[k]) {
      s.pseudo_truth = truths.pseudo_opt[k]->value;
    }
    std::vector<double> est, se, tv, pc;
    int cover_plus = 0, cover_t = 0;
    for (const auto& r : rec[k]) {
      if (!r.ok) {
        ++s.excluded;
        continue;
      }
      ++s.included;
      est.push_back(r.estimate);
      se.push_back(r.se);
      tv.push_back(r.target_value);
      pc.push_back(r.pcd);
      if (std::abs(r.estimate - report.target_truth) <= 1.96 * r.se) ++cover_t;
      if (s.pseudo_truth && std::abs(r.estimate - *s.pseudo_truth) <= 1.96 * r.se) ++cover_plus;
    }
    if (s.included > 0) {
      const double n = static_cast<double>(s.included);
      s.mean_estimate = mean(est);
      s.mean_se = mean(se);
      s.mean_target_value = mean(tv);
      s.mean_pcd = mean(pc);
      s.cp_t = 100.0 * cover_t / n;
      if (s.pseudo_truth) s.cp_plus = 100.0 * cover_plus / n;
      if (s.included >= 2) {
        double ss = 0.0;
        for (double x : est) ss += (x - s.mean_estimate) * (x - s.mean_estimate);
        s.sd = std::sqrt(ss / (n - 1.0));
      }
    }
    if (config.keep_records) s.records = std::move(rec[k]);
    report.methods.push_back(std::move(s));
  }
  return report;
}

nlohmann::json ReplicationReport::to_json() const {
  using nlohmann::json;
  auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
  json j;
  j["scenario"] = config.scenario.scenario;
  j["design"] = to_string(config.scenario.design);
  j["n"] = config.scenario.n;
  j["N_target"] = config.scenario.N_target;
  j["mode"] = to_string(config.mode);
  j["reps"] = config.reps;
  j["seed"] = config.scenario.seed;
  j["target_truth"] = target_truth;
  j["target_beta"] = std::vector<double>(target_beta.data(), target_beta.data() + target_beta.size());
  json ms = json::array();
  for (const auto& s : methods) {
    json m;
    m["method"] = to_string(s.method);
    m["included"] = s.included;
    m["excluded"] = s.excluded;
    m["mean"] = s.mean_estimate;
    m["sd"] = opt(s.sd);
    m["se"] = s.mean_se;
    m["cp_plus"] = opt(s.cp_plus);
    m["cp_t"] = s.cp_t;
    m["pseudo_truth"] = opt(s.pseudo_truth);
    m["mean_target_value"] = s.mean_target_value;
    m["mean_pcd"] = s.mean_pcd;
    ms.push_back(std::move(m));
  }
  j["methods"] = std::move(ms);
  return j;
}

}  // namespace calitr
