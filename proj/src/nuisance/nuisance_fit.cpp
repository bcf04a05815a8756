#include <algorithm>
#include <cctype>

#include "calitr/error.hpp"
#include "calitr/nuisance.hpp"

namespace calitr {

namespace {

// Rows of one arm, with their positions in the full sample.
struct ArmData {
  Matrix X;
  Vector y;
  std::vector<Index> rows;
};

ArmData arm_subset(const SourceSample& s, int arm) {
  ArmData d;
  for (Index i = 0; i < s.n(); ++i) {
    if (s.A()[i] == arm) d.rows.push_back(i);
  }
  const auto m = static_cast<Index>(d.rows.size());
  d.X = Matrix(m, s.p());
  d.y = Vector(m);
  for (Index k = 0; k < m; ++k) {
    d.X.row(k) = s.X().row(d.rows[static_cast<std::size_t>(k)]);
    d.y[k] = s.Y()[d.rows[static_cast<std::size_t>(k)]];
  }
  return d;
}

}  // namespace

double clip_propensity(double pi) noexcept {
  return std::clamp(pi, kPropensityClip, 1.0 - kPropensityClip);
}

std::string to_string(NuisanceMode mode) {
  return mode == NuisanceMode::ParametricI ? "I" : "II";
}

NuisanceMode parse_mode(const std::string& s) {
  std::string u = s;
  std::transform(u.begin(), u.end(), u.begin(),
                 [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  if (u == "I" || u == "1") return NuisanceMode::ParametricI;
  if (u == "II" || u == "2") return NuisanceMode::NonparametricII;
  throw Error(Errc::InvalidArgument, "mode must be I or II, got '" + s + "'");
}

NuisanceOptions NuisanceOptions::for_mode(NuisanceMode mode, std::uint64_t seed) {
  NuisanceOptions o;
  o.forest.seed = seed;
  if (mode == NuisanceMode::NonparametricII) {
    o.propensity = PropensityKind::Kernel;
    o.outcome = OutcomeKind::Forest;
  }
  return o;
}

NuisanceFit NuisanceFit::fit(const SourceSample& sample, const NuisanceOptions& options) {
  NuisanceFit f;
  f.options_ = options;
  const Index n = sample.n();

  Vector raw_pi(n);
  switch (options.propensity) {
    case PropensityKind::Logistic:
      f.logistic_ = fit_logistic(sample, options.separation);
      raw_pi = f.logistic_->predict_rows(sample.X());
      break;
    case PropensityKind::Kernel:
      f.kernel_ = KernelPropensity::fit(sample.X(), sample.A());
      raw_pi = f.kernel_->predict_rows(sample.X());
      break;
    case PropensityKind::Constant:
      if (!(options.constant_propensity > 0.0 && options.constant_propensity < 1.0)) {
        throw Error(Errc::InvalidArgument, "constant propensity must lie in (0, 1)");
      }
      raw_pi = Vector::Constant(n, options.constant_propensity);
      break;
  }
  f.pred_.pi = raw_pi.unaryExpr([](double v) { return clip_propensity(v); });
  f.pred_.clipped.resize(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    f.pred_.clipped[static_cast<std::size_t>(i)] = f.pred_.pi[i] != raw_pi[i];
  }

  if (options.outcome == OutcomeKind::Linear) {
    f.linear_ = fit_linear_outcome(sample);
    f.pred_.mu0 = f.linear_->predict_rows(sample.X(), 0);
    f.pred_.mu1 = f.linear_->predict_rows(sample.X(), 1);
  } else {
    for (int arm = 0; arm < 2; ++arm) {
      const ArmData d = arm_subset(sample, arm);
      ForestConfig cfg = options.forest;
      cfg.seed = options.forest.seed * 2 + static_cast<std::uint64_t>(arm);
      RegressionForest forest = RegressionForest::fit(d.X, d.y, cfg);
      Vector mu = forest.predict_rows(sample.X());
      for (std::size_t k = 0; k < d.rows.size(); ++k) {
        mu[d.rows[k]] = forest.oob_predictions()[static_cast<Index>(k)];
      }
      (arm == 0 ? f.pred_.mu0 : f.pred_.mu1) = std::move(mu);
      (arm == 0 ? f.forest0_ : f.forest1_) = std::move(forest);
    }
  }
  f.mode_ = f.parametric() ? NuisanceMode::ParametricI : NuisanceMode::NonparametricII;
  return f;
}

NuisanceFit NuisanceFit::from_predictions(Vector pi, Vector mu0, Vector mu1) {
  if (pi.size() != mu0.size() || pi.size() != mu1.size()) {
    throw Error(Errc::LengthMismatch, "prediction vectors differ in length");
  }
  NuisanceFit f;
  f.mode_ = NuisanceMode::NonparametricII;
  f.pred_.clipped.resize(static_cast<std::size_t>(pi.size()));
  for (Index i = 0; i < pi.size(); ++i) {
    const double c = clip_propensity(pi[i]);
    f.pred_.clipped[static_cast<std::size_t>(i)] = c != pi[i];
    pi[i] = c;
  }
  f.pred_.pi = std::move(pi);
  f.pred_.mu0 = std::move(mu0);
  f.pred_.mu1 = std::move(mu1);
  return f;
}

double NuisanceFit::propensity(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
  if (logistic_) return clip_propensity(logistic_->predict(x));
  if (kernel_) return kernel_->predict(x);
  if (options_.propensity == PropensityKind::Constant) {
    return clip_propensity(options_.constant_propensity);
  }
  throw Error(Errc::InvalidArgument, "fit carries no propensity model");
}

double NuisanceFit::outcome(const Eigen::Ref<const Eigen::RowVectorXd>& x, int a) const {
  if (linear_) return linear_->predict(x, a);
  const auto& forest = a == 0 ? forest0_ : forest1_;
  if (forest) return forest->predict(x);
  throw Error(Errc::InvalidArgument, "fit carries no outcome model");
}

nlohmann::json NuisanceFit::to_json() const {
  nlohmann::json j;
  j["mode"] = to_string(mode_);
  nlohmann::json prop;
  if (logistic_) {
    prop["type"] = "logistic";
    prop["eta"] = std::vector<double>(logistic_->eta.data(),
                                      logistic_->eta.data() + logistic_->eta.size());
    prop["ridge"] = logistic_->ridge;
    prop["gradient_norm"] = logistic_->gradient_norm;
  } else if (kernel_) {
    prop = kernel_->to_json();
  } else {
    prop["type"] = "constant";
    prop["value"] = options_.constant_propensity;
  }
  prop["clip"] = kPropensityClip;
  j["propensity"] = std::move(prop);
  nlohmann::json out;
  if (linear_) {
    out["type"] = "linear";
    out["design"] = "1,x,a,a*x";
    out["theta"] = std::vector<double>(linear_->theta.data(),
                                       linear_->theta.data() + linear_->theta.size());
  } else if (forest0_ && forest1_) {
    out["type"] = "forest";
    out["trees"] = options_.forest.trees;
    out["min_leaf"] = options_.forest.min_leaf;
    out["arm0"] = forest0_->to_json();
    out["arm1"] = forest1_->to_json();
  }
  j["outcome"] = std::move(out);
  return j;
}

}  // namespace calitr
