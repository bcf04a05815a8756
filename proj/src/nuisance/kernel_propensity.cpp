#include <algorithm>
#include <cmath>

#include "calitr/error.hpp"
#include "calitr/kernels.hpp"
#include "calitr/nuisance.hpp"

namespace calitr {

namespace {

// Keeps logit finite when a local average is exactly 0 or 1.
constexpr double kLocalClip = 1e-3;

double logit(double p) { return std::log(p / (1.0 - p)); }

double expit(double t) {
  if (t >= 0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

}  // namespace

KernelPropensity KernelPropensity::fit(const Matrix& X, const IntVector& A) {
  const Index n = X.rows();
  const Index p = X.cols();
  if (n < 20) {
    throw Error(Errc::TooFewObservations,
                "kernel propensity needs at least 20 observations, got " +
                    std::to_string(n));
  }
  KernelPropensity kp;
  kp.x_ = X;
  kp.a_ = A.cast<double>();
  kp.h_ = Vector::Zero(p);
  kp.dropped_.assign(static_cast<std::size_t>(p), false);
  const double abar = kp.a_.mean();
  kp.base_logit_ = logit(std::clamp(abar, kLocalClip, 1.0 - kLocalClip));

  const double shrink = 1.06 * std::pow(static_cast<double>(n), -0.2);
  bool any = false;
  for (Index j = 0; j < p; ++j) {
    const double mean = X.col(j).mean();
    const double sd =
        std::sqrt((X.col(j).array() - mean).square().sum() / static_cast<double>(n - 1));
    if (!(sd > 0.0)) {
      kp.dropped_[static_cast<std::size_t>(j)] = true;
      continue;
    }
    kp.h_[j] = shrink * sd;
    any = true;
  }
  if (!any) {
    throw Error(Errc::DegenerateCovariate, "every covariate is constant");
  }
  return kp;
}

Vector KernelPropensity::predict_rows(const Matrix& X) const {
  Vector lp = Vector::Constant(X.rows(), base_logit_);
  for (Index j = 0; j < x_.cols(); ++j) {
    if (dropped_[static_cast<std::size_t>(j)]) continue;
    const Vector m = kernels::omp::nw_smooth(x_.col(j), a_, h_[j], X.col(j));
    for (Index i = 0; i < X.rows(); ++i) {
      lp[i] += logit(std::clamp(m[i], kLocalClip, 1.0 - kLocalClip)) - base_logit_;
    }
  }
  Vector out(X.rows());
  for (Index i = 0; i < X.rows(); ++i) out[i] = clip_propensity(expit(lp[i]));
  return out;
}

double KernelPropensity::predict(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
  Matrix one = x;
  return predict_rows(one)[0];
}

nlohmann::json KernelPropensity::to_json() const {
  nlohmann::json j;
  j["type"] = "additive_kernel_propensity";
  j["base_logit"] = base_logit_;
  j["bandwidths"] = std::vector<double>(h_.data(), h_.data() + h_.size());
  j["dropped"] = dropped_;
  j["a"] = std::vector<double>(a_.data(), a_.data() + a_.size());
  nlohmann::json cols = nlohmann::json::array();
  for (Index c = 0; c < x_.cols(); ++c) {
    const Vector col = x_.col(c);
    cols.push_back(std::vector<double>(col.data(), col.data() + col.size()));
  }
  j["x"] = cols;
  return j;
}

KernelPropensity KernelPropensity::from_json(const nlohmann::json& j) {
  KernelPropensity kp;
  kp.base_logit_ = j.at("base_logit").get<double>();
  const auto h = j.at("bandwidths").get<std::vector<double>>();
  kp.h_ = Eigen::Map<const Vector>(h.data(), static_cast<Index>(h.size()));
  kp.dropped_ = j.at("dropped").get<std::vector<bool>>();
  const auto a = j.at("a").get<std::vector<double>>();
  kp.a_ = Eigen::Map<const Vector>(a.data(), static_cast<Index>(a.size()));
  const auto& cols = j.at("x");
  kp.x_ = Matrix(kp.a_.size(), static_cast<Index>(cols.size()));
  for (std::size_t c = 0; c < cols.size(); ++c) {
    const auto v = cols[c].get<std::vector<double>>();
    if (static_cast<Index>(v.size()) != kp.a_.size()) {
      throw Error(Errc::ParseError, "kernel propensity column length mismatch");
    }
    kp.x_.col(static_cast<Index>(c)) = Eigen::Map<const Vector>(v.data(), kp.a_.size());
  }
  return kp;
}

}  // namespace calitr
