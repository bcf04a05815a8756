#include <algorithm>
#include <cmath>
#include <numeric>
#include <utility>

#include "calitr/error.hpp"
#include "calitr/kernels.hpp"
#include "calitr/nuisance.hpp"
#include "calitr/random.hpp"

namespace calitr {

namespace {

class TreeBuilder {
 public:
  TreeBuilder(const Matrix& X, const Vector& y, int min_leaf, int mtry, Rng& rng)
      : X_(X), y_(y), min_leaf_(min_leaf), mtry_(mtry), rng_(rng) {
    features_.resize(static_cast<std::size_t>(X.cols()));
    std::iota(features_.begin(), features_.end(), 0);
  }

  RegressionForest::Tree build(std::vector<int>& idx) {
    tree_.clear();
    grow(idx, 0, idx.size());
    return std::move(tree_);
  }

 private:
  int grow(std::vector<int>& idx, std::size_t lo, std::size_t hi) {
    const int id = static_cast<int>(tree_.size());
    tree_.emplace_back();
    const std::size_t m = hi - lo;
    double sum = 0.0;
    for (std::size_t k = lo; k < hi; ++k) sum += y_[idx[k]];
    tree_[static_cast<std::size_t>(id)].value = sum / static_cast<double>(m);

    if (m < static_cast<std::size_t>(2 * min_leaf_)) return id;
    bool constant = true;
    for (std::size_t k = lo + 1; k < hi && constant; ++k) {
      constant = y_[idx[k]] == y_[idx[lo]];
    }
    if (constant) return id;

    // Features are drawn one at a time (partial Fisher-Yates). After mtry
    // draws the search stops as soon as some valid split exists, so a node
    // whose sampled features are all constant keeps looking.
    const int p = static_cast<int>(features_.size());
    int best_feature = -1;
    double best_threshold = 0.0;
    double best_gain = -1.0;
    const double base = sum * sum / static_cast<double>(m);
    for (int k = 0; k < p; ++k) {
      if (k >= mtry_ && best_feature >= 0) break;
      std::uniform_int_distribution<int> pick(k, p - 1);
      std::swap(features_[static_cast<std::size_t>(k)],
                features_[static_cast<std::size_t>(pick(rng_))]);
      const int f = features_[static_cast<std::size_t>(k)];
      pairs_.clear();
      for (std::size_t t = lo; t < hi; ++t) pairs_.emplace_back(X_(idx[t], f), y_[idx[t]]);
      std::sort(pairs_.begin(), pairs_.end());
      double left = 0.0;
      for (std::size_t s = 0; s + 1 < m; ++s) {
        left += pairs_[s].second;
        const std::size_t nl = s + 1;
        const std::size_t nr = m - nl;
        if (nl < static_cast<std::size_t>(min_leaf_)) continue;
        if (nr < static_cast<std::size_t>(min_leaf_)) break;
        const double xa = pairs_[s].first;
        const double xb = pairs_[s + 1].first;
        if (!(xa < xb)) continue;
        const double right = sum - left;
        const double gain = left * left / static_cast<double>(nl) +
                            right * right / static_cast<double>(nr) - base;
        if (gain > best_gain + 1e-12 * std::abs(base)) {
          best_gain = gain;
          best_feature = f;
          double thr = xa + 0.5 * (xb - xa);
          if (!(thr < xb)) thr = xa;
          best_threshold = thr;
        }
      }
    }
    if (best_feature < 0 || best_gain <= 0.0) return id;

    const auto mid = std::partition(
        idx.begin() + static_cast<std::ptrdiff_t>(lo), idx.begin() + static_cast<std::ptrdiff_t>(hi),
        [&](int i) { return X_(i, best_feature) <= best_threshold; });
    const auto split = static_cast<std::size_t>(mid - idx.begin());
    const int l = grow(idx, lo, split);
    const int r = grow(idx, split, hi);
    auto& node = tree_[static_cast<std::size_t>(id)];
    node.feature = best_feature;
    node.threshold = best_threshold;
    node.left = l;
    node.right = r;
    return id;
  }

  const Matrix& X_;
  const Vector& y_;
  int min_leaf_;
  int mtry_;
  Rng& rng_;
  std::vector<int> features_;
  std::vector<std::pair<double, double>> pairs_;
  RegressionForest::Tree tree_;
};

}  // namespace

double tree_predict(const RegressionForest::Tree& tree,
                    const Eigen::Ref<const Eigen::RowVectorXd>& x) {
  int k = 0;
  while (tree[static_cast<std::size_t>(k)].feature >= 0) {
    const auto& node = tree[static_cast<std::size_t>(k)];
    k = x[node.feature] <= node.threshold ? node.left : node.right;
  }
  return tree[static_cast<std::size_t>(k)].value;
}

RegressionForest RegressionForest::fit(const Matrix& X, const Vector& y,
                                       const ForestConfig& config) {
  const Index n = X.rows();
  const Index p = X.cols();
  if (n != y.size()) {
    throw Error(Errc::LengthMismatch, "forest X and y lengths differ");
  }
  if (n < 20) {
    throw Error(Errc::TooFewObservations,
                "forest arm needs at least 20 observations, got " + std::to_string(n));
  }
  if (config.trees < 1 || config.min_leaf < 1) {
    throw Error(Errc::InvalidArgument, "forest needs trees >= 1 and min_leaf >= 1");
  }
  const int mtry = config.mtry > 0
                       ? std::min<int>(config.mtry, static_cast<int>(p))
                       : static_cast<int>((p + 2) / 3);

  RegressionForest forest;
  forest.p_ = p;
  forest.trees_.resize(static_cast<std::size_t>(config.trees));
  std::vector<std::vector<char>> in_bag(static_cast<std::size_t>(config.trees));

  kernels::omp::for_each(static_cast<std::size_t>(config.trees), [&](std::size_t t) {
    Rng rng = make_rng(config.seed, t);
    std::uniform_int_distribution<int> draw(0, static_cast<int>(n) - 1);
    std::vector<int> idx(static_cast<std::size_t>(n));
    auto& bag = in_bag[t];
    bag.assign(static_cast<std::size_t>(n), 0);
    for (auto& i : idx) {
      i = draw(rng);
      bag[static_cast<std::size_t>(i)] = 1;
    }
    TreeBuilder builder(X, y, config.min_leaf, mtry, rng);
    forest.trees_[t] = builder.build(idx);
  });

  forest.oob_ = Vector::Zero(n);
  std::vector<int> count(static_cast<std::size_t>(n), 0);
  for (std::size_t t = 0; t < forest.trees_.size(); ++t) {
    for (Index i = 0; i < n; ++i) {
      if (in_bag[t][static_cast<std::size_t>(i)]) continue;
      forest.oob_[i] += tree_predict(forest.trees_[t], X.row(i));
      ++count[static_cast<std::size_t>(i)];
    }
  }
  for (Index i = 0; i < n; ++i) {
    const int c = count[static_cast<std::size_t>(i)];
    forest.oob_[i] = c > 0 ? forest.oob_[i] / c : forest.predict(X.row(i));
  }
  return forest;
}

double RegressionForest::predict(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
  double s = 0.0;
  for (const auto& tree : trees_) s += tree_predict(tree, x);
  return s / static_cast<double>(trees_.size());
}

Vector RegressionForest::predict_rows(const Matrix& X) const {
  return kernels::omp::forest_predict(*this, X);
}

nlohmann::json RegressionForest::to_json() const {
  nlohmann::json j;
  j["type"] = "regression_forest";
  j["p"] = p_;
  nlohmann::json trees = nlohmann::json::array();
  for (const auto& tree : trees_) {
    nlohmann::json nodes = nlohmann::json::array();
    for (const auto& node : tree) {
      nodes.push_back({node.feature, node.threshold, node.left, node.right, node.value});
    }
    trees.push_back(std::move(nodes));
  }
  j["trees"] = std::move(trees);
  j["oob"] = std::vector<double>(oob_.data(), oob_.data() + oob_.size());
  return j;
}

RegressionForest RegressionForest::from_json(const nlohmann::json& j) {
  RegressionForest f;
  f.p_ = j.at("p").get<Index>();
  for (const auto& nodes : j.at("trees")) {
    Tree tree;
    for (const auto& node : nodes) {
      Node nd;
      nd.feature = node.at(0).get<int>();
      nd.threshold = node.at(1).get<double>();
      nd.left = node.at(2).get<int>();
      nd.right = node.at(3).get<int>();
      nd.value = node.at(4).get<double>();
      tree.push_back(nd);
    }
    f.trees_.push_back(std::move(tree));
  }
  const auto oob = j.at("oob").get<std::vector<double>>();
  f.oob_ = Eigen::Map<const Vector>(oob.data(), static_cast<Index>(oob.size()));
  return f;
}

}  // namespace calitr
