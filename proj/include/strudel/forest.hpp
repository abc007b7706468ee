// CART regression trees and random forests with mean-decrease-impurity
// feature importances. This is the final probe predictor; the importances
// are the raw material of the affinity matrix, so fitting is fully
// deterministic given (seed, params): variance-reduction splits, candidate
// thresholds at midpoints of consecutive sorted unique values, ties broken
// by lowest feature index then lowest threshold.
#pragma once

#include <algorithm>
#include <cstdint>
#include <random>
#include <vector>

#include <json.hpp>

#include "strudel/error.hpp"
#include "strudel/linalg.hpp"
#include "strudel/parallel.hpp"
#include "strudel/rng.hpp"

namespace strudel {

struct ForestParams {
    int n_trees = 10;
    int max_depth = 15;  // -1 = unlimited
    int min_samples_leaf = 1;
    bool bootstrap = true;
    std::uint64_t seed = 0;
};

struct TreeNode {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double value = 0.0;  // node mean; prediction at leaves
};

class RegressionTree {
public:
    void fit(const Matrix& x, const std::vector<double>& y, std::vector<int> indices,
             const ForestParams& params) {
        nodes_.clear();
        importance_raw_.assign(x.cols(), 0.0);
        n_total_ = indices.size();
        if (n_total_ == 0) throw SpecError("regression tree needs at least one sample");
        grow(x, y, std::move(indices), 0, params);
    }

    double predict(const double* x) const {
        int node = 0;
        while (nodes_[static_cast<std::size_t>(node)].feature >= 0) {
            const TreeNode& nd = nodes_[static_cast<std::size_t>(node)];
            node = x[nd.feature] <= nd.threshold ? nd.left : nd.right;
        }
        return nodes_[static_cast<std::size_t>(node)].value;
    }

    const std::vector<double>& importance_raw() const { return importance_raw_; }
    const std::vector<TreeNode>& nodes() const { return nodes_; }

private:
    int grow(const Matrix& x, const std::vector<double>& y, std::vector<int> idx, int depth,
             const ForestParams& params) {
        const int node_id = static_cast<int>(nodes_.size());
        nodes_.emplace_back();
        const std::size_t n = idx.size();
        double sum = 0.0, sum_sq = 0.0;
        for (int i : idx) {
            sum += y[static_cast<std::size_t>(i)];
            sum_sq += y[static_cast<std::size_t>(i)] * y[static_cast<std::size_t>(i)];
        }
        const double mean = sum / static_cast<double>(n);
        const double sse = sum_sq - sum * mean;
        nodes_[static_cast<std::size_t>(node_id)].value = mean;

        const bool depth_ok = params.max_depth < 0 || depth < params.max_depth;
        if (!depth_ok || n < 2 * static_cast<std::size_t>(params.min_samples_leaf) || n < 2 ||
            sse <= 0.0)
            return node_id;

        int best_feature = -1;
        double best_threshold = 0.0;
        double best_reduction = 0.0;
        std::vector<std::pair<double, double>> pairs(n);
        for (std::size_t f = 0; f < x.cols(); ++f) {
            for (std::size_t k = 0; k < n; ++k) {
                const auto i = static_cast<std::size_t>(idx[k]);
                pairs[k] = {x(i, f), y[i]};
            }
            std::sort(pairs.begin(), pairs.end());
            double left_sum = 0.0, left_sq = 0.0;
            for (std::size_t k = 1; k < n; ++k) {
                left_sum += pairs[k - 1].second;
                left_sq += pairs[k - 1].second * pairs[k - 1].second;
                if (pairs[k].first == pairs[k - 1].first) continue;  // not a unique-value boundary
                if (k < static_cast<std::size_t>(params.min_samples_leaf) ||
                    n - k < static_cast<std::size_t>(params.min_samples_leaf))
                    continue;
                const double nl = static_cast<double>(k);
                const double nr = static_cast<double>(n - k);
                const double right_sum = sum - left_sum;
                const double sse_l = left_sq - left_sum * left_sum / nl;
                const double sse_r = (sum_sq - left_sq) - right_sum * right_sum / nr;
                const double reduction = sse - sse_l - sse_r;
                if (reduction > best_reduction) {
                    best_reduction = reduction;
                    best_feature = static_cast<int>(f);
                    best_threshold = pairs[k - 1].first + (pairs[k].first - pairs[k - 1].first) / 2.0;
                }
            }
        }
        if (best_feature < 0) return node_id;

        std::vector<int> left_idx, right_idx;
        left_idx.reserve(n);
        right_idx.reserve(n);
        for (int i : idx)
            (x(static_cast<std::size_t>(i), static_cast<std::size_t>(best_feature)) <=
                     best_threshold
                 ? left_idx
                 : right_idx)
                .push_back(i);
        if (left_idx.empty() || right_idx.empty()) return node_id;  // degenerate threshold

        importance_raw_[static_cast<std::size_t>(best_feature)] +=
            best_reduction / static_cast<double>(n_total_);
        idx.clear();
        idx.shrink_to_fit();
        const int left = grow(x, y, std::move(left_idx), depth + 1, params);
        const int right = grow(x, y, std::move(right_idx), depth + 1, params);
        TreeNode& nd = nodes_[static_cast<std::size_t>(node_id)];
        nd.feature = best_feature;
        nd.threshold = best_threshold;
        nd.left = left;
        nd.right = right;
        return node_id;
    }

    std::vector<TreeNode> nodes_;
    std::vector<double> importance_raw_;
    std::size_t n_total_ = 0;
};

class RandomForest {
public:
    const ForestParams& params() const { return params_; }
    const std::vector<RegressionTree>& trees() const { return trees_; }
    std::size_t input_dim() const { return input_dim_; }

    double predict(const double* x) const {
        double s = 0.0;
        for (const auto& t : trees_) s += t.predict(x);
        return s / static_cast<double>(trees_.size());
    }

    double predict(const std::vector<double>& x) const {
        if (x.size() != input_dim_) throw SpecError("forest predict: input dimension mismatch");
        return predict(x.data());
    }

    // Mean decrease impurity, averaged over trees and normalized to sum 1;
    // all-zero (no splits anywhere) stays all-zero.
    std::vector<double> importances() const {
        std::vector<double> imp(input_dim_, 0.0);
        for (const auto& t : trees_)
            for (std::size_t f = 0; f < input_dim_; ++f) imp[f] += t.importance_raw()[f];
        double total = 0.0;
        for (double& v : imp) {
            v /= static_cast<double>(trees_.size());
            total += v;
        }
        if (total > 0.0)
            for (double& v : imp) v /= total;
        return imp;
    }

    nlohmann::json to_json() const {
        nlohmann::json jtrees = nlohmann::json::array();
        for (const auto& t : trees_) {
            nlohmann::json jn = nlohmann::json::array();
            for (const auto& nd : t.nodes())
                jn.push_back({{"feature", nd.feature},
                              {"threshold", nd.threshold},
                              {"left", nd.left},
                              {"right", nd.right},
                              {"value", nd.value}});
            jtrees.push_back(std::move(jn));
        }
        return {{"n_trees", params_.n_trees},
                {"max_depth", params_.max_depth},
                {"importances", importances()},
                {"trees", std::move(jtrees)}};
    }

    friend RandomForest forest_fit(const Matrix&, const std::vector<double>&, const ForestParams&);

private:
    ForestParams params_;
    std::vector<RegressionTree> trees_;
    std::size_t input_dim_ = 0;
};

// Fit params.n_trees CART trees, each on its own bootstrap resample drawn
// from an RNG keyed by (seed, tree index) so the result is identical under
// any parallel schedule.
inline RandomForest forest_fit(const Matrix& x, const std::vector<double>& y,
                               const ForestParams& params) {
    if (x.rows() < 2) throw SpecError("forest_fit: need at least 2 samples");
    if (x.rows() != y.size()) throw SpecError("forest_fit: X/y length mismatch");
    if (params.n_trees < 1) throw SpecError("forest_fit: need at least one tree");
    RandomForest forest;
    forest.params_ = params;
    forest.input_dim_ = x.cols();
    forest.trees_.resize(static_cast<std::size_t>(params.n_trees));
    const std::size_t n = x.rows();
    parallel_for(forest.trees_.size(), [&](std::size_t t) {
        std::vector<int> idx(n);
        if (params.bootstrap) {
            std::mt19937_64 rng = make_rng(params.seed, 0xf03e57ULL, t);
            std::uniform_int_distribution<int> pick(0, static_cast<int>(n) - 1);
            for (auto& i : idx) i = pick(rng);
        } else {
            for (std::size_t i = 0; i < n; ++i) idx[i] = static_cast<int>(i);
        }
        forest.trees_[t].fit(x, y, std::move(idx), params);
    });
    return forest;
}

inline std::vector<double> forest_importances(const RandomForest& forest) {
    return forest.importances();
}

}  // namespace strudel
