// Multi-output ridge regression with internal standardization, solved in
// closed form via a symmetric positive-definite system. This is the
// low-capacity predictor used inside the probing loop, where refitting from
// scratch every iteration has to be cheap.
#pragma once

#include <cmath>
#include <vector>

#include "strudel/error.hpp"
#include "strudel/linalg.hpp"

namespace strudel {

class RidgeModel {
public:
    RidgeModel() = default;

    std::size_t input_dim() const { return weights_.rows(); }
    std::size_t output_dim() const { return weights_.cols(); }

    // Effective weights/intercept in original (de-standardized) units:
    // predict(x) = W^T x + b.
    const Matrix& weights() const { return weights_; }
    const std::vector<double>& intercept() const { return intercept_; }
    double lambda() const { return lambda_; }
    const ColumnStats& input_stats() const { return input_stats_; }
    const ColumnStats& target_stats() const { return target_stats_; }

    void predict_into(const double* x, double* out) const {
        for (std::size_t j = 0; j < weights_.cols(); ++j) out[j] = intercept_[j];
        for (std::size_t i = 0; i < weights_.rows(); ++i) {
            const double xi = x[i];
            if (xi == 0.0) continue;
            const double* w = weights_.row(i);
            for (std::size_t j = 0; j < weights_.cols(); ++j) out[j] += xi * w[j];
        }
    }

    std::vector<double> predict(const std::vector<double>& x) const {
        if (x.size() != weights_.rows()) throw SpecError("ridge predict: input dimension mismatch");
        std::vector<double> out(weights_.cols());
        predict_into(x.data(), out.data());
        return out;
    }

    Matrix predict(const Matrix& x) const {
        if (x.cols() != weights_.rows()) throw SpecError("ridge predict: input dimension mismatch");
        Matrix out(x.rows(), weights_.cols());
        for (std::size_t i = 0; i < x.rows(); ++i) predict_into(x.row(i), out.row(i));
        return out;
    }

    friend RidgeModel ridge_fit(const Matrix&, const Matrix&, double);

private:
    Matrix weights_;  // d_in x d_out, original units
    std::vector<double> intercept_;
    double lambda_ = 0.0;
    ColumnStats input_stats_;
    ColumnStats target_stats_;
};

// Minimize ||Y - XW - b||^2 + lambda ||W||^2 on standardized inputs and
// targets; the returned model reports weights and predictions in original
// units. Standardization makes the penalty comparable across heterogeneous
// feature scales and zeroes out constant columns exactly.
inline RidgeModel ridge_fit(const Matrix& x, const Matrix& y, double lambda = 1.0) {
    if (lambda < 0.0) throw SpecError("ridge regularization strength must be >= 0");
    if (x.rows() == 0 || x.rows() != y.rows())
        throw SpecError("ridge_fit: need matching non-empty X and Y");
    if (!x.all_finite() || !y.all_finite()) throw NumericError("ridge_fit: non-finite inputs");

    RidgeModel m;
    m.lambda_ = lambda;
    m.input_stats_ = column_stats(x);
    m.target_stats_ = column_stats(y);
    const Matrix xs = standardize(x, m.input_stats_);
    const Matrix ys = standardize(y, m.target_stats_);

    Matrix lhs = gram(xs);
    for (std::size_t i = 0; i < lhs.rows(); ++i) lhs(i, i) += lambda;
    const Matrix w_std = cholesky_solve(std::move(lhs), transpose_times(xs, ys));

    // de-standardize: w_orig[i][j] = w_std[i][j] * sy[j] / sx[i]
    m.weights_ = Matrix(x.cols(), y.cols());
    m.intercept_.assign(y.cols(), 0.0);
    for (std::size_t j = 0; j < y.cols(); ++j) {
        double b = m.target_stats_.mean[j];
        for (std::size_t i = 0; i < x.cols(); ++i) {
            const double w = w_std(i, j) * m.target_stats_.scale[j] / m.input_stats_.scale[i];
            m.weights_(i, j) = w;
            b -= w * m.input_stats_.mean[i];
        }
        m.intercept_[j] = b;
    }
    return m;
}

}  // namespace strudel
