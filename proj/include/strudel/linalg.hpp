// Small dense matrix type and the few kernels the toolkit needs:
// transpose-products, SPD solves (Cholesky), column statistics and
// Gram-Schmidt orthonormalization. Everything is double precision and
// row-major; sizes here are tens of columns, not thousands.
#pragma once

#include <cmath>
#include <cstddef>
#include <random>
#include <vector>

#include "strudel/error.hpp"

namespace strudel {

class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    static Matrix from_rows(const std::vector<std::vector<double>>& rows) {
        if (rows.empty()) return Matrix();
        Matrix m(rows.size(), rows.front().size());
        for (std::size_t i = 0; i < rows.size(); ++i) {
            if (rows[i].size() != m.cols_) throw SpecError("ragged rows in matrix literal");
            for (std::size_t j = 0; j < m.cols_; ++j) m(i, j) = rows[i][j];
        }
        return m;
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    bool empty() const { return data_.empty(); }

    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    double* row(std::size_t i) { return data_.data() + i * cols_; }
    const double* row(std::size_t i) const { return data_.data() + i * cols_; }

    std::vector<double>& data() { return data_; }
    const std::vector<double>& data() const { return data_; }

    std::vector<double> row_copy(std::size_t i) const {
        return std::vector<double>(row(i), row(i) + cols_);
    }
    std::vector<double> col_copy(std::size_t j) const {
        std::vector<double> c(rows_);
        for (std::size_t i = 0; i < rows_; ++i) c[i] = (*this)(i, j);
        return c;
    }

    double sum() const {
        double s = 0.0;
        for (double v : data_) s += v;
        return s;
    }

    bool all_finite() const {
        for (double v : data_)
            if (!std::isfinite(v)) return false;
        return true;
    }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

// C = A^T A  (cols x cols)
inline Matrix gram(const Matrix& a) {
    Matrix c(a.cols(), a.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        const double* r = a.row(i);
        for (std::size_t p = 0; p < a.cols(); ++p) {
            const double rp = r[p];
            if (rp == 0.0) continue;
            for (std::size_t q = p; q < a.cols(); ++q) c(p, q) += rp * r[q];
        }
    }
    for (std::size_t p = 0; p < a.cols(); ++p)
        for (std::size_t q = 0; q < p; ++q) c(p, q) = c(q, p);
    return c;
}

// C = A^T B  (a.cols x b.cols); rows must match.
inline Matrix transpose_times(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows()) throw SpecError("transpose_times: row count mismatch");
    Matrix c(a.cols(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        const double* ra = a.row(i);
        const double* rb = b.row(i);
        for (std::size_t p = 0; p < a.cols(); ++p) {
            const double v = ra[p];
            if (v == 0.0) continue;
            double* rc = c.row(p);
            for (std::size_t q = 0; q < b.cols(); ++q) rc[q] += v * rb[q];
        }
    }
    return c;
}

// In-place Cholesky factorization of a symmetric positive-definite matrix,
// then solve A X = B for every column of B.
inline Matrix cholesky_solve(Matrix a, const Matrix& b) {
    const std::size_t n = a.rows();
    if (a.cols() != n || b.rows() != n) throw SpecError("cholesky_solve: shape mismatch");
    for (std::size_t j = 0; j < n; ++j) {
        double d = a(j, j);
        for (std::size_t k = 0; k < j; ++k) d -= a(j, k) * a(j, k);
        if (!(d > 0.0)) throw NumericError("cholesky_solve: matrix not positive definite");
        const double ljj = std::sqrt(d);
        a(j, j) = ljj;
        for (std::size_t i = j + 1; i < n; ++i) {
            double s = a(i, j);
            for (std::size_t k = 0; k < j; ++k) s -= a(i, k) * a(j, k);
            a(i, j) = s / ljj;
        }
    }
    Matrix x = b;
    // forward: L y = b
    for (std::size_t c = 0; c < b.cols(); ++c) {
        for (std::size_t i = 0; i < n; ++i) {
            double s = x(i, c);
            for (std::size_t k = 0; k < i; ++k) s -= a(i, k) * x(k, c);
            x(i, c) = s / a(i, i);
        }
        // backward: L^T x = y
        for (std::size_t ii = n; ii-- > 0;) {
            double s = x(ii, c);
            for (std::size_t k = ii + 1; k < n; ++k) s -= a(k, ii) * x(k, c);
            x(ii, c) = s / a(ii, ii);
        }
    }
    return x;
}

struct ColumnStats {
    std::vector<double> mean;
    std::vector<double> scale;  // stddev, with zero replaced by 1
};

// Per-column mean and population stddev over the given rows (all rows when
// `rows` is empty). Zero-variance columns get scale 1 so standardizing maps
// them to exactly zero.
inline ColumnStats column_stats(const Matrix& m, const std::vector<int>& rows = {}) {
    ColumnStats st;
    st.mean.assign(m.cols(), 0.0);
    st.scale.assign(m.cols(), 1.0);
    const std::size_t n = rows.empty() ? m.rows() : rows.size();
    if (n == 0) return st;
    auto row_at = [&](std::size_t k) { return rows.empty() ? k : static_cast<std::size_t>(rows[k]); };
    for (std::size_t k = 0; k < n; ++k) {
        const double* r = m.row(row_at(k));
        for (std::size_t j = 0; j < m.cols(); ++j) st.mean[j] += r[j];
    }
    for (std::size_t j = 0; j < m.cols(); ++j) st.mean[j] /= static_cast<double>(n);
    std::vector<double> var(m.cols(), 0.0);
    for (std::size_t k = 0; k < n; ++k) {
        const double* r = m.row(row_at(k));
        for (std::size_t j = 0; j < m.cols(); ++j) {
            const double d = r[j] - st.mean[j];
            var[j] += d * d;
        }
    }
    for (std::size_t j = 0; j < m.cols(); ++j) {
        const double s = std::sqrt(var[j] / static_cast<double>(n));
        st.scale[j] = s > 0.0 ? s : 1.0;
    }
    return st;
}

inline Matrix standardize(const Matrix& m, const ColumnStats& st, const std::vector<int>& rows = {}) {
    const std::size_t n = rows.empty() ? m.rows() : rows.size();
    Matrix out(n, m.cols());
    for (std::size_t k = 0; k < n; ++k) {
        const std::size_t i = rows.empty() ? k : static_cast<std::size_t>(rows[k]);
        for (std::size_t j = 0; j < m.cols(); ++j)
            out(k, j) = (m(i, j) - st.mean[j]) / st.scale[j];
    }
    return out;
}

// Random orthogonal matrix via Gram-Schmidt on a gaussian sample.
inline Matrix random_orthogonal(std::size_t n, std::mt19937_64& rng) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    Matrix q(n, n);
    for (auto& v : q.data()) v = gauss(rng);
    for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t k = 0; k < j; ++k) {
            double dot = 0.0;
            for (std::size_t i = 0; i < n; ++i) dot += q(i, j) * q(i, k);
            for (std::size_t i = 0; i < n; ++i) q(i, j) -= dot * q(i, k);
        }
        double norm = 0.0;
        for (std::size_t i = 0; i < n; ++i) norm += q(i, j) * q(i, j);
        norm = std::sqrt(norm);
        if (norm < 1e-12) return random_orthogonal(n, rng);  // astronomically unlikely
        for (std::size_t i = 0; i < n; ++i) q(i, j) /= norm;
    }
    return q;
}

}  // namespace strudel
