// Scalar target encodings for categorical factors. Two classes map to
// {-1, +1} and three to {-1, 0, +1}; the error-minimizing strategy tries
// every bijection of classes onto those values and keeps the one with the
// lowest ridge validation error.
#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "strudel/error.hpp"
#include "strudel/linalg.hpp"
#include "strudel/ridge.hpp"

namespace strudel {

enum class EncodingStrategy { fixed, error_minimizing };

struct TargetEncoding {
    std::vector<std::string> classes;
    std::vector<double> values;  // values[i] assigned to classes[i]
    bool error_minimizing = false;
    double validation_error = std::numeric_limits<double>::quiet_NaN();
    bool constant = false;  // single distinct class present

    double encode(const std::string& cls) const {
        for (std::size_t i = 0; i < classes.size(); ++i)
            if (classes[i] == cls) return values[i];
        throw SpecError("value '" + cls + "' not among encoded classes");
    }

    std::vector<double> encode(const std::vector<std::string>& column) const {
        std::vector<double> out(column.size());
        for (std::size_t i = 0; i < column.size(); ++i) out[i] = encode(column[i]);
        return out;
    }
};

namespace detail {

inline std::vector<double> canonical_class_values(std::size_t k) {
    switch (k) {
        case 1: return {0.0};
        case 2: return {-1.0, 1.0};
        case 3: return {-1.0, 0.0, 1.0};
        default:
            throw SpecError("target encoding supports at most 3 classes (got " +
                            std::to_string(k) + ")");
    }
}

}  // namespace detail

// Fixed assignment: classes in their given order get the canonical values.
inline TargetEncoding encode_targets_fixed(const std::vector<std::string>& classes) {
    if (classes.empty()) throw SpecError("target encoding needs at least one class");
    TargetEncoding enc;
    enc.classes = classes;
    enc.values = detail::canonical_class_values(classes.size());
    enc.constant = classes.size() == 1;
    return enc;
}

// Error-minimizing assignment: every bijection classes -> canonical values
// is scored by the validation error of a ridge model fitted on the encoded
// fit-split targets; the smallest error wins (ties: first assignment in
// ascending value-permutation order).
inline TargetEncoding choose_encoding(const std::vector<std::string>& classes,
                                      const std::vector<std::string>& fit_values,
                                      const std::vector<std::string>& val_values,
                                      const Matrix& x_fit, const Matrix& x_val,
                                      double lambda = 1.0) {
    TargetEncoding best = encode_targets_fixed(classes);
    best.error_minimizing = true;
    if (classes.size() == 1) return best;
    if (fit_values.size() != x_fit.rows() || val_values.size() != x_val.rows())
        throw SpecError("choose_encoding: data size mismatch");

    std::vector<double> values = detail::canonical_class_values(classes.size());
    std::sort(values.begin(), values.end());
    double best_err = std::numeric_limits<double>::infinity();
    do {
        TargetEncoding cand;
        cand.classes = classes;
        cand.values = values;
        cand.error_minimizing = true;
        Matrix y_fit(fit_values.size(), 1);
        for (std::size_t i = 0; i < fit_values.size(); ++i) y_fit(i, 0) = cand.encode(fit_values[i]);
        const RidgeModel model = ridge_fit(x_fit, y_fit, lambda);
        const Matrix pred = model.predict(x_val);
        double err = 0.0;
        for (std::size_t i = 0; i < val_values.size(); ++i) {
            const double d = pred(i, 0) - cand.encode(val_values[i]);
            err += d * d;
        }
        err = std::sqrt(err);
        if (err < best_err) {
            best_err = err;
            best = cand;
            best.validation_error = err;
        }
    } while (std::next_permutation(values.begin(), values.end()));
    return best;
}

// Spec-facing wrapper: encode a column under the requested strategy. The
// error-minimizing strategy needs the fit/validation context.
inline std::pair<std::vector<double>, TargetEncoding> encode_targets(
    const std::vector<std::string>& column, const std::vector<std::string>& classes,
    EncodingStrategy strategy, const std::vector<std::string>* fit_values = nullptr,
    const std::vector<std::string>* val_values = nullptr, const Matrix* x_fit = nullptr,
    const Matrix* x_val = nullptr) {
    TargetEncoding enc;
    if (strategy == EncodingStrategy::fixed) {
        enc = encode_targets_fixed(classes);
    } else {
        if (!fit_values || !val_values || !x_fit || !x_val)
            throw SpecError("error-minimizing encoding needs fit/validation data");
        enc = choose_encoding(classes, *fit_values, *val_values, *x_fit, *x_val);
    }
    return {enc.encode(column), enc};
}

}  // namespace strudel
