// Permutation-invariant representation probing.
//
// The EM loop alternates between fitting a ridge predictor on the fit split
// (M step) and, per sample, picking the slot permutation that minimizes the
// prediction residual (E step), searched exhaustively over the non-pinned
// slots. After convergence one random forest per factor is fitted on the
// aligned latents and its mean-decrease-impurity importances become the raw
// affinity matrix.
#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include <json.hpp>

#include "strudel/dataset.hpp"
#include "strudel/error.hpp"
#include "strudel/forest.hpp"
#include "strudel/joint.hpp"
#include "strudel/linalg.hpp"
#include "strudel/parallel.hpp"
#include "strudel/ridge.hpp"
#include "strudel/rng.hpp"
#include "strudel/schema.hpp"

namespace strudel {

// perm[p] = source slot whose block lands at position p.
using SlotPermutation = std::vector<int>;

inline SlotPermutation identity_permutation(int n_slots) {
    SlotPermutation p(static_cast<std::size_t>(n_slots));
    for (int s = 0; s < n_slots; ++s) p[static_cast<std::size_t>(s)] = s;
    return p;
}

inline bool is_identity(const SlotPermutation& p) {
    for (std::size_t i = 0; i < p.size(); ++i)
        if (p[i] != static_cast<int>(i)) return false;
    return true;
}

// first(second(x)): applying `second` to data already permuted by `first`.
inline SlotPermutation compose_permutations(const SlotPermutation& first,
                                            const SlotPermutation& second) {
    if (first.size() != second.size()) throw SpecError("permutation size mismatch");
    SlotPermutation out(first.size());
    for (std::size_t p = 0; p < out.size(); ++p)
        out[p] = first[static_cast<std::size_t>(second[p])];
    return out;
}

inline SlotPermutation invert_permutation(const SlotPermutation& p) {
    SlotPermutation inv(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) inv[static_cast<std::size_t>(p[i])] = static_cast<int>(i);
    return inv;
}

inline void validate_permutation(const SlotPermutation& perm, const SlotLayout& layout) {
    if (perm.size() != static_cast<std::size_t>(layout.n_slots))
        throw SpecError("permutation must cover every slot");
    std::vector<bool> seen(perm.size(), false);
    for (int s : perm) {
        if (s < 0 || s >= layout.n_slots || seen[static_cast<std::size_t>(s)])
            throw SpecError("not a valid slot permutation");
        seen[static_cast<std::size_t>(s)] = true;
    }
    for (int p : layout.pinned_slots)
        if (perm[static_cast<std::size_t>(p)] != p)
            throw SpecError("permutation moves pinned slot " + std::to_string(p));
}

// Reorder slot blocks; within-slot dimension order is untouched.
inline std::vector<double> apply_slot_permutation(const std::vector<double>& z,
                                                  const SlotLayout& layout,
                                                  const SlotPermutation& perm) {
    if (z.size() != static_cast<std::size_t>(layout.latent_dim()))
        throw SpecError("latent vector length does not match layout");
    validate_permutation(perm, layout);
    const auto dims = static_cast<std::size_t>(layout.dims_per_slot);
    std::vector<double> out(z.size());
    for (std::size_t p = 0; p < perm.size(); ++p) {
        const auto src = static_cast<std::size_t>(perm[p]);
        std::copy_n(z.begin() + static_cast<std::ptrdiff_t>(src * dims), dims,
                    out.begin() + static_cast<std::ptrdiff_t>(p * dims));
    }
    return out;
}

namespace detail {

inline void apply_permutation_row(double* z, const SlotLayout& layout, const SlotPermutation& perm,
                                  std::vector<double>& scratch) {
    const auto dims = static_cast<std::size_t>(layout.dims_per_slot);
    scratch.assign(z, z + layout.latent_dim());
    for (std::size_t p = 0; p < perm.size(); ++p) {
        const auto src = static_cast<std::size_t>(perm[p]);
        std::copy_n(scratch.begin() + static_cast<std::ptrdiff_t>(src * dims), dims,
                    z + p * dims);
    }
}

}  // namespace detail

// All permutations of the non-pinned slots, in lexicographic order of the
// full permutation vector (so argmin ties resolve to the smallest one).
class PermutationEnumerator {
public:
    explicit PermutationEnumerator(const SlotLayout& layout) {
        for (int s = 0; s < layout.n_slots; ++s)
            if (!layout.pinned_slots.count(s)) free_.push_back(s);
        if (free_.size() > 9)
            throw CapacityError("cannot enumerate permutations of " +
                                std::to_string(free_.size()) +
                                " slots (limit 9); pin slots to reduce the search");
        current_ = identity_permutation(layout.n_slots);
        arrangement_ = free_;
        done_ = false;
    }

    bool done() const { return done_; }
    const SlotPermutation& current() const { return current_; }

    void next() {
        if (!std::next_permutation(arrangement_.begin(), arrangement_.end())) {
            done_ = true;
            return;
        }
        for (std::size_t k = 0; k < free_.size(); ++k)
            current_[static_cast<std::size_t>(free_[k])] = arrangement_[k];
    }

private:
    std::vector<int> free_;
    std::vector<int> arrangement_;
    SlotPermutation current_;
    bool done_ = false;
};

// Exhaustive argmin over slot permutations of ||v - f(perm(z))||_2 for an
// arbitrary predictor. This is the definition; the linear fast path below
// must match it.
template <typename Predictor>
SlotPermutation best_permutation(Predictor&& predict, const std::vector<double>& z,
                                 const std::vector<double>& v, const SlotLayout& layout,
                                 double* best_residual = nullptr) {
    PermutationEnumerator en(layout);
    SlotPermutation best = en.current();
    double best_sq = std::numeric_limits<double>::infinity();
    std::vector<double> permuted;
    for (; !en.done(); en.next()) {
        permuted = apply_slot_permutation(z, layout, en.current());
        const std::vector<double> pred = predict(permuted);
        if (pred.size() != v.size()) throw SpecError("predictor output size mismatch");
        double sq = 0.0;
        for (std::size_t t = 0; t < v.size(); ++t) {
            const double d = v[t] - pred[t];
            sq += d * d;
        }
        if (sq < best_sq) {
            best_sq = sq;
            best = en.current();
        }
    }
    if (best_residual) *best_residual = std::sqrt(best_sq);
    return best;
}

namespace detail {

// For a linear predictor, the prediction under any permutation decomposes
// into per-(position, source-slot) contribution vectors, reducing the cost
// per candidate from a full matrix product to n_slots vector adds.
struct LinearPermutationScorer {
    const RidgeModel& model;
    const SlotLayout& layout;
    std::size_t n_targets;
    Matrix contrib;  // (position * n_slots + source) x n_targets

    LinearPermutationScorer(const RidgeModel& m, const SlotLayout& l)
        : model(m), layout(l), n_targets(m.output_dim()),
          contrib(static_cast<std::size_t>(l.n_slots) * static_cast<std::size_t>(l.n_slots),
                  m.output_dim()) {}

    void set_sample(const double* z) {
        const auto dims = static_cast<std::size_t>(layout.dims_per_slot);
        const auto n = static_cast<std::size_t>(layout.n_slots);
        const Matrix& w = model.weights();
        for (std::size_t pos = 0; pos < n; ++pos)
            for (std::size_t src = 0; src < n; ++src) {
                double* c = contrib.row(pos * n + src);
                std::fill(c, c + n_targets, 0.0);
                for (std::size_t d = 0; d < dims; ++d) {
                    const double zv = z[src * dims + d];
                    if (zv == 0.0) continue;
                    const double* wrow = w.row(pos * dims + d);
                    for (std::size_t t = 0; t < n_targets; ++t) c[t] += zv * wrow[t];
                }
            }
    }

    double squared_residual(const SlotPermutation& perm, const double* v,
                            std::vector<double>& pred) const {
        const auto n = static_cast<std::size_t>(layout.n_slots);
        pred.assign(model.intercept().begin(), model.intercept().end());
        for (std::size_t pos = 0; pos < n; ++pos) {
            const double* c = contrib.row(pos * n + static_cast<std::size_t>(perm[pos]));
            for (std::size_t t = 0; t < n_targets; ++t) pred[t] += c[t];
        }
        double sq = 0.0;
        for (std::size_t t = 0; t < n_targets; ++t) {
            const double d = v[t] - pred[t];
            sq += d * d;
        }
        return sq;
    }
};

}  // namespace detail

// Fast path of best_permutation for ridge predictors; bit-identical
// candidate scoring across calls, cross-checked against the generic path in
// the tests.
inline SlotPermutation best_permutation_linear(const RidgeModel& model, const double* z,
                                               const double* v, const SlotLayout& layout,
                                               detail::LinearPermutationScorer& scorer,
                                               double* best_residual = nullptr,
                                               double* identity_residual = nullptr) {
    scorer.set_sample(z);
    PermutationEnumerator en(layout);
    SlotPermutation best = en.current();
    double best_sq = std::numeric_limits<double>::infinity();
    std::vector<double> pred;
    for (; !en.done(); en.next()) {
        const double sq = scorer.squared_residual(en.current(), v, pred);
        if (identity_residual && is_identity(en.current())) *identity_residual = std::sqrt(sq);
        if (sq < best_sq) {
            best_sq = sq;
            best = en.current();
        }
    }
    if (best_residual) *best_residual = std::sqrt(best_sq);
    return best;
}

// Zero out entries below `fraction` of their column maximum.
inline Matrix threshold_importances(const Matrix& raw, double fraction = 0.03) {
    if (fraction < 0.0 || fraction >= 1.0) throw SpecError("threshold fraction must be in [0, 1)");
    Matrix out = raw;
    for (std::size_t j = 0; j < raw.cols(); ++j) {
        double mx = 0.0;
        for (std::size_t i = 0; i < raw.rows(); ++i) {
            if (raw(i, j) < 0.0) throw NumericError("importances must be non-negative");
            mx = std::max(mx, raw(i, j));
        }
        if (mx <= 0.0) continue;
        const double cut = fraction * mx;
        for (std::size_t i = 0; i < raw.rows(); ++i)
            if (out(i, j) < cut) out(i, j) = 0.0;
    }
    return out;
}

struct ProbeConfig {
    int n_iters = 100;  // 0 disables alignment entirely (plain DCI-style probing)
    double ridge_lambda = 1.0;
    ForestParams forest;  // forest.seed is ignored; seeds derive from `seed`
    double threshold_fraction = 0.03;
    bool early_stop = true;
    std::uint64_t seed = 0;

    void validate() const {
        if (n_iters < 0) throw SpecError("n_iters must be >= 0");
        if (threshold_fraction < 0.0 || threshold_fraction >= 1.0)
            throw SpecError("threshold fraction must be in [0, 1)");
    }
};

struct IterationTrace {
    int changed = 0;             // samples whose permutation moved this E step
    double residual_before = 0;  // total fit residual with this iteration's f, pre E step
    double residual_after = 0;   // same f, post E step
};

struct GroupProbeResult {
    int group_id = 0;
    int iterations_run = 0;
    std::vector<SlotPermutation> permutations;  // net permutation applied per sample
    Matrix aligned_latents;                     // every sample, slots aligned
    Matrix importances_raw;                     // L x F
    Matrix importances_thresholded;
    std::optional<JointDistribution> joint;
    std::vector<IterationTrace> trace;
    std::vector<RandomForest> forests;     // one per factor, fit on the aligned fit split
    ColumnStats target_stats;              // fit-split standardization of the encoded targets
    Matrix eval_targets_std;               // n_eval x F
    Matrix eval_predictions_std;           // n_eval x F
};

struct ProbeInput {
    const Matrix* latents = nullptr;  // n x latent_dim
    const Matrix* targets = nullptr;  // n x F, already encoded (categorical -> scalar)
    const SplitSets* splits = nullptr;
    int group_id = 0;
};

inline GroupProbeResult run_probing(const ProbeInput& input, SchemaPtr schema,
                                    const SlotLayout& layout, const ProbeConfig& config) {
    config.validate();
    layout.validate();
    const Matrix& latents = *input.latents;
    const Matrix& targets = *input.targets;
    const SplitSets& splits = *input.splits;
    if (latents.rows() != targets.rows()) throw SpecError("latent/target row mismatch");
    if (latents.cols() != static_cast<std::size_t>(layout.latent_dim()))
        throw SpecError("latent width does not match layout");
    if (targets.cols() != schema->factor_count())
        throw SpecError("target width does not match the schema's factor space");
    if (latents.cols() != schema->latent_count())
        throw SpecError("latent width does not match the schema's latent space");
    if (splits.fit.size() < 2) throw SpecError("probing needs at least 2 fit samples");
    if (!latents.all_finite()) throw NumericError("probing input latents contain non-finite values");

    GroupProbeResult res;
    res.group_id = input.group_id;
    res.aligned_latents = latents;
    res.permutations.assign(latents.rows(), identity_permutation(layout.n_slots));

    // standardize encoded targets with fit-split statistics
    res.target_stats = column_stats(targets, splits.fit);
    const Matrix targets_std = standardize(targets, res.target_stats);

    const std::size_t n_fit = splits.fit.size();
    const std::size_t n_factors = targets.cols();

    if (config.n_iters > 0) {
        for (int iter = 0; iter < config.n_iters; ++iter) {
            Matrix x_fit(n_fit, latents.cols());
            Matrix y_fit(n_fit, n_factors);
            for (std::size_t k = 0; k < n_fit; ++k) {
                const auto row = static_cast<std::size_t>(splits.fit[k]);
                std::copy_n(res.aligned_latents.row(row), latents.cols(), x_fit.row(k));
                std::copy_n(targets_std.row(row), n_factors, y_fit.row(k));
            }
            const RidgeModel model = ridge_fit(x_fit, y_fit, config.ridge_lambda);

            std::vector<SlotPermutation> chosen(n_fit);
            std::vector<double> res_before(n_fit), res_after(n_fit);
            parallel_for(n_fit, [&](std::size_t k) {
                detail::LinearPermutationScorer scorer(model, layout);
                const auto row = static_cast<std::size_t>(splits.fit[k]);
                double id_res = 0.0, best_res = 0.0;
                chosen[k] = best_permutation_linear(model, res.aligned_latents.row(row),
                                                    targets_std.row(row), layout, scorer,
                                                    &best_res, &id_res);
                res_before[k] = id_res;
                res_after[k] = best_res;
            });

            IterationTrace tr;
            std::vector<double> scratch;
            for (std::size_t k = 0; k < n_fit; ++k) {
                tr.residual_before += res_before[k];
                tr.residual_after += res_after[k];
                if (!is_identity(chosen[k])) {
                    ++tr.changed;
                    const auto row = static_cast<std::size_t>(splits.fit[k]);
                    detail::apply_permutation_row(res.aligned_latents.row(row), layout, chosen[k],
                                                  scratch);
                    res.permutations[row] = compose_permutations(res.permutations[row], chosen[k]);
                }
            }
            res.trace.push_back(tr);
            ++res.iterations_run;
            if (config.early_stop && tr.changed == 0) break;
        }
    }

    // final predictor: one forest per factor on the aligned fit split
    Matrix x_fit(n_fit, latents.cols());
    std::vector<std::vector<double>> y_cols(n_factors, std::vector<double>(n_fit));
    for (std::size_t k = 0; k < n_fit; ++k) {
        const auto row = static_cast<std::size_t>(splits.fit[k]);
        std::copy_n(res.aligned_latents.row(row), latents.cols(), x_fit.row(k));
        for (std::size_t t = 0; t < n_factors; ++t) y_cols[t][k] = targets_std(row, t);
    }
    res.forests.resize(n_factors);
    for (std::size_t t = 0; t < n_factors; ++t) {
        ForestParams params = config.forest;
        params.seed = derive_seed(config.seed, 0xf04e5ULL, static_cast<std::uint64_t>(input.group_id), t);
        res.forests[t] = forest_fit(x_fit, y_cols[t], params);
    }
    res.importances_raw = Matrix(latents.cols(), n_factors);
    for (std::size_t t = 0; t < n_factors; ++t) {
        const auto imp = res.forests[t].importances();
        for (std::size_t i = 0; i < latents.cols(); ++i) res.importances_raw(i, t) = imp[i];
    }

    // align held-out samples once, with the final predictor
    if (config.n_iters > 0) {
        auto align_rows = [&](const std::vector<int>& rows) {
            parallel_for(rows.size(), [&](std::size_t k) {
                const auto row = static_cast<std::size_t>(rows[k]);
                const std::vector<double> z = res.aligned_latents.row_copy(row);
                std::vector<double> v(n_factors);
                std::copy_n(targets_std.row(row), n_factors, v.begin());
                auto forest_predict = [&](const std::vector<double>& zz) {
                    std::vector<double> out(n_factors);
                    for (std::size_t t = 0; t < n_factors; ++t) out[t] = res.forests[t].predict(zz);
                    return out;
                };
                const SlotPermutation perm = best_permutation(forest_predict, z, v, layout);
                if (!is_identity(perm)) {
                    std::vector<double> scratch;
                    detail::apply_permutation_row(res.aligned_latents.row(row), layout, perm,
                                                  scratch);
                    res.permutations[row] = compose_permutations(res.permutations[row], perm);
                }
            });
        };
        align_rows(splits.validation);
        align_rows(splits.evaluation);
    }

    res.importances_thresholded = threshold_importances(res.importances_raw,
                                                        config.threshold_fraction);
    res.joint = normalize_joint(res.importances_thresholded, schema);

    // evaluation-split targets and predictions in standardized space
    const std::size_t n_eval = splits.evaluation.size();
    res.eval_targets_std = Matrix(n_eval, n_factors);
    res.eval_predictions_std = Matrix(n_eval, n_factors);
    parallel_for(n_eval, [&](std::size_t k) {
        const auto row = static_cast<std::size_t>(splits.evaluation[k]);
        const std::vector<double> z = res.aligned_latents.row_copy(row);
        for (std::size_t t = 0; t < n_factors; ++t) {
            res.eval_targets_std(k, t) = targets_std(row, t);
            res.eval_predictions_std(k, t) = res.forests[t].predict(z);
        }
    });
    return res;
}

}  // namespace strudel
