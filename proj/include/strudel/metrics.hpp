// Projection-based disentanglement metrics over a joint distribution:
// completeness C(rho) and disentanglement D(rho), the per-factor DCI
// breakdown recovered at the identity projection, informativeness of the
// final predictors, background stripping, and cross-group aggregation.
#pragma once

#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "strudel/error.hpp"
#include "strudel/info.hpp"
#include "strudel/joint.hpp"
#include "strudel/schema.hpp"

namespace strudel {

// H_base(rows | cols) of a matrix-shaped joint.
inline double conditional_entropy_rows_given_cols(const Matrix& joint, double base) {
    std::vector<double> col_mass(joint.cols(), 0.0);
    double total = 0.0;
    for (std::size_t i = 0; i < joint.rows(); ++i)
        for (std::size_t j = 0; j < joint.cols(); ++j) {
            const double v = joint(i, j);
            if (v < 0.0) throw NumericError("joint has negative entries");
            col_mass[j] += v;
            total += v;
        }
    if (std::abs(total - 1.0) > 1e-8) throw NumericError("joint must sum to 1");
    double h = 0.0;
    for (std::size_t j = 0; j < joint.cols(); ++j) {
        if (col_mass[j] <= 0.0) continue;
        for (std::size_t i = 0; i < joint.rows(); ++i) {
            const double v = joint(i, j);
            if (v > 0.0) h -= v * std::log(v / col_mass[j]);
        }
    }
    return info::rebase(h, base);
}

inline double conditional_entropy_cols_given_rows(const Matrix& joint, double base) {
    Matrix t(joint.cols(), joint.rows());
    for (std::size_t i = 0; i < joint.rows(); ++i)
        for (std::size_t j = 0; j < joint.cols(); ++j) t(j, i) = joint(i, j);
    return conditional_entropy_rows_given_cols(t, base);
}

// C(rho) = 1 - H_U(rho(X) | rho(Y)). A single latent group (U = 1) carries
// no partition uncertainty and scores 1 by convention.
inline double completeness(const JointDistribution& joint, const Projection& proj) {
    const ProjectedJoint m = marginalize(joint, proj);
    const std::size_t u = m.row_labels.size();
    if (u == 1) return 1.0;
    return 1.0 - conditional_entropy_rows_given_cols(m.p, static_cast<double>(u));
}

// D(rho) = 1 - H_V(rho(Y) | rho(X)); V = 1 scores 1 symmetrically.
inline double disentanglement(const JointDistribution& joint, const Projection& proj) {
    const ProjectedJoint m = marginalize(joint, proj);
    const std::size_t v = m.col_labels.size();
    if (v == 1) return 1.0;
    return 1.0 - conditional_entropy_cols_given_rows(m.p, static_cast<double>(v));
}

// Per-factor/per-latent DCI decomposition at the identity projection.
// Zero-mass columns (factors the probe assigned no importance) are NA with
// weight zero and drop out of the weighted averages.
struct DciScores {
    std::vector<std::optional<double>> completeness_per_factor;
    std::vector<double> factor_weights;  // P[Y = tau]
    double weighted_completeness = 0.0;
    std::vector<std::optional<double>> disentanglement_per_latent;
    std::vector<double> latent_weights;  // P[X = tau_hat]
    double weighted_disentanglement = 0.0;
};

inline DciScores dci_scores(const JointDistribution& joint) {
    const Matrix& p = joint.matrix();
    const std::size_t nl = p.rows(), nf = p.cols();
    DciScores out;
    out.factor_weights = joint.factor_marginal();
    out.latent_weights = joint.latent_marginal();
    out.completeness_per_factor.resize(nf);
    out.disentanglement_per_latent.resize(nl);
    for (std::size_t j = 0; j < nf; ++j) {
        const double w = out.factor_weights[j];
        if (w <= 0.0) continue;
        double h = 0.0;
        for (std::size_t i = 0; i < nl; ++i) {
            const double v = p(i, j) / w;
            if (v > 0.0) h -= v * std::log(v);
        }
        const double c = 1.0 - info::rebase(h, static_cast<double>(nl));
        out.completeness_per_factor[j] = c;
        out.weighted_completeness += w * c;
    }
    for (std::size_t i = 0; i < nl; ++i) {
        const double w = out.latent_weights[i];
        if (w <= 0.0) continue;
        double h = 0.0;
        for (std::size_t j = 0; j < nf; ++j) {
            const double v = p(i, j) / w;
            if (v > 0.0) h -= v * std::log(v);
        }
        const double d = 1.0 - info::rebase(h, static_cast<double>(nf));
        out.disentanglement_per_latent[i] = d;
        out.weighted_disentanglement += w * d;
    }
    return out;
}

// Normalized prediction error per factor over the evaluation split, in
// standardized target space: ||pred - target|| / ||target||. A zero-norm
// target column is NA. Global score is the unweighted mean of defined
// factors.
struct Informativeness {
    std::vector<std::optional<double>> per_factor;
    std::optional<double> global;
};

inline Informativeness informativeness(const Matrix& predictions_std, const Matrix& targets_std) {
    if (predictions_std.rows() != targets_std.rows() ||
        predictions_std.cols() != targets_std.cols())
        throw SpecError("informativeness: prediction/target shape mismatch");
    Informativeness out;
    out.per_factor.resize(targets_std.cols());
    double sum = 0.0;
    int defined = 0;
    for (std::size_t j = 0; j < targets_std.cols(); ++j) {
        double err = 0.0, norm = 0.0;
        for (std::size_t i = 0; i < targets_std.rows(); ++i) {
            const double d = predictions_std(i, j) - targets_std(i, j);
            err += d * d;
            norm += targets_std(i, j) * targets_std(i, j);
        }
        if (norm <= 0.0) continue;
        const double val = std::sqrt(err) / std::sqrt(norm);
        out.per_factor[j] = val;
        sum += val;
        ++defined;
    }
    if (defined > 0) out.global = sum / defined;
    return out;
}

// Remove background-related factors and the latent slot that captures them.
//
// A factor tuple is background-tagged when any of its labels is in `tags`.
// The background slot is the level-`slot_level` latent group with the
// largest summed mass toward tagged factors (ties -> lowest group index,
// flagged in the result). Tagged factor columns and that group's latent
// rows are removed and the remaining mass renormalized.
struct StripResult {
    JointDistribution joint;
    int removed_slot = -1;  // group index at slot_level; -1 when nothing removed
    std::string removed_slot_label;
    bool tie = false;
};

inline StripResult strip_background(const JointDistribution& joint,
                                    const std::set<std::string>& tags, int slot_level = 0) {
    if (tags.empty()) return {joint, -1, "", false};
    const auto& schema = *joint.schema();
    std::vector<bool> bg_factor(schema.factor_count(), false);
    bool any = false;
    for (std::size_t j = 0; j < schema.factor_count(); ++j)
        for (const auto& label : schema.factor_tuples()[j])
            if (tags.count(label)) {
                bg_factor[j] = true;
                any = true;
                break;
            }
    if (!any)
        throw SpecError("background tags match no factor tuple");

    Projection slot_proj{{slot_level}};
    const auto groups = projected_groups(schema, slot_proj, Side::latents);
    const Matrix& p = joint.matrix();
    StripResult res{joint, -1, "", false};
    double best = -1.0;
    for (std::size_t g = 0; g < groups.size(); ++g) {
        double mass = 0.0;
        for (int row : groups[g].members)
            for (std::size_t j = 0; j < p.cols(); ++j)
                if (bg_factor[j]) mass += p(static_cast<std::size_t>(row), j);
        if (mass > best) {
            best = mass;
            res.removed_slot = static_cast<int>(g);
            res.tie = false;
        } else if (mass == best) {
            res.tie = true;  // keep the lowest index already stored
        }
    }
    res.removed_slot_label = tuple_label(groups[res.removed_slot].label);

    std::vector<bool> drop_row(schema.latent_count(), false);
    for (int row : groups[res.removed_slot].members) drop_row[static_cast<std::size_t>(row)] = true;

    std::vector<Tuple> kept_factors, kept_latents;
    std::vector<int> keep_cols, keep_rows;
    for (std::size_t j = 0; j < schema.factor_count(); ++j)
        if (!bg_factor[j]) {
            kept_factors.push_back(schema.factor_tuples()[j]);
            keep_cols.push_back(static_cast<int>(j));
        }
    for (std::size_t i = 0; i < schema.latent_count(); ++i)
        if (!drop_row[i]) {
            kept_latents.push_back(schema.latent_tuples()[i]);
            keep_rows.push_back(static_cast<int>(i));
        }
    if (kept_factors.empty()) throw SpecError("background stripping removed every factor");
    if (kept_latents.empty()) throw SpecError("background stripping removed every latent slot");

    auto reduced_schema = std::make_shared<const HierarchySchema>(
        schema.attributes(), std::move(kept_factors), std::move(kept_latents));
    Matrix reduced(keep_rows.size(), keep_cols.size());
    for (std::size_t i = 0; i < keep_rows.size(); ++i)
        for (std::size_t j = 0; j < keep_cols.size(); ++j)
            reduced(i, j) = p(static_cast<std::size_t>(keep_rows[i]),
                              static_cast<std::size_t>(keep_cols[j]));
    res.joint = normalize_joint(reduced, std::move(reduced_schema));
    return res;
}

// ---- per-group report and aggregation -------------------------------------

struct ProjectionScores {
    double completeness = 0.0;
    double disentanglement = 0.0;
};

struct GroupMetrics {
    int group_id = 0;
    std::map<std::string, ProjectionScores> projections;
    DciScores dci;
    std::vector<std::string> factor_names;  // keys for the dci per-factor values
    std::vector<std::string> latent_names;
    Informativeness inf;
    std::vector<std::string> inf_factor_names;  // pre-strip factor keys
    int background_slot_removed = -1;
    std::string background_slot_label;
    bool background_tie = false;
};

struct MeanStderr {
    double mean = 0.0;
    std::optional<double> stderr_;  // defined for >= 2 contributing groups
    int n = 0;
};

// NA-aware mean and standard error over groups.
inline MeanStderr aggregate_values(const std::vector<std::optional<double>>& values) {
    MeanStderr out;
    double sum = 0.0;
    for (const auto& v : values)
        if (v) {
            sum += *v;
            ++out.n;
        }
    if (out.n == 0) return out;
    out.mean = sum / out.n;
    if (out.n >= 2) {
        double ss = 0.0;
        for (const auto& v : values)
            if (v) ss += (*v - out.mean) * (*v - out.mean);
        out.stderr_ = std::sqrt(ss / (out.n - 1) / out.n);
    }
    return out;
}

struct AggregateMetrics {
    std::map<std::string, std::pair<MeanStderr, MeanStderr>> projections;  // name -> (C, D)
    MeanStderr informativeness_global;
    std::map<std::string, MeanStderr> informativeness_per_factor;
    std::map<std::string, MeanStderr> completeness_per_factor;
    std::map<std::string, MeanStderr> factor_weights;
};

struct MetricReport {
    std::vector<GroupMetrics> groups;
    AggregateMetrics aggregate;
};

inline AggregateMetrics aggregate_groups(const std::vector<GroupMetrics>& groups) {
    if (groups.empty()) throw SpecError("aggregate_groups needs at least one group");
    AggregateMetrics agg;
    for (const auto& [name, scores] : groups.front().projections) {
        std::vector<std::optional<double>> cs, ds;
        for (const auto& g : groups) {
            auto it = g.projections.find(name);
            if (it != g.projections.end()) {
                cs.push_back(it->second.completeness);
                ds.push_back(it->second.disentanglement);
            }
        }
        agg.projections[name] = {aggregate_values(cs), aggregate_values(ds)};
    }
    {
        std::vector<std::optional<double>> gi;
        for (const auto& g : groups) gi.push_back(g.inf.global);
        agg.informativeness_global = aggregate_values(gi);
    }
    // per-factor tables, keyed by tuple label
    std::map<std::string, std::vector<std::optional<double>>> inf_cols, comp_cols, weight_cols;
    for (const auto& g : groups) {
        for (std::size_t j = 0; j < g.inf_factor_names.size(); ++j)
            inf_cols[g.inf_factor_names[j]].push_back(g.inf.per_factor[j]);
        for (std::size_t j = 0; j < g.factor_names.size(); ++j) {
            comp_cols[g.factor_names[j]].push_back(g.dci.completeness_per_factor[j]);
            weight_cols[g.factor_names[j]].push_back(g.dci.factor_weights[j]);
        }
    }
    for (const auto& [name, vals] : inf_cols) agg.informativeness_per_factor[name] = aggregate_values(vals);
    for (const auto& [name, vals] : comp_cols) agg.completeness_per_factor[name] = aggregate_values(vals);
    for (const auto& [name, vals] : weight_cols) agg.factor_weights[name] = aggregate_values(vals);
    return agg;
}

}  // namespace strudel
