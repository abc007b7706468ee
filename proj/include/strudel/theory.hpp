// Machine verification of the framework's theoretical identities on
// arbitrary joint distributions: the DCI equivalence at the identity
// projection, the decomposition lower-bound chain, the upper bound with
// conditional-mutual-information interaction terms, and the exact two-part
// identity. All checks evaluate both the completeness and the
// disentanglement side.
#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "strudel/error.hpp"
#include "strudel/info.hpp"
#include "strudel/joint.hpp"
#include "strudel/metrics.hpp"
#include "strudel/schema.hpp"

namespace strudel {

constexpr double kBoundTolerance = 1e-9;

struct Inequality {
    double lhs = 0.0;
    double rhs = 0.0;
    double slack = 0.0;  // rhs - lhs
    bool holds = false;  // lhs <= rhs + tolerance

    static Inequality of(double lhs, double rhs) {
        return {lhs, rhs, rhs - lhs, lhs <= rhs + kBoundTolerance};
    }
};

// |C(identity) - weighted DCI completeness| and the symmetric D residual.
struct DciEquivalence {
    double completeness_residual = 0.0;
    double disentanglement_residual = 0.0;
    double completeness = 0.0;
    double disentanglement = 0.0;
};

inline DciEquivalence check_dci_equivalence(const JointDistribution& joint) {
    const Projection id = joint.schema()->identity_projection();
    DciEquivalence r;
    r.completeness = completeness(joint, id);
    r.disentanglement = disentanglement(joint, id);
    const DciScores s = dci_scores(joint);
    r.completeness_residual = std::abs(r.completeness - s.weighted_completeness);
    r.disentanglement_residual = std::abs(r.disentanglement - s.weighted_disentanglement);
    return r;
}

namespace detail {

inline void require_decomposition(const JointDistribution& joint, const Projection& p,
                                  const std::vector<Projection>& parts) {
    if (parts.empty()) throw SpecError("decomposition needs at least one part");
    if (!check_decomposition(*joint.schema(), p, parts))
        throw SpecError("parts are not a disjoint decomposition of the projection");
}

inline std::size_t group_count(const HierarchySchema& schema, const Projection& p, Side side) {
    std::size_t n = 0;
    group_ids(schema, p, side, &n);
    return n;
}

}  // namespace detail

// One side of the lower-bound chain:
//   outer = 1 - k + sum_s score_s
//   mid   = 1 - sum_s (1 - score_s) / log_{G^s}(G)
//   outer <= mid <= metric
struct ChainCheck {
    double metric = 0.0;
    double mid = 0.0;
    double outer = 0.0;
    Inequality outer_vs_mid;
    Inequality mid_vs_metric;
    std::vector<double> part_scores;
    std::vector<double> log_corrections;  // log_{G^s}(G)
    bool holds() const { return outer_vs_mid.holds && mid_vs_metric.holds; }
};

struct LowerBoundResult {
    ChainCheck completeness;
    ChainCheck disentanglement;
    bool holds() const { return completeness.holds() && disentanglement.holds(); }
};

inline LowerBoundResult check_lower_bound(const JointDistribution& joint, const Projection& p,
                                          const std::vector<Projection>& parts) {
    detail::require_decomposition(joint, p, parts);
    const auto& schema = *joint.schema();
    LowerBoundResult res;
    for (int side_idx = 0; side_idx < 2; ++side_idx) {
        const Side side = side_idx == 0 ? Side::latents : Side::factors;
        ChainCheck& chain = side_idx == 0 ? res.completeness : res.disentanglement;
        const std::size_t total_groups = detail::group_count(schema, p, side);
        if (total_groups < 2)
            throw SpecError("lower bound requires at least 2 groups in the joint projection");
        chain.metric =
            side == Side::latents ? completeness(joint, p) : disentanglement(joint, p);
        double sum_scores = 0.0, sum_corrected = 0.0;
        for (const auto& part : parts) {
            const std::size_t part_groups = detail::group_count(schema, part, side);
            if (part_groups < 2)
                throw SpecError("lower bound requires at least 2 groups in every part");
            const double score = side == Side::latents ? completeness(joint, part)
                                                       : disentanglement(joint, part);
            const double corr = std::log(static_cast<double>(total_groups)) /
                                std::log(static_cast<double>(part_groups));
            chain.part_scores.push_back(score);
            chain.log_corrections.push_back(corr);
            sum_scores += score;
            sum_corrected += (1.0 - score) / corr;
        }
        chain.outer = 1.0 - static_cast<double>(parts.size()) + sum_scores;
        chain.mid = 1.0 - sum_corrected;
        chain.outer_vs_mid = Inequality::of(chain.outer, chain.mid);
        chain.mid_vs_metric = Inequality::of(chain.mid, chain.metric);
    }
    return res;
}

// One side of the upper bound:
//   metric <= 1 - max_s [ (1 - score_s) / log_{G^s}(G) - T_s ]
// where T_s is the conditional mutual information between part s on one side
// and the union of the remaining parts on the other side, given part s of
// the other side.
struct UpperBoundSide {
    double metric = 0.0;
    double bound = 0.0;
    Inequality ineq;
    std::vector<double> part_scores;
    std::vector<double> log_corrections;
    std::vector<double> mi_terms;
};

struct UpperBoundResult {
    UpperBoundSide completeness;
    UpperBoundSide disentanglement;
    bool holds() const { return completeness.ineq.holds && disentanglement.ineq.holds; }
};

inline UpperBoundResult check_upper_bound(const JointDistribution& joint, const Projection& p,
                                          const std::vector<Projection>& parts) {
    detail::require_decomposition(joint, p, parts);
    const auto& schema = *joint.schema();
    const std::vector<double> cells = joint.cells();
    UpperBoundResult res;
    for (int side_idx = 0; side_idx < 2; ++side_idx) {
        const Side own = side_idx == 0 ? Side::latents : Side::factors;
        const Side other = side_idx == 0 ? Side::factors : Side::latents;
        UpperBoundSide& ub = side_idx == 0 ? res.completeness : res.disentanglement;
        const std::size_t total_groups = detail::group_count(schema, p, own);
        if (total_groups < 2)
            throw SpecError("upper bound requires at least 2 groups in the joint projection");
        ub.metric = own == Side::latents ? completeness(joint, p) : disentanglement(joint, p);
        double worst = -std::numeric_limits<double>::infinity();
        for (std::size_t s = 0; s < parts.size(); ++s) {
            const std::size_t part_groups = detail::group_count(schema, parts[s], own);
            if (part_groups < 2)
                throw SpecError("upper bound requires at least 2 groups in every part");
            const double score = own == Side::latents ? completeness(joint, parts[s])
                                                      : disentanglement(joint, parts[s]);
            const double corr = std::log(static_cast<double>(total_groups)) /
                                std::log(static_cast<double>(part_groups));
            double mi = 0.0;
            if (parts.size() > 1) {
                std::vector<Projection> rest;
                for (std::size_t t = 0; t < parts.size(); ++t)
                    if (t != s) rest.push_back(parts[t]);
                const Projection rest_union = union_projection(rest);
                mi = info::conditional_mutual_information(
                    cells, joint.projected_labels(parts[s], own),
                    joint.projected_labels(rest_union, other),
                    joint.projected_labels(parts[s], other), static_cast<double>(total_groups));
            }
            ub.part_scores.push_back(score);
            ub.log_corrections.push_back(corr);
            ub.mi_terms.push_back(mi);
            worst = std::max(worst, (1.0 - score) / corr - mi);
        }
        ub.bound = 1.0 - worst;
        ub.ineq = Inequality::of(ub.metric, ub.bound);
    }
    return res;
}

// Exact identity for a two-part decomposition:
//   C(rho) = 1 - (1-C(rho1))/log_{L1}(L) - (1-C(rho2))/log_{L2}(L)
//            + I_L(X1;Y2|Y1) + I_L(X2;Y1|Y2) + I_L(X1;X2|Y1,Y2)
// with Xs/Ys the part projections of the latent/factor variable, and the
// exactly symmetric statement for disentanglement.
struct K2IdentitySide {
    double metric = 0.0;
    double reconstructed = 0.0;
    double residual = 0.0;  // |metric - reconstructed|
    std::vector<double> mi_terms;
};

struct K2IdentityResult {
    K2IdentitySide completeness;
    K2IdentitySide disentanglement;
    bool holds() const {
        return completeness.residual <= kBoundTolerance &&
               disentanglement.residual <= kBoundTolerance;
    }
};

inline K2IdentityResult check_k2_identity(const JointDistribution& joint, const Projection& p1,
                                          const Projection& p2) {
    const Projection whole = union_projection({p1, p2});
    detail::require_decomposition(joint, whole, {p1, p2});
    const auto& schema = *joint.schema();
    const std::vector<double> cells = joint.cells();
    K2IdentityResult res;
    for (int side_idx = 0; side_idx < 2; ++side_idx) {
        const Side own = side_idx == 0 ? Side::latents : Side::factors;
        const Side other = side_idx == 0 ? Side::factors : Side::latents;
        K2IdentitySide& out = side_idx == 0 ? res.completeness : res.disentanglement;
        const std::size_t total = detail::group_count(schema, whole, own);
        const std::size_t g1 = detail::group_count(schema, p1, own);
        const std::size_t g2 = detail::group_count(schema, p2, own);
        if (total < 2 || g1 < 2 || g2 < 2)
            throw SpecError("k=2 identity requires at least 2 groups per part and overall");
        const double base = static_cast<double>(total);
        auto score = [&](const Projection& pr) {
            return own == Side::latents ? completeness(joint, pr) : disentanglement(joint, pr);
        };
        out.metric = score(whole);
        const double corr1 = std::log(base) / std::log(static_cast<double>(g1));
        const double corr2 = std::log(base) / std::log(static_cast<double>(g2));
        const auto own1 = joint.projected_labels(p1, own);
        const auto own2 = joint.projected_labels(p2, own);
        const auto oth1 = joint.projected_labels(p1, other);
        const auto oth2 = joint.projected_labels(p2, other);
        const auto oth12 = info::combine_labels(oth1, oth2);
        out.mi_terms = {
            info::conditional_mutual_information(cells, own1, oth2, oth1, base),
            info::conditional_mutual_information(cells, own2, oth1, oth2, base),
            info::conditional_mutual_information(cells, own1, own2, oth12, base),
        };
        out.reconstructed = 1.0 - (1.0 - score(p1)) / corr1 - (1.0 - score(p2)) / corr2 +
                            out.mi_terms[0] + out.mi_terms[1] + out.mi_terms[2];
        out.residual = std::abs(out.metric - out.reconstructed);
    }
    return res;
}

// ---- random multi-way joints for the lemma suite --------------------------

// Dirichlet-distributed joint over an a x b x c grid, as parallel cell
// arrays compatible with the info primitives.
struct ThreeWayJoint {
    std::vector<double> p;
    info::Labels a, b, c;
};

inline ThreeWayJoint random_three_way(std::size_t da, std::size_t db, std::size_t dc,
                                      double concentration, std::uint64_t seed) {
    if (!(concentration > 0.0)) throw SpecError("Dirichlet concentration must be > 0");
    std::mt19937_64 rng = make_rng(seed, 0x33776179ULL);
    std::gamma_distribution<double> gamma(concentration, 1.0);
    ThreeWayJoint j;
    const std::size_t n = da * db * dc;
    j.p.resize(n);
    j.a.resize(n);
    j.b.resize(n);
    j.c.resize(n);
    double sum = 0.0;
    std::size_t idx = 0;
    for (std::size_t ia = 0; ia < da; ++ia)
        for (std::size_t ib = 0; ib < db; ++ib)
            for (std::size_t ic = 0; ic < dc; ++ic, ++idx) {
                j.p[idx] = gamma(rng);
                j.a[idx] = static_cast<int>(ia);
                j.b[idx] = static_cast<int>(ib);
                j.c[idx] = static_cast<int>(ic);
                sum += j.p[idx];
            }
    for (double& v : j.p) v /= sum;
    double total = 0.0;
    for (double v : j.p) total += v;
    if (total != 1.0 && total > 0.0)
        for (double& v : j.p) v /= total;
    return j;
}

// Residuals of the standard information-theoretic lemmas on one joint.
// Every entry is a signed violation: negative values within tolerance mean
// the lemma holds.
struct LemmaResiduals {
    double change_of_base = 0.0;      // |H_K2(A|C) * log_K(K2) - H_K(A|C)|
    double subadditivity = 0.0;       // H(A,B|C) - H(A|C) - H(B|C)  (should be <= 0)
    double mi_nonnegativity = 0.0;    // -min(I(A;B), I(A;B|C))     (should be <= 0)
    double mi_identity = 0.0;         // |I(A;B|C) - (H(A|C) - H(A|B,C))|
    double joint_vs_marginal = 0.0;   // max marginal - joint        (should be <= 0)
    double chain_identity = 0.0;      // |H(A,B|C) - H(A|C) - H(B|C) + I(A;B|C)|
};

inline LemmaResiduals check_lemmas(const ThreeWayJoint& j, double base_k, double base_k2) {
    LemmaResiduals r;
    const auto ab = info::combine_labels(j.a, j.b);
    const auto bc = info::combine_labels(j.b, j.c);
    const double h_a_c_k = info::conditional_entropy(j.p, j.a, j.c, base_k);
    const double h_a_c_k2 = info::conditional_entropy(j.p, j.a, j.c, base_k2);
    r.change_of_base = std::abs(h_a_c_k2 * (std::log(base_k2) / std::log(base_k)) - h_a_c_k);
    const double h_b_c = info::conditional_entropy(j.p, j.b, j.c, base_k);
    const double h_ab_c = info::conditional_entropy(j.p, ab, j.c, base_k);
    r.subadditivity = h_ab_c - h_a_c_k - h_b_c;
    const double mi = info::mutual_information(j.p, j.a, j.b, base_k);
    const double cmi = info::conditional_mutual_information(j.p, j.a, j.b, j.c, base_k);
    r.mi_nonnegativity = -std::min(mi, cmi);
    const double h_a_bc = info::conditional_entropy(j.p, j.a, bc, base_k);
    r.mi_identity = std::abs(cmi - (h_a_c_k - h_a_bc));
    r.joint_vs_marginal = std::max(h_a_c_k, h_b_c) - h_ab_c;
    r.chain_identity = std::abs(h_ab_c - (h_a_c_k + h_b_c - cmi));
    return r;
}

}  // namespace strudel
