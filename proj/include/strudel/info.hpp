// Discrete information-theory primitives.
//
// All quantities are computed from their definitions over a sparse list of
// cells: parallel arrays of masses and integer labels, one label column per
// random variable. Internally everything accumulates in natural log and is
// rebased once at the end.
//
// Base semantics: base K > 1 is the usual log_K; K == 1 is the degenerate
// single-group case, where zero uncertainty rebases to 0 and any positive
// uncertainty to +infinity.
#pragma once

#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <vector>

#include "strudel/error.hpp"

namespace strudel::info {

using Labels = std::vector<int>;

namespace detail {

inline void validate_mass(const std::vector<double>& p) {
    double sum = 0.0;
    for (double v : p) {
        if (v < 0.0) throw NumericError("probability mass must be non-negative");
        if (!std::isfinite(v)) throw NumericError("probability mass must be finite");
        sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-8)
        throw NumericError("probability masses must sum to 1 (got " + std::to_string(sum) + ")");
}

template <std::size_t N>
std::map<std::array<int, N>, double> accumulate(const std::vector<double>& p,
                                                const std::array<const Labels*, N>& cols) {
    for (const Labels* c : cols)
        if (c->size() != p.size()) throw SpecError("label column length mismatch");
    std::map<std::array<int, N>, double> m;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (p[i] == 0.0) continue;
        std::array<int, N> key;
        for (std::size_t k = 0; k < N; ++k) key[k] = (*cols[k])[i];
        m[key] += p[i];
    }
    return m;
}

}  // namespace detail

inline double rebase(double h_nat, double base) {
    if (base < 1.0) throw SpecError("entropy base must be >= 1");
    if (base == 1.0) return h_nat > 1e-15 ? std::numeric_limits<double>::infinity() : 0.0;
    return h_nat / std::log(base);
}

// H(X) of an explicit distribution, natural log.
inline double entropy_nat(const std::vector<double>& p) {
    detail::validate_mass(p);
    double h = 0.0;
    for (double v : p)
        if (v > 0.0) h -= v * std::log(v);
    return h;
}

inline double entropy(const std::vector<double>& p, double base) {
    return rebase(entropy_nat(p), base);
}

// H(A) where A is a labeling of the cells.
inline double entropy_nat(const std::vector<double>& p, const Labels& a) {
    detail::validate_mass(p);
    auto pa = detail::accumulate<1>(p, {&a});
    double h = 0.0;
    for (const auto& [k, v] : pa)
        if (v > 0.0) h -= v * std::log(v);
    return h;
}

// H(A | B) = -sum P(a,b) ln P(a|b)
inline double conditional_entropy_nat(const std::vector<double>& p, const Labels& a,
                                      const Labels& b) {
    detail::validate_mass(p);
    auto pab = detail::accumulate<2>(p, {&a, &b});
    auto pb = detail::accumulate<1>(p, {&b});
    double h = 0.0;
    for (const auto& [k, v] : pab) {
        if (v <= 0.0) continue;
        const double denom = pb.at({k[1]});
        h -= v * std::log(v / denom);
    }
    return h;
}

inline double conditional_entropy(const std::vector<double>& p, const Labels& a, const Labels& b,
                                  double base) {
    return rebase(conditional_entropy_nat(p, a, b), base);
}

// I(A ; B) = sum P(a,b) ln [ P(a,b) / (P(a) P(b)) ]
inline double mutual_information_nat(const std::vector<double>& p, const Labels& a,
                                     const Labels& b) {
    detail::validate_mass(p);
    auto pab = detail::accumulate<2>(p, {&a, &b});
    auto pa = detail::accumulate<1>(p, {&a});
    auto pb = detail::accumulate<1>(p, {&b});
    double mi = 0.0;
    for (const auto& [k, v] : pab) {
        if (v <= 0.0) continue;
        mi += v * std::log(v / (pa.at({k[0]}) * pb.at({k[1]})));
    }
    return mi;
}

inline double mutual_information(const std::vector<double>& p, const Labels& a, const Labels& b,
                                 double base) {
    if (!(base > 1.0)) throw SpecError("mutual information base must be > 1");
    return mutual_information_nat(p, a, b) / std::log(base);
}

// I(A ; B | C) = sum P(a,b,c) ln [ P(a,b,c) P(c) / (P(a,c) P(b,c)) ]
inline double conditional_mutual_information_nat(const std::vector<double>& p, const Labels& a,
                                                 const Labels& b, const Labels& c) {
    detail::validate_mass(p);
    auto pabc = detail::accumulate<3>(p, {&a, &b, &c});
    auto pac = detail::accumulate<2>(p, {&a, &c});
    auto pbc = detail::accumulate<2>(p, {&b, &c});
    auto pc = detail::accumulate<1>(p, {&c});
    double mi = 0.0;
    for (const auto& [k, v] : pabc) {
        if (v <= 0.0) continue;
        const double num = v * pc.at({k[2]});
        const double den = pac.at({k[0], k[2]}) * pbc.at({k[1], k[2]});
        mi += v * std::log(num / den);
    }
    return mi;
}

inline double conditional_mutual_information(const std::vector<double>& p, const Labels& a,
                                             const Labels& b, const Labels& c, double base) {
    if (!(base > 1.0)) throw SpecError("mutual information base must be > 1");
    return conditional_mutual_information_nat(p, a, b, c) / std::log(base);
}

// Pack two label columns into one (e.g. to condition on a pair of variables).
inline Labels combine_labels(const Labels& a, const Labels& b) {
    if (a.size() != b.size()) throw SpecError("combine_labels: length mismatch");
    std::map<std::array<int, 2>, int> ids;
    Labels out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        auto [it, inserted] = ids.try_emplace({a[i], b[i]}, static_cast<int>(ids.size()));
        out[i] = it->second;
    }
    return out;
}

}  // namespace strudel::info
