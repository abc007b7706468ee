// The affinity matrix viewed as a joint law over latent x factor tuples,
// plus coupled marginalization under projections.
#pragma once

#include <cmath>
#include <random>
#include <utility>
#include <vector>

#include "strudel/error.hpp"
#include "strudel/info.hpp"
#include "strudel/linalg.hpp"
#include "strudel/rng.hpp"
#include "strudel/schema.hpp"

namespace strudel {

// Normalized L x F matrix P with P[x = latent tuple, y = factor tuple],
// bound to the schema that fixes both tuple orderings.
class JointDistribution {
public:
    JointDistribution(SchemaPtr schema, Matrix p) : schema_(std::move(schema)), p_(std::move(p)) {
        if (!schema_) throw SpecError("joint distribution needs a schema");
        if (p_.rows() != schema_->latent_count() || p_.cols() != schema_->factor_count())
            throw SpecError("joint matrix shape does not match schema tuple spaces");
        double sum = 0.0;
        for (double v : p_.data()) {
            if (v < 0.0) throw NumericError("joint distribution has negative entries");
            if (!std::isfinite(v)) throw NumericError("joint distribution has non-finite entries");
            sum += v;
        }
        if (std::abs(sum - 1.0) > 1e-12)
            throw NumericError("joint distribution must sum to 1 within 1e-12");
    }

    const SchemaPtr& schema() const { return schema_; }
    const Matrix& matrix() const { return p_; }
    std::size_t latent_count() const { return p_.rows(); }
    std::size_t factor_count() const { return p_.cols(); }

    std::vector<double> factor_marginal() const {
        std::vector<double> m(p_.cols(), 0.0);
        for (std::size_t i = 0; i < p_.rows(); ++i)
            for (std::size_t j = 0; j < p_.cols(); ++j) m[j] += p_(i, j);
        return m;
    }

    std::vector<double> latent_marginal() const {
        std::vector<double> m(p_.rows(), 0.0);
        for (std::size_t i = 0; i < p_.rows(); ++i)
            for (std::size_t j = 0; j < p_.cols(); ++j) m[i] += p_(i, j);
        return m;
    }

    // Flattened cell view (row-major) for the info primitives.
    std::vector<double> cells() const { return p_.data(); }
    info::Labels row_labels() const {
        info::Labels l(p_.rows() * p_.cols());
        for (std::size_t i = 0; i < p_.rows(); ++i)
            for (std::size_t j = 0; j < p_.cols(); ++j) l[i * p_.cols() + j] = static_cast<int>(i);
        return l;
    }
    info::Labels col_labels() const {
        info::Labels l(p_.rows() * p_.cols());
        for (std::size_t i = 0; i < p_.rows(); ++i)
            for (std::size_t j = 0; j < p_.cols(); ++j) l[i * p_.cols() + j] = static_cast<int>(j);
        return l;
    }
    // Cell labels under a projection of one side.
    info::Labels projected_labels(const Projection& p, Side side) const {
        const auto ids = group_ids(*schema_, p, side);
        info::Labels l(p_.rows() * p_.cols());
        for (std::size_t i = 0; i < p_.rows(); ++i)
            for (std::size_t j = 0; j < p_.cols(); ++j)
                l[i * p_.cols() + j] =
                    side == Side::latents ? ids[i] : ids[j];
        return l;
    }

private:
    SchemaPtr schema_;
    Matrix p_;
};

// Normalize a non-negative affinity matrix into a joint distribution.
inline JointDistribution normalize_joint(const Matrix& r, SchemaPtr schema) {
    double sum = 0.0;
    for (double v : r.data()) {
        if (v < 0.0) throw NumericError("affinity matrix has negative entries");
        sum += v;
    }
    if (!(sum > 0.0)) throw NumericError("degenerate affinity matrix: total mass is zero");
    Matrix p = r;
    for (double& v : p.data()) v /= sum;
    // compensate accumulated rounding so the class invariant holds exactly
    double total = 0.0;
    for (double v : p.data()) total += v;
    if (total != 1.0 && total > 0.0)
        for (double& v : p.data()) v /= total;
    return JointDistribution(std::move(schema), std::move(p));
}

// Coupled marginalization of a joint under a projection: rows/columns whose
// tuples share a projected label are summed. Group order is canonical.
struct ProjectedJoint {
    std::vector<Tuple> row_labels;  // projected latent labels, |rows| = U
    std::vector<Tuple> col_labels;  // projected factor labels, |cols| = V
    Matrix p;
};

inline ProjectedJoint marginalize(const JointDistribution& joint, const Projection& proj) {
    const auto& schema = *joint.schema();
    const auto lat_groups = projected_groups(schema, proj, Side::latents);
    const auto fac_groups = projected_groups(schema, proj, Side::factors);
    ProjectedJoint out;
    out.p = Matrix(lat_groups.size(), fac_groups.size());
    std::vector<int> lat_of(schema.latent_count()), fac_of(schema.factor_count());
    for (std::size_t g = 0; g < lat_groups.size(); ++g) {
        out.row_labels.push_back(lat_groups[g].label);
        for (int m : lat_groups[g].members) lat_of[static_cast<std::size_t>(m)] = static_cast<int>(g);
    }
    for (std::size_t g = 0; g < fac_groups.size(); ++g) {
        out.col_labels.push_back(fac_groups[g].label);
        for (int m : fac_groups[g].members) fac_of[static_cast<std::size_t>(m)] = static_cast<int>(g);
    }
    const Matrix& p = joint.matrix();
    for (std::size_t i = 0; i < p.rows(); ++i)
        for (std::size_t j = 0; j < p.cols(); ++j)
            out.p(lat_of[i], fac_of[j]) += p(i, j);
    return out;
}

// Dirichlet-distributed random joint over the schema's L x F cells.
// The single source of random test joints; reproducible from (seed, schema,
// concentration).
inline JointDistribution random_joint(SchemaPtr schema, double concentration,
                                      std::uint64_t seed) {
    if (!(concentration > 0.0)) throw SpecError("Dirichlet concentration must be > 0");
    std::mt19937_64 rng = make_rng(seed, 0x6a6f696eULL);
    std::gamma_distribution<double> gamma(concentration, 1.0);
    Matrix r(schema->latent_count(), schema->factor_count());
    for (double& v : r.data()) v = gamma(rng);
    return normalize_joint(r, std::move(schema));
}

// ---- JSON ----------------------------------------------------------------

inline nlohmann::json joint_to_json(const JointDistribution& joint) {
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t i = 0; i < joint.matrix().rows(); ++i)
        rows.push_back(joint.matrix().row_copy(i));
    return {{"schema", schema_to_json(*joint.schema())}, {"matrix", rows}};
}

inline JointDistribution joint_from_json(const nlohmann::json& j) {
    if (!j.contains("schema") || !j.contains("matrix"))
        throw IoError("joint JSON must contain schema and matrix");
    auto schema = std::make_shared<const HierarchySchema>(schema_from_json(j.at("schema")));
    const auto& rows = j.at("matrix");
    Matrix m(rows.size(), rows.empty() ? 0 : rows.front().size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto row = rows[i].get<std::vector<double>>();
        if (row.size() != m.cols()) throw IoError("joint matrix rows have inconsistent lengths");
        for (std::size_t jx = 0; jx < row.size(); ++jx) m(i, jx) = row[jx];
    }
    return normalize_joint(m, std::move(schema));
}

}  // namespace strudel
