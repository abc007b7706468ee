// Hierarchy schema: attribute levels with separate factor/latent domains,
// explicit tuple index spaces for both sides, and projections (ordered
// subsets of levels) with their decomposition algebra.
#pragma once

#include <algorithm>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "strudel/error.hpp"

namespace strudel {

using Tuple = std::vector<std::string>;

struct Attribute {
    std::string name;
    std::vector<std::string> factor_domain;
    std::vector<std::string> latent_domain;
};

// Ordered subset of hierarchy levels (0-based, strictly increasing).
struct Projection {
    std::vector<int> levels;

    bool operator==(const Projection& other) const { return levels == other.levels; }
};

namespace detail {

inline void validate_domain(const std::string& attr, const char* side,
                            const std::vector<std::string>& dom) {
    if (dom.empty())
        throw SpecError("attribute '" + attr + "': empty " + side + " domain");
    std::set<std::string> seen;
    for (const auto& label : dom) {
        if (label.empty()) throw SpecError("attribute '" + attr + "': empty label");
        if (label.find_first_of(",|\"\n") != std::string::npos)
            throw SpecError("attribute '" + attr + "': label '" + label +
                            "' contains a reserved character (, | \" or newline)");
        if (!seen.insert(label).second)
            throw SpecError("attribute '" + attr + "': duplicate label '" + label + "' in " +
                            side + " domain");
    }
}

}  // namespace detail

class HierarchySchema {
public:
    HierarchySchema(std::vector<Attribute> attributes, std::vector<Tuple> factor_tuples,
                    std::vector<Tuple> latent_tuples)
        : attributes_(std::move(attributes)) {
        if (attributes_.empty()) throw SpecError("schema needs at least one attribute");
        for (const auto& a : attributes_) {
            detail::validate_domain(a.name, "factor", a.factor_domain);
            detail::validate_domain(a.name, "latent", a.latent_domain);
        }
        factor_tuples_ = canonicalize(std::move(factor_tuples), /*factors=*/true);
        latent_tuples_ = canonicalize(std::move(latent_tuples), /*factors=*/false);
    }

    // Full cartesian product of each side's domains.
    static HierarchySchema full_product(std::vector<Attribute> attributes) {
        std::vector<Tuple> f{{}}, l{{}};
        for (const auto& a : attributes) {
            f = extend(f, a.factor_domain);
            l = extend(l, a.latent_domain);
        }
        return HierarchySchema(std::move(attributes), std::move(f), std::move(l));
    }

    std::size_t arity() const { return attributes_.size(); }
    const std::vector<Attribute>& attributes() const { return attributes_; }
    const std::vector<Tuple>& factor_tuples() const { return factor_tuples_; }
    const std::vector<Tuple>& latent_tuples() const { return latent_tuples_; }
    std::size_t factor_count() const { return factor_tuples_.size(); }
    std::size_t latent_count() const { return latent_tuples_.size(); }

    int factor_index(const Tuple& t) const { return index_of(factor_tuples_, t); }
    int latent_index(const Tuple& t) const { return index_of(latent_tuples_, t); }

    Projection identity_projection() const {
        Projection p;
        for (int i = 0; i < static_cast<int>(arity()); ++i) p.levels.push_back(i);
        return p;
    }

    void validate_projection(const Projection& p) const {
        if (p.levels.empty()) throw SpecError("projection must keep at least one level");
        int prev = -1;
        for (int lv : p.levels) {
            if (lv <= prev) throw SpecError("projection levels must be strictly increasing");
            if (lv < 0 || lv >= static_cast<int>(arity()))
                throw SpecError("projection level " + std::to_string(lv) +
                                " out of range for schema of arity " + std::to_string(arity()));
            prev = lv;
        }
    }

private:
    static std::vector<Tuple> extend(const std::vector<Tuple>& base,
                                     const std::vector<std::string>& dom) {
        std::vector<Tuple> out;
        out.reserve(base.size() * dom.size());
        for (const auto& t : base)
            for (const auto& label : dom) {
                Tuple n = t;
                n.push_back(label);
                out.push_back(std::move(n));
            }
        return out;
    }

    static int index_of(const std::vector<Tuple>& tuples, const Tuple& t) {
        auto it = std::find(tuples.begin(), tuples.end(), t);
        if (it == tuples.end()) return -1;
        return static_cast<int>(it - tuples.begin());
    }

    // Validate and sort tuples lexicographically by per-level domain position.
    std::vector<Tuple> canonicalize(std::vector<Tuple> tuples, bool factors) const {
        const char* side = factors ? "factor" : "latent";
        if (tuples.empty()) throw SpecError(std::string(side) + " tuple set is empty");
        std::vector<std::map<std::string, int>> pos(arity());
        for (std::size_t lv = 0; lv < arity(); ++lv) {
            const auto& dom = factors ? attributes_[lv].factor_domain : attributes_[lv].latent_domain;
            for (std::size_t k = 0; k < dom.size(); ++k) pos[lv][dom[k]] = static_cast<int>(k);
        }
        std::vector<std::pair<std::vector<int>, std::size_t>> keys;
        keys.reserve(tuples.size());
        for (std::size_t i = 0; i < tuples.size(); ++i) {
            const Tuple& t = tuples[i];
            if (t.size() != arity())
                throw SpecError(std::string(side) + " tuple has arity " +
                                std::to_string(t.size()) + ", schema expects " +
                                std::to_string(arity()));
            std::vector<int> key(arity());
            for (std::size_t lv = 0; lv < arity(); ++lv) {
                auto it = pos[lv].find(t[lv]);
                if (it == pos[lv].end())
                    throw SpecError(std::string(side) + " tuple label '" + t[lv] +
                                    "' not in domain of attribute '" + attributes_[lv].name + "'");
                key[lv] = it->second;
            }
            keys.emplace_back(std::move(key), i);
        }
        std::sort(keys.begin(), keys.end());
        for (std::size_t i = 1; i < keys.size(); ++i)
            if (keys[i].first == keys[i - 1].first)
                throw SpecError(std::string(side) + " tuple set contains duplicates");
        std::vector<Tuple> sorted;
        sorted.reserve(tuples.size());
        for (const auto& [key, idx] : keys) sorted.push_back(std::move(tuples[idx]));
        return sorted;
    }

    std::vector<Attribute> attributes_;
    std::vector<Tuple> factor_tuples_;
    std::vector<Tuple> latent_tuples_;
};

using SchemaPtr = std::shared_ptr<const HierarchySchema>;

// Canonical orderings of the factor and latent tuple spaces.
inline std::pair<std::vector<Tuple>, std::vector<Tuple>> build_index_spaces(
    const HierarchySchema& schema) {
    return {schema.factor_tuples(), schema.latent_tuples()};
}

inline Tuple project_tuple(const Projection& p, const Tuple& t) {
    Tuple out;
    out.reserve(p.levels.size());
    for (int lv : p.levels) {
        if (lv < 0 || lv >= static_cast<int>(t.size()))
            throw SpecError("projection level " + std::to_string(lv) + " out of range for tuple");
        out.push_back(t[lv]);
    }
    return out;
}

struct TupleGroup {
    Tuple label;              // projected tuple shared by all members
    std::vector<int> members; // indices into the canonical tuple ordering
};

enum class Side { factors, latents };

// Partition of one side's tuple space by projected label, in canonical order.
inline std::vector<TupleGroup> projected_groups(const HierarchySchema& schema,
                                                const Projection& p, Side side) {
    schema.validate_projection(p);
    const auto& tuples = side == Side::factors ? schema.factor_tuples() : schema.latent_tuples();
    std::vector<TupleGroup> groups;
    std::map<Tuple, int> seen;  // label -> group index; insertion follows canonical tuple order
    for (std::size_t i = 0; i < tuples.size(); ++i) {
        Tuple label = project_tuple(p, tuples[i]);
        auto it = seen.find(label);
        if (it == seen.end()) {
            seen.emplace(label, static_cast<int>(groups.size()));
            groups.push_back({std::move(label), {static_cast<int>(i)}});
        } else {
            groups[it->second].members.push_back(static_cast<int>(i));
        }
    }
    return groups;
}

// group id per tuple index; cheaper form of projected_groups for hot paths.
inline std::vector<int> group_ids(const HierarchySchema& schema, const Projection& p, Side side,
                                  std::size_t* n_groups = nullptr) {
    const auto groups = projected_groups(schema, p, side);
    const std::size_t n =
        side == Side::factors ? schema.factor_count() : schema.latent_count();
    std::vector<int> ids(n, -1);
    for (std::size_t g = 0; g < groups.size(); ++g)
        for (int m : groups[g].members) ids[static_cast<std::size_t>(m)] = static_cast<int>(g);
    if (n_groups) *n_groups = groups.size();
    return ids;
}

// True iff `parts` are pairwise disjoint and their union is p's level set.
inline bool check_decomposition(const HierarchySchema& schema, const Projection& p,
                                const std::vector<Projection>& parts) {
    schema.validate_projection(p);
    std::set<int> whole(p.levels.begin(), p.levels.end());
    std::set<int> collected;
    for (const auto& part : parts) {
        schema.validate_projection(part);
        for (int lv : part.levels)
            if (!collected.insert(lv).second) return false;  // overlap
    }
    return collected == whole;
}

inline Projection union_projection(const std::vector<Projection>& parts) {
    std::set<int> levels;
    for (const auto& part : parts) levels.insert(part.levels.begin(), part.levels.end());
    Projection p;
    p.levels.assign(levels.begin(), levels.end());
    return p;
}

// ---- JSON serialization -------------------------------------------------

inline nlohmann::json schema_to_json(const HierarchySchema& schema) {
    nlohmann::json attrs = nlohmann::json::array();
    for (const auto& a : schema.attributes())
        attrs.push_back({{"name", a.name},
                         {"factor_domain", a.factor_domain},
                         {"latent_domain", a.latent_domain}});
    return {{"attributes", attrs},
            {"factor_tuples", schema.factor_tuples()},
            {"latent_tuples", schema.latent_tuples()}};
}

inline HierarchySchema schema_from_json(const nlohmann::json& j) {
    if (!j.is_object() || !j.contains("attributes") || !j.contains("factor_tuples") ||
        !j.contains("latent_tuples"))
        throw IoError("schema JSON must contain attributes, factor_tuples and latent_tuples");
    std::vector<Attribute> attrs;
    for (const auto& ja : j.at("attributes"))
        attrs.push_back({ja.at("name").get<std::string>(),
                         ja.at("factor_domain").get<std::vector<std::string>>(),
                         ja.at("latent_domain").get<std::vector<std::string>>()});
    return HierarchySchema(std::move(attrs), j.at("factor_tuples").get<std::vector<Tuple>>(),
                           j.at("latent_tuples").get<std::vector<Tuple>>());
}

// Serialized tuple form used in CSV headers and reports: labels joined by '|'.
inline std::string tuple_label(const Tuple& t) {
    std::string s;
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (i) s += '|';
        s += t[i];
    }
    return s;
}

inline Tuple tuple_from_label(const std::string& s) {
    Tuple t;
    std::string cur;
    for (char c : s) {
        if (c == '|') {
            t.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    t.push_back(cur);
    return t;
}

}  // namespace strudel
