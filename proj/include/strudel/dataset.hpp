// Grouped evaluation datasets: local-group factor sampling, slot layouts,
// and the synthetic encoder oracle that stands in for trained models.
//
// Each group draws an anchor value per (object, factor) and then samples
// every image's factor values inside the anchor's locality neighborhood.
// Groups own independent RNG streams keyed by (seed, group id), so
// generation is reproducible and parallelism-invariant.
#pragma once

#include <cmath>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "strudel/error.hpp"
#include "strudel/linalg.hpp"
#include "strudel/parallel.hpp"
#include "strudel/rng.hpp"
#include "strudel/schema.hpp"

namespace strudel {

enum class FactorKind { continuous, ordinal, categorical };

struct FactorSpec {
    std::string name;
    FactorKind kind = FactorKind::ordinal;
    std::vector<double> values;           // ordinal levels, ascending
    std::vector<std::string> classes;     // categorical labels
    double lo = 0.0, hi = 0.0;            // continuous range
    int window = -1;                      // ordinal: +-window indices; -1 = full range
    double delta = -1.0;                  // continuous: +-delta; < 0 = full range
    std::vector<std::string> local_classes;  // categorical neighborhood; empty = full set
    std::string tag;                      // informational: "intrinsic" / "extrinsic"

    void validate() const {
        if (name.empty()) throw SpecError("factor spec needs a name");
        switch (kind) {
            case FactorKind::ordinal: {
                if (values.empty()) throw SpecError("ordinal factor '" + name + "' has no values");
                for (std::size_t i = 1; i < values.size(); ++i)
                    if (!(values[i] > values[i - 1]))
                        throw SpecError("ordinal factor '" + name + "' values must be ascending");
                if (window == 0 && values.size() > 1) break;  // degenerate but non-empty
                break;
            }
            case FactorKind::continuous: {
                if (!(hi >= lo)) throw SpecError("continuous factor '" + name + "' has empty range");
                if (delta == 0.0 && hi > lo) break;  // point neighborhood, still non-empty
                break;
            }
            case FactorKind::categorical: {
                if (classes.empty())
                    throw SpecError("categorical factor '" + name + "' has no classes");
                for (const auto& c : local_classes) {
                    bool found = false;
                    for (const auto& cls : classes) found = found || cls == c;
                    if (!found)
                        throw SpecError("categorical factor '" + name + "': local class '" + c +
                                        "' not among classes");
                }
                break;
            }
        }
        if (kind == FactorKind::ordinal && window < -1)
            throw SpecError("ordinal factor '" + name + "' has invalid window");
    }

    // Stored scalars: ordinal -> the value itself, continuous -> the value,
    // categorical -> the class index.
    double sample_initial(std::mt19937_64& rng) const {
        switch (kind) {
            case FactorKind::ordinal: {
                std::uniform_int_distribution<int> pick(0, static_cast<int>(values.size()) - 1);
                return values[static_cast<std::size_t>(pick(rng))];
            }
            case FactorKind::continuous: {
                if (hi == lo) return lo;
                return std::uniform_real_distribution<double>(lo, hi)(rng);
            }
            case FactorKind::categorical: {
                std::uniform_int_distribution<int> pick(0, static_cast<int>(classes.size()) - 1);
                return static_cast<double>(pick(rng));
            }
        }
        throw SpecError("unreachable factor kind");
    }

    double sample_local(double initial, std::mt19937_64& rng) const {
        switch (kind) {
            case FactorKind::ordinal: {
                int idx = index_of_value(initial);
                int lo_i = 0, hi_i = static_cast<int>(values.size()) - 1;
                if (window >= 0) {
                    lo_i = std::max(0, idx - window);
                    hi_i = std::min(hi_i, idx + window);
                }
                std::uniform_int_distribution<int> pick(lo_i, hi_i);
                return values[static_cast<std::size_t>(pick(rng))];
            }
            case FactorKind::continuous: {
                double a = lo, b = hi;
                if (delta >= 0.0) {
                    a = std::max(lo, initial - delta);
                    b = std::min(hi, initial + delta);
                }
                if (!(b > a)) return a;
                return std::uniform_real_distribution<double>(a, b)(rng);
            }
            case FactorKind::categorical: {
                const std::size_t n = local_classes.empty() ? classes.size() : local_classes.size();
                std::uniform_int_distribution<int> pick(0, static_cast<int>(n) - 1);
                const int k = pick(rng);
                if (local_classes.empty()) return static_cast<double>(k);
                return static_cast<double>(class_index(local_classes[static_cast<std::size_t>(k)]));
            }
        }
        throw SpecError("unreachable factor kind");
    }

    int index_of_value(double v) const {
        for (std::size_t i = 0; i < values.size(); ++i)
            if (values[i] == v) return static_cast<int>(i);
        throw SpecError("value not in ordinal domain of factor '" + name + "'");
    }

    int class_index(const std::string& cls) const {
        for (std::size_t i = 0; i < classes.size(); ++i)
            if (classes[i] == cls) return static_cast<int>(i);
        throw SpecError("class '" + cls + "' not in factor '" + name + "'");
    }
};

struct SlotLayout {
    int n_slots = 1;
    int dims_per_slot = 1;
    std::set<int> pinned_slots;  // excluded from permutation

    int latent_dim() const { return n_slots * dims_per_slot; }

    void validate() const {
        if (n_slots < 1 || dims_per_slot < 1)
            throw SpecError("slot layout needs positive slot count and dims per slot");
        for (int s : pinned_slots)
            if (s < 0 || s >= n_slots)
                throw SpecError("pinned slot " + std::to_string(s) + " out of range");
    }
};

struct SplitSizes {
    int fit = 0;
    int validation = 0;
    int evaluation = 0;
    int total() const { return fit + validation + evaluation; }
};

struct SplitSets {
    std::vector<int> fit, validation, evaluation;
};

struct Group {
    int id = 0;
    Matrix factors;  // n_samples x F, canonical factor-tuple column order
    Matrix latents;  // n_samples x latent_dim; zero cols until encoded
};

struct GroupedDataset {
    SchemaPtr schema;
    SlotLayout layout;
    std::vector<Group> groups;
    std::vector<SplitSets> splits;
};

// Two-level generation spec: objects x factors on the factor side,
// slots x dims on the latent side.
struct GenerationSpec {
    std::vector<std::string> objects;
    std::vector<FactorSpec> factors;
    SlotLayout layout;

    void validate() const {
        if (objects.empty()) throw SpecError("generation spec needs at least one object");
        if (factors.empty()) throw SpecError("generation spec needs at least one factor");
        for (const auto& f : factors) f.validate();
        layout.validate();
    }

    HierarchySchema make_schema() const {
        std::vector<std::string> factor_names, slots, dims;
        for (const auto& f : factors) factor_names.push_back(f.name);
        for (int s = 0; s < layout.n_slots; ++s) slots.push_back("slot_" + std::to_string(s + 1));
        for (int d = 0; d < layout.dims_per_slot; ++d) dims.push_back("dim_" + std::to_string(d + 1));
        return HierarchySchema::full_product(
            {{"object", objects, slots}, {"property", factor_names, dims}});
    }
};

// Algorithm: per group, draw an anchor per (object, factor) uniformly over
// the factor domain, then draw every sample's value inside the anchor's
// locality neighborhood. Latents are left empty.
inline GroupedDataset generate_eval_dataset(const GenerationSpec& spec, int n_groups,
                                            int n_samples, SplitSizes split,
                                            std::uint64_t seed) {
    spec.validate();
    if (n_groups < 1) throw SpecError("need at least one group");
    if (n_samples < 1) throw SpecError("need at least one sample per group");
    if (split.total() != n_samples)
        throw SpecError("split sizes must sum to the sample count (" +
                        std::to_string(split.total()) + " vs " + std::to_string(n_samples) + ")");

    GroupedDataset ds;
    ds.schema = std::make_shared<const HierarchySchema>(spec.make_schema());
    ds.layout = spec.layout;
    ds.groups.resize(static_cast<std::size_t>(n_groups));
    ds.splits.resize(static_cast<std::size_t>(n_groups));

    const std::size_t n_obj = spec.objects.size();
    const std::size_t n_fac = spec.factors.size();
    parallel_for(static_cast<std::size_t>(n_groups), [&](std::size_t g) {
        std::mt19937_64 rng = make_rng(seed, 0x67656e32ULL, g);
        Group& group = ds.groups[g];
        group.id = static_cast<int>(g);
        group.factors = Matrix(static_cast<std::size_t>(n_samples), n_obj * n_fac);
        std::vector<double> anchors(n_obj * n_fac);
        for (std::size_t o = 0; o < n_obj; ++o)
            for (std::size_t f = 0; f < n_fac; ++f)
                anchors[o * n_fac + f] = spec.factors[f].sample_initial(rng);
        for (int i = 0; i < n_samples; ++i)
            for (std::size_t o = 0; o < n_obj; ++o)
                for (std::size_t f = 0; f < n_fac; ++f) {
                    const std::size_t col = o * n_fac + f;
                    group.factors(static_cast<std::size_t>(i), col) =
                        spec.factors[f].sample_local(anchors[col], rng);
                }
        SplitSets& sp = ds.splits[g];
        for (int i = 0; i < split.fit; ++i) sp.fit.push_back(i);
        for (int i = 0; i < split.validation; ++i) sp.validation.push_back(split.fit + i);
        for (int i = 0; i < split.evaluation; ++i)
            sp.evaluation.push_back(split.fit + split.validation + i);
    });
    return ds;
}

// Synthetic encoder oracle. Per slot s the latent block is
//   z_s = A_s * ((1 - leak) v_s + leak * mean_o(v_o)) + offset_s + noise,
// followed by an optional per-sample random permutation of the non-pinned
// slot blocks. leak = 0 with rotate = false yields a block-diagonal,
// axis-aligned generator.
struct MixingSpec {
    double leak = 0.0;
    bool rotate = false;
    double noise_std = 0.0;
    bool shuffle_slots = false;
    bool shared_map = true;  // same (A, offset) for every slot

    void validate() const {
        if (leak < 0.0 || leak > 1.0) throw SpecError("leak coefficient must be in [0, 1]");
        if (noise_std < 0.0) throw SpecError("noise_std must be >= 0");
    }
};

namespace detail {

struct SlotMap {
    Matrix a;  // dims_per_slot x n_factors
    std::vector<double> offset;
};

inline SlotMap make_slot_map(int dims, int n_factors, bool rotate, std::mt19937_64& rng) {
    SlotMap m;
    m.a = Matrix(static_cast<std::size_t>(dims), static_cast<std::size_t>(n_factors));
    m.offset.resize(static_cast<std::size_t>(dims));
    std::uniform_real_distribution<double> scale(0.8, 1.6);
    std::uniform_real_distribution<double> shift(-1.0, 1.0);
    // axis-aligned core: dim d carries factor d (extra dims stay constant)
    for (int d = 0; d < std::min(dims, n_factors); ++d)
        m.a(static_cast<std::size_t>(d), static_cast<std::size_t>(d)) = scale(rng);
    for (auto& v : m.offset) v = shift(rng);
    if (rotate) {
        const Matrix q = random_orthogonal(static_cast<std::size_t>(dims), rng);
        Matrix rotated(m.a.rows(), m.a.cols());
        for (std::size_t i = 0; i < m.a.rows(); ++i)
            for (std::size_t j = 0; j < m.a.cols(); ++j) {
                double s = 0.0;
                for (std::size_t k = 0; k < m.a.rows(); ++k) s += q(i, k) * m.a(k, j);
                rotated(i, j) = s;
            }
        m.a = std::move(rotated);
    }
    return m;
}

}  // namespace detail

// Fills the dataset's latents. When `recorded_permutations` is given it
// receives, per group, the permutation applied to each sample
// (perm[p] = source slot placed at position p); the dataset itself records
// nothing, recovering the alignment is the probe's job.
inline GroupedDataset synth_encode(
    const GroupedDataset& input, const MixingSpec& mix, std::uint64_t seed,
    std::vector<std::vector<std::vector<int>>>* recorded_permutations = nullptr) {
    mix.validate();
    const auto& schema = *input.schema;
    if (schema.arity() != 2)
        throw SpecError("synth_encode expects the two-level object x property schema");
    const std::size_t n_obj = schema.attributes()[0].factor_domain.size();
    const std::size_t n_fac = schema.attributes()[1].factor_domain.size();
    const SlotLayout& layout = input.layout;
    if (static_cast<std::size_t>(layout.n_slots) != n_obj)
        throw SpecError("synth_encode needs one slot per object (" + std::to_string(n_obj) +
                        " objects, " + std::to_string(layout.n_slots) + " slots)");
    if (schema.factor_count() != n_obj * n_fac)
        throw SpecError("synth_encode needs the full object x factor tuple space");

    std::mt19937_64 map_rng = make_rng(seed, 0x6d6170ULL);
    std::vector<detail::SlotMap> maps;
    for (int s = 0; s < layout.n_slots; ++s) {
        if (mix.shared_map && s > 0)
            maps.push_back(maps.front());
        else
            maps.push_back(detail::make_slot_map(layout.dims_per_slot, static_cast<int>(n_fac),
                                                 mix.rotate, map_rng));
    }

    std::vector<int> free_slots;
    for (int s = 0; s < layout.n_slots; ++s)
        if (!layout.pinned_slots.count(s)) free_slots.push_back(s);

    GroupedDataset out = input;
    if (recorded_permutations) recorded_permutations->assign(out.groups.size(), {});
    const std::size_t dims = static_cast<std::size_t>(layout.dims_per_slot);
    for (std::size_t g = 0; g < out.groups.size(); ++g) {
        Group& group = out.groups[g];
        const std::size_t n = group.factors.rows();
        group.latents = Matrix(n, static_cast<std::size_t>(layout.latent_dim()));
        if (recorded_permutations) (*recorded_permutations)[g].resize(n);
        parallel_for(n, [&](std::size_t i) {
            std::mt19937_64 rng = make_rng(seed, 0x656e63ULL, g, i);
            // leak-mixed factor inputs per object
            std::vector<double> mean_fac(n_fac, 0.0);
            if (mix.leak > 0.0)
                for (std::size_t o = 0; o < n_obj; ++o)
                    for (std::size_t f = 0; f < n_fac; ++f)
                        mean_fac[f] += group.factors(i, o * n_fac + f) / static_cast<double>(n_obj);
            Matrix blocks(n_obj, dims);
            for (std::size_t s = 0; s < n_obj; ++s) {
                const detail::SlotMap& m = maps[s];
                for (std::size_t d = 0; d < dims; ++d) {
                    double v = m.offset[d];
                    for (std::size_t f = 0; f < n_fac; ++f) {
                        const double in = (1.0 - mix.leak) * group.factors(i, s * n_fac + f) +
                                          mix.leak * mean_fac[f];
                        v += m.a(d, f) * in;
                    }
                    blocks(s, d) = v;
                }
            }
            if (mix.noise_std > 0.0) {
                std::normal_distribution<double> gauss(0.0, mix.noise_std);
                for (double& v : blocks.data()) v += gauss(rng);
            }
            std::vector<int> perm(static_cast<std::size_t>(layout.n_slots));
            for (int s = 0; s < layout.n_slots; ++s) perm[static_cast<std::size_t>(s)] = s;
            if (mix.shuffle_slots && free_slots.size() > 1) {
                std::vector<int> shuffled = free_slots;
                std::shuffle(shuffled.begin(), shuffled.end(), rng);
                for (std::size_t k = 0; k < free_slots.size(); ++k)
                    perm[static_cast<std::size_t>(free_slots[k])] = shuffled[k];
            }
            for (std::size_t p = 0; p < n_obj; ++p)
                for (std::size_t d = 0; d < dims; ++d)
                    group.latents(i, p * dims + d) = blocks(static_cast<std::size_t>(perm[p]), d);
            if (recorded_permutations) (*recorded_permutations)[g][i] = perm;
        });
    }
    return out;
}

// ---- JSON specs ------------------------------------------------------------

inline nlohmann::json factor_spec_to_json(const FactorSpec& f) {
    nlohmann::json j{{"name", f.name}};
    switch (f.kind) {
        case FactorKind::ordinal:
            j["kind"] = "ordinal";
            j["values"] = f.values;
            if (f.window >= 0) j["window"] = f.window;
            break;
        case FactorKind::continuous:
            j["kind"] = "continuous";
            j["range"] = {f.lo, f.hi};
            if (f.delta >= 0.0) j["delta"] = f.delta;
            break;
        case FactorKind::categorical:
            j["kind"] = "categorical";
            j["classes"] = f.classes;
            if (!f.local_classes.empty()) j["local_classes"] = f.local_classes;
            break;
    }
    if (!f.tag.empty()) j["tag"] = f.tag;
    return j;
}

inline FactorSpec factor_spec_from_json(const nlohmann::json& j) {
    FactorSpec f;
    f.name = j.at("name").get<std::string>();
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "ordinal") {
        f.kind = FactorKind::ordinal;
        f.values = j.at("values").get<std::vector<double>>();
        f.window = j.value("window", -1);
    } else if (kind == "continuous") {
        f.kind = FactorKind::continuous;
        const auto range = j.at("range").get<std::vector<double>>();
        if (range.size() != 2) throw IoError("continuous factor range must be [lo, hi]");
        f.lo = range[0];
        f.hi = range[1];
        f.delta = j.value("delta", -1.0);
    } else if (kind == "categorical") {
        f.kind = FactorKind::categorical;
        f.classes = j.at("classes").get<std::vector<std::string>>();
        if (j.contains("local_classes"))
            f.local_classes = j.at("local_classes").get<std::vector<std::string>>();
    } else {
        throw IoError("unknown factor kind '" + kind + "'");
    }
    f.tag = j.value("tag", std::string());
    f.validate();
    return f;
}

inline nlohmann::json layout_to_json(const SlotLayout& l) {
    return {{"n_slots", l.n_slots},
            {"dims_per_slot", l.dims_per_slot},
            {"pinned_slots", std::vector<int>(l.pinned_slots.begin(), l.pinned_slots.end())}};
}

inline SlotLayout layout_from_json(const nlohmann::json& j) {
    SlotLayout l;
    l.n_slots = j.at("n_slots").get<int>();
    l.dims_per_slot = j.at("dims_per_slot").get<int>();
    if (j.contains("pinned_slots"))
        for (int s : j.at("pinned_slots").get<std::vector<int>>()) l.pinned_slots.insert(s);
    l.validate();
    return l;
}

inline nlohmann::json generation_spec_to_json(const GenerationSpec& s) {
    nlohmann::json factors = nlohmann::json::array();
    for (const auto& f : s.factors) factors.push_back(factor_spec_to_json(f));
    return {{"objects", s.objects}, {"factors", factors}, {"layout", layout_to_json(s.layout)}};
}

inline GenerationSpec generation_spec_from_json(const nlohmann::json& j) {
    GenerationSpec s;
    if (j.contains("objects")) {
        s.objects = j.at("objects").get<std::vector<std::string>>();
    } else if (j.contains("n_objects")) {
        const int n = j.at("n_objects").get<int>();
        for (int o = 0; o < n; ++o) s.objects.push_back("object_" + std::to_string(o + 1));
    } else {
        throw IoError("generation spec needs 'objects' or 'n_objects'");
    }
    for (const auto& jf : j.at("factors")) s.factors.push_back(factor_spec_from_json(jf));
    s.layout = layout_from_json(j.at("layout"));
    s.validate();
    return s;
}

inline nlohmann::json mixing_spec_to_json(const MixingSpec& m) {
    return {{"leak", m.leak},
            {"rotate", m.rotate},
            {"noise_std", m.noise_std},
            {"shuffle_slots", m.shuffle_slots},
            {"shared_map", m.shared_map}};
}

inline MixingSpec mixing_spec_from_json(const nlohmann::json& j) {
    MixingSpec m;
    m.leak = j.value("leak", 0.0);
    m.rotate = j.value("rotate", false);
    m.noise_std = j.value("noise_std", 0.0);
    m.shuffle_slots = j.value("shuffle_slots", false);
    m.shared_map = j.value("shared_map", true);
    m.validate();
    return m;
}

}  // namespace strudel
