// Dataset directory format:
//   schema.json   attribute levels and both tuple spaces
//   layout.json   slot layout
//   splits.json   per-group fit/validation/evaluation sample ids
//   factors_{g}.csv / latents_{g}.csv   one row per sample, header =
//                 sample_id plus the serialized tuple labels
//   factors.json  (optional) factor specs, lets the probe auto-detect
//                 categorical targets
//
// CSV is UTF-8, comma-separated, '.' decimal point; doubles are written
// with 17 significant digits so save -> load -> save is byte-identical.
#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "strudel/dataset.hpp"
#include "strudel/error.hpp"
#include "strudel/schema.hpp"

namespace strudel {

inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline double parse_double(const std::string& s, const std::string& context) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw IoError("malformed number '" + s + "' in " + context);
    }
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    fields.push_back(cur);
    return fields;
}

inline void write_matrix_csv(const std::filesystem::path& path, const Matrix& m,
                             const std::vector<Tuple>& header) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << "sample_id";
    for (const auto& t : header) out << ',' << tuple_label(t);
    out << '\n';
    for (std::size_t i = 0; i < m.rows(); ++i) {
        out << i;
        for (std::size_t j = 0; j < m.cols(); ++j) out << ',' << format_double(m(i, j));
        out << '\n';
    }
}

inline Matrix read_matrix_csv(const std::filesystem::path& path,
                              const std::vector<Tuple>& expected_header) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw IoError(path.string() + ": empty file");
    const auto fields = split_csv_line(line);
    if (fields.empty() || fields[0] != "sample_id")
        throw IoError(path.string() + ": header must start with sample_id");
    if (fields.size() != expected_header.size() + 1) {
        // name the first discrepancy for the error message
        for (std::size_t j = 0; j < expected_header.size(); ++j) {
            const std::string want = tuple_label(expected_header[j]);
            if (j + 1 >= fields.size() || fields[j + 1] != want)
                throw IoError(path.string() + ": missing column '" + want + "'");
        }
        throw IoError(path.string() + ": unexpected extra columns");
    }
    for (std::size_t j = 0; j < expected_header.size(); ++j) {
        const std::string want = tuple_label(expected_header[j]);
        if (fields[j + 1] != want)
            throw IoError(path.string() + ": missing column '" + want + "' (found '" +
                          fields[j + 1] + "')");
    }
    std::vector<std::vector<double>> rows;
    std::set<long> seen_ids;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto cells = split_csv_line(line);
        if (cells.size() != expected_header.size() + 1)
            throw IoError(path.string() + ": row " + std::to_string(rows.size()) +
                          " has wrong field count");
        const long id = static_cast<long>(parse_double(cells[0], path.string()));
        if (!seen_ids.insert(id).second)
            throw IoError(path.string() + ": duplicate sample id " + std::to_string(id));
        std::vector<double> row(expected_header.size());
        for (std::size_t j = 0; j < row.size(); ++j)
            row[j] = parse_double(cells[j + 1], path.string());
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw IoError(path.string() + ": no data rows");
    Matrix m(rows.size(), expected_header.size());
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j) m(i, j) = rows[i][j];
    return m;
}

}  // namespace detail

inline void write_json_file(const std::filesystem::path& path, const nlohmann::json& j) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << j.dump(2) << '\n';
}

inline nlohmann::json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw IoError(path.string() + ": " + e.what());
    }
}

inline void save_dataset(const GroupedDataset& ds, const std::filesystem::path& dir,
                         const std::vector<FactorSpec>* factor_specs = nullptr) {
    std::filesystem::create_directories(dir);
    write_json_file(dir / "schema.json", schema_to_json(*ds.schema));
    write_json_file(dir / "layout.json", layout_to_json(ds.layout));
    nlohmann::json jsplits = nlohmann::json::array();
    for (std::size_t g = 0; g < ds.groups.size(); ++g)
        jsplits.push_back({{"group_id", ds.groups[g].id},
                           {"fit", ds.splits[g].fit},
                           {"validation", ds.splits[g].validation},
                           {"evaluation", ds.splits[g].evaluation}});
    write_json_file(dir / "splits.json", {{"groups", jsplits}});
    for (std::size_t g = 0; g < ds.groups.size(); ++g) {
        const std::string suffix = std::to_string(ds.groups[g].id) + ".csv";
        detail::write_matrix_csv(dir / ("factors_" + suffix), ds.groups[g].factors,
                                 ds.schema->factor_tuples());
        if (ds.groups[g].latents.cols() > 0) {
            if (ds.groups[g].latents.cols() != static_cast<std::size_t>(ds.layout.latent_dim()))
                throw SpecError("latent width does not match layout");
            detail::write_matrix_csv(dir / ("latents_" + suffix), ds.groups[g].latents,
                                     ds.schema->latent_tuples());
        }
    }
    if (factor_specs) {
        nlohmann::json jf = nlohmann::json::array();
        for (const auto& f : *factor_specs) jf.push_back(factor_spec_to_json(f));
        write_json_file(dir / "factors.json", {{"factors", jf}});
    }
}

struct LoadedDataset {
    GroupedDataset dataset;
    std::optional<std::vector<FactorSpec>> factor_specs;
};

inline LoadedDataset load_dataset(const std::filesystem::path& dir) {
    LoadedDataset out;
    GroupedDataset& ds = out.dataset;
    ds.schema =
        std::make_shared<const HierarchySchema>(schema_from_json(read_json_file(dir / "schema.json")));
    ds.layout = layout_from_json(read_json_file(dir / "layout.json"));
    if (ds.schema->latent_count() != static_cast<std::size_t>(ds.layout.latent_dim()))
        throw IoError("layout.json latent dimension disagrees with schema latent tuples");

    const nlohmann::json jsplits = read_json_file(dir / "splits.json");
    for (const auto& jg : jsplits.at("groups")) {
        Group group;
        group.id = jg.at("group_id").get<int>();
        SplitSets sp;
        sp.fit = jg.at("fit").get<std::vector<int>>();
        sp.validation = jg.at("validation").get<std::vector<int>>();
        sp.evaluation = jg.at("evaluation").get<std::vector<int>>();
        const std::string suffix = std::to_string(group.id) + ".csv";
        group.factors = detail::read_matrix_csv(dir / ("factors_" + suffix),
                                                ds.schema->factor_tuples());
        const auto latents_path = dir / ("latents_" + suffix);
        if (std::filesystem::exists(latents_path))
            group.latents = detail::read_matrix_csv(latents_path, ds.schema->latent_tuples());
        if (group.latents.rows() > 0 && group.latents.rows() != group.factors.rows())
            throw IoError("group " + std::to_string(group.id) +
                          ": factor and latent files disagree on sample count");

        // splits must be disjoint and cover the group
        std::set<int> seen;
        const std::size_t n = group.factors.rows();
        auto add_all = [&](const std::vector<int>& ids, const char* name) {
            for (int id : ids) {
                if (id < 0 || static_cast<std::size_t>(id) >= n)
                    throw IoError("group " + std::to_string(group.id) + ": " + name +
                                  " split references sample " + std::to_string(id) +
                                  " outside the group");
                if (!seen.insert(id).second)
                    throw IoError("group " + std::to_string(group.id) +
                                  ": splits overlap on sample " + std::to_string(id));
            }
        };
        add_all(sp.fit, "fit");
        add_all(sp.validation, "validation");
        add_all(sp.evaluation, "evaluation");
        if (seen.size() != n)
            throw IoError("group " + std::to_string(group.id) + ": splits do not cover all " +
                          std::to_string(n) + " samples");
        ds.groups.push_back(std::move(group));
        ds.splits.push_back(std::move(sp));
    }
    if (ds.groups.empty()) throw IoError("dataset has no groups");

    const auto specs_path = dir / "factors.json";
    if (std::filesystem::exists(specs_path)) {
        const nlohmann::json jspecs = read_json_file(specs_path);
        std::vector<FactorSpec> specs;
        for (const auto& jf : jspecs.at("factors")) specs.push_back(factor_spec_from_json(jf));
        out.factor_specs = std::move(specs);
    }
    return out;
}

}  // namespace strudel
