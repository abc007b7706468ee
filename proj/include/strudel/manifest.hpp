// Run manifest written into every output directory: the command, its full
// config snapshot, seeds and paths. Reruns with an identical manifest must
// reproduce identical outputs; the wall-clock field is the one entry that
// varies between reruns, so byte-level comparisons skip manifest.json.
#pragma once

#include <chrono>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "strudel/dataset_io.hpp"
#include "strudel/version.hpp"

namespace strudel {

class RunManifest {
public:
    explicit RunManifest(std::string command) : command_(std::move(command)) {
        start_ = std::chrono::steady_clock::now();
    }

    nlohmann::json& config() { return config_; }

    void add_input(const std::filesystem::path& p) { inputs_.push_back(p.string()); }
    void add_output(const std::filesystem::path& p) { outputs_.push_back(p.string()); }
    void set_seed(std::uint64_t seed) { seeds_.assign(1, seed); }
    void set_seeds(std::vector<std::uint64_t> seeds) { seeds_ = std::move(seeds); }

    void write(const std::filesystem::path& out_dir) const {
        const double elapsed =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
        nlohmann::json j{{"command", command_},
                         {"version", kVersion},
                         {"config", config_},
                         {"seeds", seeds_},
                         {"inputs", inputs_},
                         {"outputs", outputs_},
                         {"wall_clock_seconds", elapsed}};
        write_json_file(out_dir / "manifest.json", j);
    }

private:
    std::string command_;
    nlohmann::json config_ = nlohmann::json::object();
    std::vector<std::uint64_t> seeds_;
    std::vector<std::string> inputs_;
    std::vector<std::string> outputs_;
    std::chrono::steady_clock::time_point start_;
};

}  // namespace strudel
