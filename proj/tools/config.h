#pragma once

/**
 * @file config.h
 * @brief Experiment configuration: sectioned key = value text with JSON values, and JSON seed specs.
 */

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "renorm/henon.h"
#include "renorm/seeds.h"

namespace renorm::cli {

/// A seed map: either the degenerate map of the extended fixed point or a SeedSpec family.
struct MapSpec {
    std::string kind = "generic";  // generic | example | constant_jacobian | custom | degenerate
    SeedSpec seed;
    int degree = 0;  // degenerate maps: eps/delta degree (0 = default_degree(m))
};

/// Build from a JSON object; presets fill the family and explicit keys override single fields.
MapSpec map_spec_from_json(const nlohmann::json& j);
MapSpec load_map_spec(const std::string& path);
nlohmann::json map_spec_to_json(const MapSpec& s);

/// The level-0 map (untuned seeds use f_param as is).
HenonMap build_map(const MapSpec& s);
/// Tower of the given depth; tuned unless seed.tune is false or the map is degenerate.
RenormalizationSequence build_map_tower(const MapSpec& s, int depth, const RenormOptions& opt = {});

struct SweepGrid {
    double lo = 0.1, hi = 1.6;
    int count = 20;
    std::vector<double> values() const;  // linear, endpoints included
};

/// "lo:hi:count"
SweepGrid parse_grid(const std::string& s);

struct ExperimentConfig {
    MapSpec map;
    int depth = 3;
    int max_depth = 8;
    int grid = 9;                  // residual grid points per axis
    std::string region = "pieces";
    int scope_kmax = 2;
    int geometry_kmax = 2;
    int piece_samples = 5;         // boundary samples per axis for hulls
    SweepGrid sweep;
    int sweep_depth = 5;
    int sweep_kmax = 2;
    std::vector<std::string> stages = {"fixed_point", "tower", "classn", "scope", "geometry"};
    std::string output = "out";
    std::string text;  // source text, hashed into the manifest
};

/**
 * Parse lines "key = <json value>" under "[section]" headers; '#' starts a comment line.
 * `base_dir` resolves seed.file. Throws ConfigError on unknown keys or bad values.
 */
ExperimentConfig parse_config(const std::string& text, const std::string& base_dir = ".");
ExperimentConfig load_config(const std::string& path);

/// FNV-1a 64-bit hash as 16 hex digits.
std::string config_hash(const std::string& text);

}  // namespace renorm::cli
