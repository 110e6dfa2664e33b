#pragma once

// JSON configuration: system, schedule, integrator and metric settings,
// dotted-key overrides, and file IO.
//
// Layout of a config document:
//
//   { "schema_version": 1,
//     "system":     { levels, couplings, cavity, relaxation, ensemble, ... },
//     "schedule":   { signal, control1, control2, storage_time_s, ... },
//     "integrator": { rtol, atol, dt_s, step_cap_scale },
//     "metrics":    { window } }
//
// Couplings are keyed couplings.<G|Omega>.<j>.<k> and hold
// { value_rad_per_s: [re, im], scale, desired }. The engine uses
// value * scale, so `--set couplings.G.3.8.scale=0` removes G_38 and
// setting the same scale twice is the same as setting it once.
//
// Keys under "derived" are written for auditing and ignored on read.

#include <qmem/dynamics.hpp>
#include <qmem/model.hpp>
#include <qmem/pulses.hpp>

#include <json.hpp>

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace qmem {

using json = nlohmann::ordered_json;

inline constexpr int config_schema_version = 1;

enum class energy_window { retrieval, total };

std::string to_string(energy_window w);
energy_window energy_window_from_string(const std::string& s);

/// Everything one protocol run needs.
struct run_config
{
    system_spec system;
    pulse_schedule schedule;
    run_options integrator;
    energy_window window = energy_window::retrieval;
};

json to_json(const system_spec& spec);
json to_json(const pulse_schedule& schedule);
json to_json(const run_options& opt);
json to_json(const run_config& cfg);

/// Inverse of to_json. Missing or mistyped keys throw invalid_input naming
/// the dotted key. Derived cavity quantities are recomputed.
system_spec system_from_json(const json& j);
pulse_schedule schedule_from_json(const json& j);
run_options run_options_from_json(const json& j);
run_config config_from_json(const json& j);

/// Built-in presets as full configs: "nv", "nv4", "nv-desired", "rb".
run_config preset_config(const std::string& name);
std::vector<std::string> preset_names();

/// Sets the value at a dotted key; `assignment` is "key=value". The value is
/// parsed as JSON when possible (numbers, arrays, booleans) and taken as a
/// string otherwise. Keys may omit the leading section ("couplings.G.3.8.scale"
/// resolves under "system"). Throws invalid_input for unknown keys.
void apply_override(json& cfg, std::string_view assignment);

/// Resolves a dotted key against a config document; returns the full path
/// with the section prefix; array elements are addressed by zero-based index
/// ("levels.detuning_rad_per_s.4"). Throws invalid_input when nothing matches.
std::string resolve_key(const json& cfg, std::string_view key);

/// Reads the JSON value at a resolved dotted key.
const json& value_at(const json& cfg, std::string_view key);
json& value_at(json& cfg, std::string_view key);

json read_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const json& j);

/// Reads a config file and checks its schema version.
json load_config_json(const std::filesystem::path& path);

/// A recipe is a small document that names a base config and edits it:
///
///   { "schema_version": 1, "kind": "run" | "scan_storage" | "sweep",
///     "base": "nv" | "relative/path.cfg" | { inline config },
///     "set": ["key=value", ...], ... kind-specific keys ... }
///
/// Returns the base config with the recipe's "set" list applied. Relative
/// base paths resolve against `dir`.
json resolve_recipe(const json& recipe, const std::filesystem::path& dir);

/// Loads either a full config or a recipe and returns the effective config.
json load_effective_config(const std::filesystem::path& path);

/// A value list: either a JSON array of numbers or {"linspace": [a, b, n]}.
std::vector<double> parse_values(const json& j, const std::string& key);

} // namespace qmem
