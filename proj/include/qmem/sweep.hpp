#pragma once

// Parameter sweeps over one or two dotted config keys, evaluated in
// parallel with deterministic row order, and their CSV + JSON persistence.

#include <qmem/config.hpp>
#include <qmem/reduced.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace qmem {

inline constexpr int sweep_schema_version = 1;

enum class sweep_model { full_numeric, reduced };

std::string to_string(sweep_model m);
sweep_model sweep_model_from_string(const std::string& s);

/// `path` is a dotted config key (section prefix optional), or
/// "terms.<i>" for a reduced-model term weight.
struct sweep_axis
{
    std::string path;
    std::vector<double> values;
};

struct sweep_plan
{
    json base;                      ///< effective base config
    std::vector<sweep_axis> axes;   ///< one or two
    sweep_model model = sweep_model::full_numeric;
    term_mask mask;                 ///< reduced model only
    int spectator = 8;              ///< reduced model only
    bool want_efficiency = true;
    bool want_fidelity = true;

    /// Throws invalid_input for empty axes or unresolvable paths.
    void validate() const;
    std::size_t size() const;
};

json to_json(const sweep_plan& plan);
/// Plan document: base (preset, path relative to `dir`, or inline), set,
/// model, terms, term_weights, spectator, outputs, axes.
sweep_plan plan_from_json(const json& j, const std::filesystem::path& dir = {});
sweep_plan load_plan(const std::filesystem::path& path);

struct sweep_row
{
    std::vector<double> axis_values;
    double efficiency;      ///< NaN when not requested or failed
    double fidelity;        ///< NaN when not requested or failed
    std::string status;     ///< "ok" or an error class
    std::string message;    ///< empty when ok
};

struct sweep_result
{
    json plan;                          ///< to_json(plan) echo
    std::vector<std::string> axis_names;
    std::vector<sweep_row> rows;        ///< lexicographic in axis indices
    int schema_version = sweep_schema_version;
    json timing = json::object();       ///< excluded from equality
};

bool operator==(const sweep_row& a, const sweep_row& b);
bool operator==(const sweep_result& a, const sweep_result& b);

/// Evaluates every grid point; a failing point is recorded with its status
/// and never aborts the sweep. `jobs` = 0 uses all hardware threads.
sweep_result sweep(const sweep_plan& plan, unsigned jobs = 1);

/// Evaluates a single configuration the way sweep() does.
sweep_row evaluate_point(const sweep_plan& plan, const std::vector<double>& axis_values);

/// Copy of `spec` with G_jk (or Omega_jk) multiplied by `factor` >= 0.
system_spec scale_coupling(const system_spec& spec, int j, int k, double factor,
                           bool omega = false);

/// CSV header: axis paths..., efficiency, fidelity, status.
void write_csv(const sweep_result& r, std::ostream& os);

/// Path of the JSON sidecar for a CSV path: results.csv -> results.plan.json.
std::filesystem::path sidecar_path(const std::filesystem::path& csv);

void persist(const sweep_result& r, const std::filesystem::path& csv);
/// Throws io_error on missing or malformed files and schema_version_error
/// on a version mismatch.
sweep_result load(const std::filesystem::path& csv);

} // namespace qmem
