#include <qmem/config.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace qmem {

namespace {

std::string join(const std::string& ctx, const std::string& key)
{
    return ctx.empty() ? key : ctx + "." + key;
}

const json& req(const json& j, const std::string& key, const std::string& ctx)
{
    if (!j.is_object())
        throw invalid_input(ctx + ": expected an object");
    auto it = j.find(key);
    if (it == j.end()) throw invalid_input(join(ctx, key) + ": missing");
    return *it;
}

double get_double(const json& j, const std::string& key, const std::string& ctx)
{
    const json& v = req(j, key, ctx);
    if (!v.is_number()) throw invalid_input(join(ctx, key) + ": expected a number");
    return v.get<double>();
}

std::optional<double> get_opt_double(const json& j, const std::string& key,
                                     const std::string& ctx)
{
    const json& v = req(j, key, ctx);
    if (v.is_null()) return std::nullopt;
    if (!v.is_number())
        throw invalid_input(join(ctx, key) + ": expected a number or null");
    return v.get<double>();
}

long long get_int(const json& j, const std::string& key, const std::string& ctx)
{
    const json& v = req(j, key, ctx);
    if (v.is_number_integer()) return v.get<long long>();
    if (v.is_number_float()) {
        const double d = v.get<double>();
        if (d == std::floor(d) && std::abs(d) < 9e15) return static_cast<long long>(d);
    }
    throw invalid_input(join(ctx, key) + ": expected an integer");
}

bool get_bool(const json& j, const std::string& key, const std::string& ctx)
{
    const json& v = req(j, key, ctx);
    if (!v.is_boolean()) throw invalid_input(join(ctx, key) + ": expected true or false");
    return v.get<bool>();
}

std::string get_string(const json& j, const std::string& key, const std::string& ctx)
{
    const json& v = req(j, key, ctx);
    if (!v.is_string()) throw invalid_input(join(ctx, key) + ": expected a string");
    return v.get<std::string>();
}

json cplx_json(cplx z) { return json::array({z.real(), z.imag()}); }

cplx get_cplx(const json& j, const std::string& key, const std::string& ctx)
{
    const json& v = req(j, key, ctx);
    if (v.is_number()) return {v.get<double>(), 0.0};
    if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
        throw invalid_input(join(ctx, key) + ": expected [re, im]");
    return {v[0].get<double>(), v[1].get<double>()};
}

json opt_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::vector<std::string> split_dotted(std::string_view key)
{
    std::vector<std::string> out;
    std::string cur;
    for (char c : key) {
        if (c == '.') {
            out.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    out.push_back(cur);
    return out;
}

const json* walk(const json& root, const std::vector<std::string>& parts)
{
    const json* node = &root;
    for (const auto& p : parts) {
        if (node->is_array()) {
            // Array elements are addressed by zero-based index.
            if (p.empty() || p.find_first_not_of("0123456789") != std::string::npos)
                return nullptr;
            const std::size_t i = std::stoul(p);
            if (i >= node->size()) return nullptr;
            node = &(*node)[i];
            continue;
        }
        if (!node->is_object()) return nullptr;
        auto it = node->find(p);
        if (it == node->end()) return nullptr;
        node = &*it;
    }
    return node;
}

json couplings_json(const system_spec& s, bool omega)
{
    const cmatrix& M = omega ? s.couplings.Omega : s.couplings.G;
    const bmatrix& D = omega ? s.couplings.desired_Omega : s.couplings.desired_G;
    json out = json::object();
    for (int j = 1; j <= level_scheme::n_ground; ++j) {
        json row = json::object();
        for (int c = 0; c < s.levels.n_excited(); ++c) {
            row[std::to_string(s.levels.excited[c])] = {
                {"value_rad_per_s", cplx_json(M(j - 1, c))},
                {"scale", 1.0},
                {"desired", static_cast<bool>(D(j - 1, c))}};
        }
        out[std::to_string(j)] = row;
    }
    return out;
}

void read_couplings(const json& j, const std::string& ctx, const level_scheme& L,
                    cmatrix& M, bmatrix& D)
{
    M = cmatrix::Zero(level_scheme::n_ground, L.n_excited());
    D = bmatrix::Constant(level_scheme::n_ground, L.n_excited(), false);
    for (int r = 1; r <= level_scheme::n_ground; ++r) {
        const std::string rk = std::to_string(r);
        const json& row = req(j, rk, ctx);
        for (int c = 0; c < L.n_excited(); ++c) {
            const std::string ck = std::to_string(L.excited[c]);
            const std::string ectx = join(ctx, rk);
            const json& e = req(row, ck, ectx);
            const std::string ekey = join(ectx, ck);
            const double scale = get_double(e, "scale", ekey);
            if (!(scale >= 0.0) || !std::isfinite(scale))
                throw invalid_input(ekey + ".scale: must be a finite value >= 0");
            const cplx v = get_cplx(e, "value_rad_per_s", ekey);
            M(r - 1, c) = scale == 1.0 ? v : v * scale;
            D(r - 1, c) = get_bool(e, "desired", ekey);
        }
    }
}

json control_json(const control_pulse& c, bool with_center)
{
    json out = {{"amp", c.amp}, {"shape", to_string(c.shape)}};
    if (with_center) out["center_s"] = c.center_s;
    out["width_s"] = c.width_s;
    out["edge_s"] = c.edge_s;
    return out;
}

control_pulse control_from_json(const json& j, const std::string& ctx, bool with_center)
{
    control_pulse c;
    c.amp = get_double(j, "amp", ctx);
    try {
        c.shape = control_shape_from_string(get_string(j, "shape", ctx));
    } catch (const invalid_input& e) {
        if (std::string(e.what()).rfind("shape:", 0) == 0)
            throw invalid_input(join(ctx, e.what()));
        throw;
    }
    c.center_s = with_center ? get_double(j, "center_s", ctx) : 0.0;
    c.width_s = get_double(j, "width_s", ctx);
    c.edge_s = get_double(j, "edge_s", ctx);
    return c;
}

} // namespace

std::string to_string(energy_window w)
{
    return w == energy_window::total ? "total" : "retrieval";
}

energy_window energy_window_from_string(const std::string& s)
{
    if (s == "retrieval") return energy_window::retrieval;
    if (s == "total") return energy_window::total;
    throw invalid_input("metrics.window: expected 'retrieval' or 'total', got '" + s + "'");
}

json to_json(const system_spec& s)
{
    const auto& L = s.levels;
    const auto& C = s.cavity;
    const auto& R = s.relaxation;
    json frozen = json::array();
    for (auto [j, k] : s.frozen) frozen.push_back(json::array({j, k}));

    const auto cav = derive_cavity(C, s.ensemble.n_emitters, R.gamma_r);
    json derived_cavity = {{"omega_c_rad_per_s", cav.cavity.omega_c},
                           {"kappa_rad_per_s", cav.cavity.kappa},
                           {"volume_m3", cav.cavity.volume},
                           {"g_c_rad_per_s", cav.cavity.g_c},
                           {"cooperativity", std::isfinite(cav.cooperativity)
                                                 ? json(cav.cooperativity)
                                                 : json(nullptr)},
                           {"kappa_convention", "kappa = omega_c / (2 Q)"}};
    const auto lw = homogeneous_linewidth(R);

    return {
        {"name", s.name},
        {"table_units", to_string(s.units)},
        {"provenance", s.provenance},
        {"include_level1", s.include_level1},
        {"levels",
         {{"excited", L.excited},
          {"detuning_rad_per_s", L.detuning},
          {"resonant_level", L.resonant_level},
          {"delta_rad_per_s", L.delta},
          {"omega22_rad_per_s", L.omega22},
          {"omega33_rad_per_s", L.omega33}}},
        {"couplings", {{"G", couplings_json(s, false)}, {"Omega", couplings_json(s, true)}}},
        {"cavity",
         {{"wavelength_m", C.wavelength_m},
          {"refractive_index", C.refractive_index},
          {"Q", C.Q},
          {"volume_scale", C.volume_scale},
          {"volume_m3", opt_json(C.volume_m3)},
          {"dipole_cm", opt_json(C.dipole_cm)},
          {"derived", derived_cavity}}},
        {"relaxation",
         {{"gamma_s_rad_per_s", R.gamma_s},
          {"gamma_e_rad_per_s", R.gamma_e},
          {"temperature_K", R.temperature_K},
          {"gamma0_rad_per_s", R.gamma0},
          {"c_per_K5", R.c_coeff},
          {"r_per_s", R.r_rate},
          {"gamma_r_rad_per_s", R.gamma_r},
          {"derived",
           {{"Gamma_T_rad_per_s", lw.gamma},
            {"gamma_d_rad_per_s", lw.gamma / 2.0},
            {"above_validity_range", lw.above_validity}}}}},
        {"ensemble", {{"n_emitters", s.ensemble.n_emitters}, {"closure", "fixed"}}},
        {"frozen", frozen},
    };
}

system_spec system_from_json(const json& j)
{
    const std::string ctx = "system";
    system_spec s;
    s.name = get_string(j, "name", ctx);
    {
        const std::string u = get_string(j, "table_units", ctx);
        if (u != "angular" && u != "cyclic")
            throw invalid_input("system.table_units: expected 'angular' or 'cyclic'");
        s.units = table_units_from_string(u);
    }
    s.provenance = get_string(j, "provenance", ctx);
    s.include_level1 = get_bool(j, "include_level1", ctx);

    const json& lj = req(j, "levels", ctx);
    const std::string lctx = "system.levels";
    auto& L = s.levels;
    {
        const json& ex = req(lj, "excited", lctx);
        const json& dt = req(lj, "detuning_rad_per_s", lctx);
        if (!ex.is_array()) throw invalid_input(lctx + ".excited: expected an array");
        if (!dt.is_array())
            throw invalid_input(lctx + ".detuning_rad_per_s: expected an array");
        for (const auto& e : ex) {
            if (!e.is_number_integer())
                throw invalid_input(lctx + ".excited: expected integer labels");
            L.excited.push_back(e.get<int>());
        }
        for (const auto& d : dt) {
            if (!d.is_number())
                throw invalid_input(lctx + ".detuning_rad_per_s: expected numbers");
            L.detuning.push_back(d.get<double>());
        }
    }
    L.resonant_level = static_cast<int>(get_int(lj, "resonant_level", lctx));
    L.delta = get_double(lj, "delta_rad_per_s", lctx);
    L.omega22 = get_double(lj, "omega22_rad_per_s", lctx);
    L.omega33 = get_double(lj, "omega33_rad_per_s", lctx);
    L.validate();

    const json& cj = req(j, "couplings", ctx);
    read_couplings(req(cj, "G", "system.couplings"), "system.couplings.G", L, s.couplings.G,
                   s.couplings.desired_G);
    read_couplings(req(cj, "Omega", "system.couplings"), "system.couplings.Omega", L,
                   s.couplings.Omega, s.couplings.desired_Omega);

    const json& rj = req(j, "relaxation", ctx);
    const std::string rctx = "system.relaxation";
    auto& R = s.relaxation;
    R.gamma_s = get_double(rj, "gamma_s_rad_per_s", rctx);
    R.gamma_e = get_double(rj, "gamma_e_rad_per_s", rctx);
    R.temperature_K = get_double(rj, "temperature_K", rctx);
    R.gamma0 = get_double(rj, "gamma0_rad_per_s", rctx);
    R.c_coeff = get_double(rj, "c_per_K5", rctx);
    R.r_rate = get_double(rj, "r_per_s", rctx);
    R.gamma_r = get_double(rj, "gamma_r_rad_per_s", rctx);

    const json& ej = req(j, "ensemble", ctx);
    const long long n = get_int(ej, "n_emitters", "system.ensemble");
    if (n < 1 || n > 2'000'000'000)
        throw invalid_input("system.ensemble.n_emitters: must be >= 1");
    s.ensemble.n_emitters = static_cast<int>(n);
    const std::string closure = get_string(ej, "closure", "system.ensemble");
    if (closure == "dynamic")
        throw invalid_input("system.ensemble.closure: 'dynamic' is reserved and not implemented");
    if (closure != "fixed")
        throw invalid_input("system.ensemble.closure: expected 'fixed'");

    const json& kj = req(j, "cavity", ctx);
    const std::string kctx = "system.cavity";
    cavity_params cav;
    cav.wavelength_m = get_double(kj, "wavelength_m", kctx);
    cav.refractive_index = get_double(kj, "refractive_index", kctx);
    cav.Q = get_double(kj, "Q", kctx);
    cav.volume_scale = get_double(kj, "volume_scale", kctx);
    cav.volume_m3 = get_opt_double(kj, "volume_m3", kctx);
    cav.dipole_cm = get_opt_double(kj, "dipole_cm", kctx);
    try {
        s.cavity = derive_cavity(cav, s.ensemble.n_emitters, R.gamma_r).cavity;
    } catch (const invalid_input& e) {
        throw invalid_input(std::string("system.cavity: ") + e.what());
    }

    const json& fj = req(j, "frozen", ctx);
    if (!fj.is_array()) throw invalid_input("system.frozen: expected an array of [j, k]");
    for (const auto& p : fj) {
        if (!p.is_array() || p.size() != 2 || !p[0].is_number_integer() ||
            !p[1].is_number_integer())
            throw invalid_input("system.frozen: expected an array of [j, k]");
        s.frozen.emplace_back(p[0].get<int>(), p[1].get<int>());
    }
    s.validate();
    return s;
}

json to_json(const pulse_schedule& p)
{
    return {
        {"signal",
         {{"shape", "gaussian"},
          {"fwhm_s", p.signal.fwhm_s},
          {"center_s", p.signal.center_s},
          {"scale", cplx_json(p.signal.scale)}}},
        {"control1", control_json(p.control1, true)},
        {"control2", control_json(p.control2, false)},
        {"storage_time_s", p.storage_time_s},
        {"tail_s", p.tail_s},
        {"retrieval_start_s",
         p.retrieval_start_s >= 0.0 ? json(p.retrieval_start_s) : json(nullptr)},
        {"derived",
         {{"control2_center_s", p.retrieval_center()},
          {"control2_start_s", p.retrieval_pulse().start()},
          {"retrieval_window_start_s", p.retrieval_start()},
          {"t_end_s", p.t_end()},
          {"signal_peak_per_sqrt_s", p.signal.peak()},
          {"control_envelope",
           "flat_top: raised-cosine edges of edge_s, width_s is the full duration; "
           "gaussian: intensity FWHM width_s"}}},
    };
}

pulse_schedule schedule_from_json(const json& j)
{
    const std::string ctx = "schedule";
    pulse_schedule p;
    const json& sj = req(j, "signal", ctx);
    if (get_string(sj, "shape", "schedule.signal") != "gaussian")
        throw invalid_input("schedule.signal.shape: only 'gaussian' is supported");
    p.signal.fwhm_s = get_double(sj, "fwhm_s", "schedule.signal");
    p.signal.center_s = get_double(sj, "center_s", "schedule.signal");
    p.signal.scale = get_cplx(sj, "scale", "schedule.signal");
    p.control1 = control_from_json(req(j, "control1", ctx), "schedule.control1", true);
    p.control2 = control_from_json(req(j, "control2", ctx), "schedule.control2", false);
    p.storage_time_s = get_double(j, "storage_time_s", ctx);
    p.tail_s = get_double(j, "tail_s", ctx);
    const auto rs = get_opt_double(j, "retrieval_start_s", ctx);
    p.retrieval_start_s = rs ? *rs : -1.0;
    if (rs && *rs < 0.0)
        throw invalid_input("schedule.retrieval_start_s: must be >= 0 or null");
    p.validate();
    return p;
}

json to_json(const run_options& o)
{
    return {{"rtol", o.rtol},
            {"atol", o.atol},
            {"dt_s", o.dt},
            {"step_cap_scale", o.step_cap_scale},
            {"derived", {{"max_step_rule", "fastest retained period / 20 * step_cap_scale"},
                         {"dt_rule", "dt_s = 0 uses the step cap as output spacing"}}}};
}

run_options run_options_from_json(const json& j)
{
    const std::string ctx = "integrator";
    run_options o;
    o.rtol = get_double(j, "rtol", ctx);
    o.atol = get_double(j, "atol", ctx);
    o.dt = get_double(j, "dt_s", ctx);
    o.step_cap_scale = get_double(j, "step_cap_scale", ctx);
    if (!(o.rtol > 0.0)) throw invalid_input("integrator.rtol: must be > 0");
    if (!(o.atol > 0.0)) throw invalid_input("integrator.atol: must be > 0");
    if (!(o.dt >= 0.0)) throw invalid_input("integrator.dt_s: must be >= 0");
    if (!(o.step_cap_scale > 0.0))
        throw invalid_input("integrator.step_cap_scale: must be > 0");
    return o;
}

json to_json(const run_config& c)
{
    return {{"schema_version", config_schema_version},
            {"system", to_json(c.system)},
            {"schedule", to_json(c.schedule)},
            {"integrator", to_json(c.integrator)},
            {"metrics", {{"window", to_string(c.window)}}}};
}

run_config config_from_json(const json& j)
{
    if (!j.is_object()) throw invalid_input("config: expected a JSON object");
    const long long v = get_int(j, "schema_version", "");
    if (v != config_schema_version)
        throw schema_version_error("schema_version: expected " +
                                   std::to_string(config_schema_version) + ", got " +
                                   std::to_string(v));
    run_config c;
    c.system = system_from_json(req(j, "system", ""));
    c.schedule = schedule_from_json(req(j, "schedule", ""));
    c.integrator = run_options_from_json(req(j, "integrator", ""));
    c.window = energy_window_from_string(get_string(req(j, "metrics", ""), "window", "metrics"));
    return c;
}

std::vector<std::string> preset_names()
{
    return {"nv", "nv-desired", "nv4", "nv4-adiabatic", "rb"};
}

run_config preset_config(const std::string& name)
{
    run_config c;
    if (name == "nv") {
        c.system = nv_preset();
        c.schedule = nv_schedule();
    } else if (name == "nv-desired") {
        c.system = desired_only(nv_preset());
        c.schedule = nv_schedule();
    } else if (name == "nv4") {
        c.system = nv_simplified_preset();
        c.schedule = nv_schedule();
    } else if (name == "nv4-adiabatic") {
        c.system = nv_simplified_preset();
        c.schedule = nv_reduced_schedule();
    } else if (name == "rb") {
        c.system = rb_preset();
        c.schedule = rb_schedule();
    } else {
        std::string names;
        for (const auto& n : preset_names()) names += (names.empty() ? "" : ", ") + n;
        throw invalid_input("preset: unknown name '" + name + "' (expected one of " + names +
                            ")");
    }
    return c;
}

std::string resolve_key(const json& cfg, std::string_view key)
{
    const auto parts = split_dotted(key);
    for (const auto& p : parts)
        if (p.empty()) throw invalid_input("override: malformed key '" + std::string(key) + "'");
    for (const auto& p : parts)
        if (p == "derived")
            throw invalid_input(std::string(key) + ": derived values cannot be set");
    if (walk(cfg, parts)) return std::string(key);
    for (const char* section : {"system", "schedule", "integrator", "metrics"}) {
        auto full = parts;
        full.insert(full.begin(), section);
        if (walk(cfg, full)) return std::string(section) + "." + std::string(key);
    }
    throw invalid_input("unknown config key '" + std::string(key) + "'");
}

const json& value_at(const json& cfg, std::string_view key)
{
    const json* node = walk(cfg, split_dotted(resolve_key(cfg, key)));
    return *node;
}

json& value_at(json& cfg, std::string_view key)
{
    return const_cast<json&>(value_at(static_cast<const json&>(cfg), key));
}

void apply_override(json& cfg, std::string_view assignment)
{
    const auto eq = assignment.find('=');
    if (eq == std::string_view::npos || eq == 0)
        throw invalid_input("override: expected key=value, got '" + std::string(assignment) +
                            "'");
    const std::string key(assignment.substr(0, eq));
    const std::string text(assignment.substr(eq + 1));
    json& slot = value_at(cfg, key);

    json value;
    try {
        value = json::parse(text);
    } catch (const json::parse_error&) {
        value = text;
    }

    auto fail = [&](const char* what) {
        throw invalid_input(key + ": expected " + std::string(what) + ", got '" + text + "'");
    };
    if (slot.is_number()) {
        if (!value.is_number()) fail("a number");
        if (slot.is_number_integer() && !value.is_number_integer()) {
            const double d = value.get<double>();
            if (d != std::floor(d)) fail("an integer");
            value = static_cast<long long>(d);
        }
    } else if (slot.is_boolean()) {
        if (!value.is_boolean()) fail("true or false");
    } else if (slot.is_string()) {
        if (!value.is_string()) value = text;
    } else if (slot.is_array()) {
        if (!value.is_array()) fail("an array");
    } else if (slot.is_null()) {
        if (!value.is_null() && !value.is_number()) fail("a number or null");
    } else if (slot.is_object()) {
        throw invalid_input(key + ": names a section, not a value");
    }
    slot = std::move(value);
}

json read_json_file(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw io_error("cannot open '" + path.string() + "' for reading");
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw io_error("'" + path.string() + "' is not valid JSON: " + e.what());
    }
}

void write_json_file(const std::filesystem::path& path, const json& j)
{
    std::ofstream out(path);
    if (!out) throw io_error("cannot open '" + path.string() + "' for writing");
    out << j.dump(2) << '\n';
    if (!out) throw io_error("write to '" + path.string() + "' failed");
}

json load_config_json(const std::filesystem::path& path)
{
    json j = read_json_file(path);
    if (!j.is_object() || !j.contains("schema_version"))
        throw invalid_input("'" + path.string() + "': schema_version: missing");
    const auto& v = j["schema_version"];
    if (!v.is_number_integer() || v.get<long long>() != config_schema_version)
        throw schema_version_error("'" + path.string() + "': schema_version " + v.dump() +
                                   " is not supported (expected " +
                                   std::to_string(config_schema_version) + ")");
    return j;
}

json resolve_recipe(const json& recipe, const std::filesystem::path& dir)
{
    if (!recipe.is_object()) throw invalid_input("recipe: expected a JSON object");
    const json& base = req(recipe, "base", "");
    json cfg;
    if (base.is_string()) {
        const std::string name = base.get<std::string>();
        const auto names = preset_names();
        if (std::find(names.begin(), names.end(), name) != names.end()) {
            cfg = to_json(preset_config(name));
        } else {
            std::filesystem::path p(name);
            if (p.is_relative()) p = dir / p;
            cfg = load_effective_config(p);
        }
    } else if (base.is_object()) {
        cfg = base;
    } else {
        throw invalid_input("base: expected a preset name, a path or an inline config");
    }
    if (recipe.contains("set")) {
        const json& set = recipe["set"];
        if (!set.is_array()) throw invalid_input("set: expected an array of \"key=value\"");
        for (const auto& a : set) {
            if (!a.is_string()) throw invalid_input("set: expected strings");
            apply_override(cfg, a.get<std::string>());
        }
    }
    return cfg;
}

json load_effective_config(const std::filesystem::path& path)
{
    json j = load_config_json(path);
    if (j.contains("system")) return j;
    if (j.contains("base")) return resolve_recipe(j, path.parent_path());
    throw invalid_input("'" + path.string() + "': neither a config (no 'system') nor a recipe "
                        "(no 'base')");
}

std::vector<double> parse_values(const json& j, const std::string& key)
{
    std::vector<double> out;
    if (j.is_array()) {
        for (const auto& v : j) {
            if (!v.is_number()) throw invalid_input(key + ": expected numbers");
            out.push_back(v.get<double>());
        }
    } else if (j.is_object() && j.contains("linspace")) {
        const json& l = j["linspace"];
        if (!l.is_array() || l.size() != 3 || !l[0].is_number() || !l[1].is_number() ||
            !l[2].is_number_integer())
            throw invalid_input(key + ".linspace: expected [start, stop, count]");
        const double a = l[0].get<double>(), b = l[1].get<double>();
        const long long n = l[2].get<long long>();
        if (n < 1) throw invalid_input(key + ".linspace: count must be >= 1");
        for (long long i = 0; i < n; ++i)
            out.push_back(n == 1 ? a : a + (b - a) * static_cast<double>(i) /
                                               static_cast<double>(n - 1));
    } else {
        throw invalid_input(key + ": expected an array or {\"linspace\": [a, b, n]}");
    }
    if (out.empty()) throw invalid_input(key + ": value list is empty");
    return out;
}

} // namespace qmem
