#include <qmem/metrics.hpp>
#include <qmem/parallel.hpp>
#include <qmem/sweep.hpp>

#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace qmem {

namespace {

const double nan_value = std::numeric_limits<double>::quiet_NaN();

bool is_term_path(const std::string& p) { return p.rfind("terms.", 0) == 0; }

int term_index(const std::string& p)
{
    const std::string tail = p.substr(6);
    if (tail.size() != 1 || tail[0] < '1' || tail[0] > '8')
        throw invalid_input(p + ": expected terms.<1..8>");
    return tail[0] - '0';
}

void set_number(json& cfg, const std::string& path, double v)
{
    json& slot = value_at(cfg, path);
    if (slot.is_number_integer()) {
        if (v != std::floor(v)) throw invalid_input(path + ": expected an integer value");
        slot = static_cast<long long>(v);
    } else if (slot.is_number() || slot.is_null()) {
        slot = v;
    } else {
        throw invalid_input(path + ": sweep axes must address numeric keys");
    }
}

bool same_double(double a, double b)
{
    return (std::isnan(a) && std::isnan(b)) || a == b;
}

std::string fmt(double v)
{
    if (std::isnan(v)) return "nan";
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

double parse_double(const std::string& s, const std::string& where)
{
    if (s == "nan") return nan_value;
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end == s.c_str() || *end != '\0')
        throw io_error(where + ": '" + s + "' is not a number");
    return v;
}

std::vector<std::string> split_csv_line(const std::string& line)
{
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    out.push_back(cur);
    return out;
}

} // namespace

std::string to_string(sweep_model m)
{
    return m == sweep_model::reduced ? "reduced" : "full_numeric";
}

sweep_model sweep_model_from_string(const std::string& s)
{
    if (s == "full_numeric") return sweep_model::full_numeric;
    if (s == "reduced") return sweep_model::reduced;
    throw invalid_input("model: expected 'full_numeric' or 'reduced', got '" + s + "'");
}

void sweep_plan::validate() const
{
    if (axes.empty() || axes.size() > 2)
        throw invalid_input("axes: a sweep needs one or two axes");
    for (const auto& a : axes) {
        if (a.values.empty()) throw invalid_input("axes: '" + a.path + "' has no values");
        if (is_term_path(a.path)) {
            if (model != sweep_model::reduced)
                throw invalid_input(a.path + ": term weights need model 'reduced'");
            if (term_index(a.path) == 1)
                throw invalid_input(a.path + ": term 1 cannot be swept");
        } else {
            const json& v = value_at(base, a.path);
            if (!v.is_number() && !v.is_null())
                throw invalid_input(a.path + ": sweep axes must address numeric keys");
        }
    }
    if (!want_efficiency && !want_fidelity)
        throw invalid_input("outputs: request at least one of E, F");
    config_from_json(base);
}

std::size_t sweep_plan::size() const
{
    std::size_t n = 1;
    for (const auto& a : axes) n *= a.values.size();
    return axes.empty() ? 0 : n;
}

json to_json(const sweep_plan& p)
{
    json axes = json::array();
    for (const auto& a : p.axes) axes.push_back({{"path", a.path}, {"values", a.values}});
    json outputs = json::array();
    if (p.want_efficiency) outputs.push_back("E");
    if (p.want_fidelity) outputs.push_back("F");
    std::vector<double> weights(p.mask.weight.begin() + 1, p.mask.weight.end());
    return {{"schema_version", sweep_schema_version},
            {"kind", "sweep"},
            {"model", to_string(p.model)},
            {"term_weights", weights},
            {"spectator", p.spectator},
            {"outputs", outputs},
            {"axes", axes},
            {"base", p.base}};
}

sweep_plan plan_from_json(const json& j, const std::filesystem::path& dir)
{
    if (!j.is_object()) throw invalid_input("plan: expected a JSON object");
    sweep_plan p;
    p.base = resolve_recipe(j, dir);
    if (j.contains("model")) {
        if (!j["model"].is_string()) throw invalid_input("model: expected a string");
        p.model = sweep_model_from_string(j["model"].get<std::string>());
    }
    if (j.contains("terms")) {
        const json& t = j["terms"];
        if (!t.is_array()) throw invalid_input("terms: expected a list of term indices");
        std::vector<int> terms;
        for (const auto& v : t) {
            if (!v.is_number_integer()) throw invalid_input("terms: expected integers 1..8");
            terms.push_back(v.get<int>());
        }
        p.mask = term_mask::only(terms);
    }
    if (j.contains("term_weights")) {
        const json& w = j["term_weights"];
        if (w.is_array()) {
            if (w.size() != 8) throw invalid_input("term_weights: expected 8 weights");
            for (int i = 0; i < 8; ++i) {
                if (!w[i].is_number()) throw invalid_input("term_weights: expected numbers");
                if (i == 0 && w[i].get<double>() != 1.0)
                    throw invalid_input("term_weights: term 1 must have weight 1");
                if (i > 0) p.mask.set(i + 1, w[i].get<double>());
            }
        } else if (w.is_object()) {
            for (auto it = w.begin(); it != w.end(); ++it) {
                if (!it.value().is_number())
                    throw invalid_input("term_weights." + it.key() + ": expected a number");
                p.mask.set(term_index("terms." + it.key()), it.value().get<double>());
            }
        } else {
            throw invalid_input("term_weights: expected an array or an object");
        }
    }
    if (j.contains("spectator")) {
        if (!j["spectator"].is_number_integer())
            throw invalid_input("spectator: expected an excited-level label");
        p.spectator = j["spectator"].get<int>();
    }
    if (j.contains("outputs")) {
        p.want_efficiency = p.want_fidelity = false;
        for (const auto& o : j["outputs"]) {
            const std::string s = o.is_string() ? o.get<std::string>() : "";
            if (s == "E" || s == "efficiency")
                p.want_efficiency = true;
            else if (s == "F" || s == "fidelity")
                p.want_fidelity = true;
            else
                throw invalid_input("outputs: expected 'E' or 'F', got " + o.dump());
        }
    }
    if (!j.contains("axes") || !j["axes"].is_array())
        throw invalid_input("axes: expected a list of {path, values}");
    for (const auto& a : j["axes"]) {
        if (!a.is_object() || !a.contains("path") || !a["path"].is_string() ||
            !a.contains("values"))
            throw invalid_input("axes: each axis needs 'path' and 'values'");
        const std::string path = a["path"].get<std::string>();
        p.axes.push_back({path, parse_values(a["values"], "axes." + path + ".values")});
    }
    p.validate();
    return p;
}

sweep_plan load_plan(const std::filesystem::path& path)
{
    const json j = load_config_json(path);
    return plan_from_json(j, path.parent_path());
}

system_spec scale_coupling(const system_spec& spec, int j, int k, double factor, bool omega)
{
    if (!(factor >= 0.0) || !std::isfinite(factor))
        throw invalid_input("scale_coupling: factor must be finite and >= 0");
    const int c = spec.levels.excited_index(k);
    if (j < 1 || j > level_scheme::n_ground || c < 0)
        throw invalid_input("scale_coupling: (" + std::to_string(j) + "," +
                            std::to_string(k) + ") is not a coupling of this system");
    system_spec s = spec;
    cplx& v = omega ? s.couplings.Omega(j - 1, c) : s.couplings.G(j - 1, c);
    v *= factor;
    return s;
}

sweep_row evaluate_point(const sweep_plan& plan, const std::vector<double>& values)
{
    sweep_row row{values, nan_value, nan_value, "ok", {}};
    try {
        json cfg_json = plan.base;
        term_mask mask = plan.mask;
        for (std::size_t a = 0; a < plan.axes.size(); ++a) {
            const std::string& path = plan.axes[a].path;
            if (is_term_path(path))
                mask.set(term_index(path), values[a]);
            else
                set_number(cfg_json, path, values[a]);
        }
        const run_config cfg = config_from_json(cfg_json);
        if (plan.model == sweep_model::full_numeric) {
            if (plan.want_efficiency)
                row.efficiency =
                    efficiency(run_protocol(cfg.system, cfg.schedule, cfg.integrator), cfg.window);
            if (plan.want_fidelity)
                row.fidelity =
                    apparent_fidelity(noise_run(cfg.system, cfg.schedule, cfg.integrator)).fidelity;
        } else {
            const reduced_params p = reduced_params_from_spec(cfg.system, plan.spectator);
            if (plan.want_efficiency)
                row.efficiency =
                    efficiency(reduced_protocol(p, cfg.schedule, mask, cfg.integrator).run,
                               cfg.window);
            if (plan.want_fidelity)
                row.fidelity = apparent_fidelity(
                                   reduced_protocol(p, cfg.schedule, mask, cfg.integrator, true).run)
                                   .fidelity;
        }
    } catch (const schema_version_error& e) {
        row.status = "schema";
        row.message = e.what();
    } catch (const invalid_input& e) {
        row.status = "invalid_input";
        row.message = e.what();
    } catch (const singular_parameters& e) {
        row.status = "singular";
        row.message = e.what();
    } catch (const stiffness_error& e) {
        row.status = "stiffness";
        row.message = e.what();
    } catch (const divergence_error& e) {
        row.status = "divergence";
        row.message = e.what();
    } catch (const std::exception& e) {
        row.status = "error";
        row.message = e.what();
    }
    if (row.status != "ok") row.efficiency = row.fidelity = nan_value;
    return row;
}

sweep_result sweep(const sweep_plan& plan, unsigned jobs)
{
    plan.validate();
    const auto start = std::chrono::steady_clock::now();
    sweep_result r;
    r.plan = to_json(plan);
    for (const auto& a : plan.axes) r.axis_names.push_back(a.path);
    const std::size_t n = plan.size();
    const std::size_t inner = plan.axes.size() == 2 ? plan.axes[1].values.size() : 1;
    r.rows.resize(n);
    parallel_for(n, jobs, [&](std::size_t i) {
        std::vector<double> values;
        values.push_back(plan.axes[0].values[i / inner]);
        if (plan.axes.size() == 2) values.push_back(plan.axes[1].values[i % inner]);
        r.rows[i] = evaluate_point(plan, values);
    });
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    r.timing = {{"elapsed_s", elapsed}, {"jobs", resolve_jobs(jobs)}, {"points", n}};
    return r;
}

bool operator==(const sweep_row& a, const sweep_row& b)
{
    if (a.axis_values.size() != b.axis_values.size()) return false;
    for (std::size_t i = 0; i < a.axis_values.size(); ++i)
        if (!same_double(a.axis_values[i], b.axis_values[i])) return false;
    return same_double(a.efficiency, b.efficiency) && same_double(a.fidelity, b.fidelity) &&
           a.status == b.status && a.message == b.message;
}

bool operator==(const sweep_result& a, const sweep_result& b)
{
    return a.schema_version == b.schema_version && a.plan == b.plan &&
           a.axis_names == b.axis_names && a.rows == b.rows;
}

void write_csv(const sweep_result& r, std::ostream& os)
{
    for (const auto& name : r.axis_names) os << name << ',';
    os << "efficiency,fidelity,status\n";
    for (const auto& row : r.rows) {
        for (double v : row.axis_values) os << fmt(v) << ',';
        os << fmt(row.efficiency) << ',' << fmt(row.fidelity) << ',' << row.status << '\n';
    }
}

std::filesystem::path sidecar_path(const std::filesystem::path& csv)
{
    std::filesystem::path p = csv;
    p.replace_extension(".plan.json");
    return p;
}

void persist(const sweep_result& r, const std::filesystem::path& csv)
{
    {
        std::ofstream out(csv);
        if (!out) throw io_error("cannot open '" + csv.string() + "' for writing");
        write_csv(r, out);
        if (!out) throw io_error("write to '" + csv.string() + "' failed");
    }
    json failures = json::array();
    for (std::size_t i = 0; i < r.rows.size(); ++i)
        if (!r.rows[i].message.empty())
            failures.push_back({{"row", i}, {"message", r.rows[i].message}});
    const json side = {{"schema_version", r.schema_version},
                       {"kind", "sweep_result"},
                       {"csv", csv.filename().string()},
                       {"axis_names", r.axis_names},
                       {"rows", r.rows.size()},
                       {"plan", r.plan},
                       {"failures", failures},
                       {"timing", r.timing}};
    write_json_file(sidecar_path(csv), side);
}

sweep_result load(const std::filesystem::path& csv)
{
    const json side = read_json_file(sidecar_path(csv));
    if (!side.is_object() || !side.contains("schema_version"))
        throw io_error("'" + sidecar_path(csv).string() + "': schema_version missing");
    const json& v = side["schema_version"];
    if (!v.is_number_integer() || v.get<int>() != sweep_schema_version)
        throw schema_version_error("'" + sidecar_path(csv).string() + "': schema_version " +
                                   v.dump() + " is not supported (expected " +
                                   std::to_string(sweep_schema_version) + ")");
    sweep_result r;
    try {
        r.plan = side.at("plan");
        r.axis_names = side.at("axis_names").get<std::vector<std::string>>();
        r.timing = side.value("timing", json::object());
    } catch (const json::exception& e) {
        throw io_error("'" + sidecar_path(csv).string() + "': " + e.what());
    }

    std::ifstream in(csv);
    if (!in) throw io_error("cannot open '" + csv.string() + "' for reading");
    std::string line;
    if (!std::getline(in, line)) throw io_error("'" + csv.string() + "': empty file");
    std::vector<std::string> expect = r.axis_names;
    for (const char* c : {"efficiency", "fidelity", "status"}) expect.emplace_back(c);
    if (split_csv_line(line) != expect)
        throw io_error("'" + csv.string() + "': header does not match the sidecar axes");
    const std::size_t na = r.axis_names.size();
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto cells = split_csv_line(line);
        const std::string where = csv.string() + ":" + std::to_string(lineno);
        if (cells.size() != na + 3) throw io_error(where + ": wrong number of columns");
        sweep_row row;
        for (std::size_t a = 0; a < na; ++a) row.axis_values.push_back(parse_double(cells[a], where));
        row.efficiency = parse_double(cells[na], where);
        row.fidelity = parse_double(cells[na + 1], where);
        row.status = cells[na + 2];
        r.rows.push_back(std::move(row));
    }
    if (side.contains("failures")) {
        for (const auto& f : side["failures"]) {
            const std::size_t i = f.at("row").get<std::size_t>();
            if (i >= r.rows.size()) throw io_error("sidecar failure index out of range");
            r.rows[i].message = f.at("message").get<std::string>();
        }
    }
    return r;
}

} // namespace qmem
