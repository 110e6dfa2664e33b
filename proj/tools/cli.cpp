#include "cli.hpp"

#include <qmem/config.hpp>
#include <qmem/metrics.hpp>
#include <qmem/parallel.hpp>
#include <qmem/reduced.hpp>
#include <qmem/sweep.hpp>

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>

namespace qmem::cli {

namespace {

namespace fs = std::filesystem;

struct common_options
{
    std::string config = "nv";
    std::vector<std::string> set;
    std::string out;
    std::string format = "json";
    std::string window;
    bool verbose = false;
};

// A config argument is a file when one exists at that path, else a preset name.
json effective_config(const common_options& o)
{
    json cfg;
    const auto names = preset_names();
    if (fs::exists(o.config))
        cfg = load_effective_config(o.config);
    else if (std::find(names.begin(), names.end(), o.config) != names.end())
        cfg = to_json(preset_config(o.config));
    else
        throw io_error("config '" + o.config + "': no such file or preset");
    for (const auto& s : o.set) apply_override(cfg, s);
    if (!o.window.empty()) apply_override(cfg, "metrics.window=" + o.window);
    return cfg;
}

json complex_json(cplx z) { return {{"re", z.real()}, {"im", z.imag()}, {"abs", std::abs(z)}}; }

// JSON has no NaN; non-finite numbers are written as null.
json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json stats_json(const memory_run& r)
{
    return {{"steps", r.stats.steps},
            {"rejected", r.stats.rejected},
            {"rhs_evaluations", r.stats.rhs_evaluations},
            {"max_step_s", r.max_step},
            {"samples", r.t.size()}};
}

void write_text(const fs::path& p, const std::string& text)
{
    std::ofstream f(p);
    if (!f) throw io_error("cannot open '" + p.string() + "' for writing");
    f << text;
    if (!f) throw io_error("write to '" + p.string() + "' failed");
}

fs::path summary_path(const fs::path& out)
{
    fs::path p = out;
    p.replace_extension(".summary.json");
    return p;
}

// Scalar reports: JSON document, or "key,value" rows for the top-level
// scalars with the nested config omitted.
void emit_report(const json& report, const std::string& format, std::ostream& out)
{
    if (format == "json") {
        out << report.dump(2) << '\n';
        return;
    }
    out << "key,value\n";
    for (auto it = report.begin(); it != report.end(); ++it) {
        if (it.value().is_structured()) continue;
        out << it.key() << ',' << (it.value().is_string() ? it.value().get<std::string>()
                                                          : it.value().dump())
            << '\n';
    }
}

void add_common(CLI::App* sub, common_options& o, bool with_out = true)
{
    sub->add_option("-c,--config", o.config, "config file, recipe file or preset name")
        ->capture_default_str();
    sub->add_option("-s,--set", o.set, "override key=value, applied after parsing")
        ->allow_extra_args(false);
    if (with_out) sub->add_option("-o,--out", o.out, "output file");
    sub->add_option("--format", o.format, "scalar report format")
        ->check(CLI::IsMember({"json", "csv"}))
        ->capture_default_str();
    sub->add_flag("-v,--verbose", o.verbose, "print integrator statistics and warnings");
}

int cmd_run(const common_options& o, bool noise, bool states, std::ostream& out,
            std::ostream& err)
{
    const json cfg_json = effective_config(o);
    run_config cfg = config_from_json(cfg_json);
    if (states) cfg.integrator.record_trajectory = true;
    const memory_run r = noise ? noise_run(cfg.system, cfg.schedule, cfg.integrator)
                               : run_protocol(cfg.system, cfg.schedule, cfg.integrator);
    json report = {{"kind", noise ? "noise" : "run"}};
    if (noise) {
        const fidelity_result f = apparent_fidelity(r);
        report["fidelity"] = f.fidelity;
        report["raw_fidelity"] = f.raw_fidelity;
        report["noise_energy"] = f.noise_energy;
        report["clamped"] = f.clamped;
    } else {
        report["efficiency"] = efficiency(r, cfg.window);
        report["window"] = to_string(cfg.window);
    }
    const regime_result reg = classify_regime(cfg.system, cfg.schedule);
    report["regime"] = to_string(reg.kind);
    report["omega_over_gamma"] = reg.f;
    report["retrieval_start_s"] = r.retrieval_start;
    report["integrator"] = stats_json(r);
    report["config"] = cfg_json;
    if (!o.out.empty()) {
        std::ostringstream csv;
        write_csv(r, csv, states);
        write_text(o.out, csv.str());
        report["csv"] = o.out;
        write_json_file(summary_path(o.out), report);
    }
    if (o.verbose)
        err << "steps " << r.stats.steps << ", rejected " << r.stats.rejected << ", max step "
            << r.max_step << " s\n";
    emit_report(report, o.format, out);
    return ok;
}

std::vector<double> parse_times(const std::string& s)
{
    // "a:b:n" is an inclusive linspace, otherwise a comma-separated list.
    std::vector<double> v;
    try {
        if (std::count(s.begin(), s.end(), ':') == 2) {
            const auto p1 = s.find(':'), p2 = s.rfind(':');
            return parse_values(json{{"linspace",
                                      {std::stod(s.substr(0, p1)),
                                       std::stod(s.substr(p1 + 1, p2 - p1 - 1)),
                                       std::stoll(s.substr(p2 + 1))}}},
                                "--times");
        }
        std::stringstream ss(s);
        std::string item;
        while (std::getline(ss, item, ',')) v.push_back(std::stod(item));
    } catch (const std::logic_error&) {
        throw invalid_input("--times: expected 'a:b:n' or a comma-separated list, got '" + s +
                            "'");
    }
    return v;
}

int cmd_scan(const common_options& o, const std::string& times_arg, unsigned jobs,
             std::ostream& out)
{
    const json cfg_json = effective_config(o);
    std::vector<double> times;
    if (!times_arg.empty()) {
        times = parse_times(times_arg);
    } else if (fs::exists(o.config)) {
        const json recipe = load_config_json(o.config);
        if (recipe.contains("storage_times"))
            times = parse_values(recipe["storage_times"], "storage_times");
    }
    if (times.empty())
        throw invalid_input("storage_times: give --times or a recipe with 'storage_times'");
    const storage_scan_result s = storage_time_scan(config_from_json(cfg_json), times, jobs);

    json rows = json::array();
    for (const auto& r : s.rows)
        rows.push_back({{"storage_time_s", r.storage_time_s},
                        {"efficiency", number(r.efficiency)},
                        {"fidelity", number(r.fidelity)}});
    json report = {{"kind", "scan_storage"},
                   {"points", s.rows.size()},
                   {"measured_period_s", number(s.measured_period_s)},
                   {"period_pi_over_delta_s", number(s.period_pi_over_delta_s)},
                   {"period_delta_over_pi", number(s.period_delta_over_pi)},
                   {"rows", rows},
                   {"config", cfg_json}};
    if (!o.out.empty()) {
        std::ostringstream csv;
        csv.precision(17);
        csv << "storage_time_s,efficiency,fidelity\n";
        for (const auto& r : s.rows)
            csv << r.storage_time_s << ',' << r.efficiency << ',' << r.fidelity << '\n';
        write_text(o.out, csv.str());
        report["csv"] = o.out;
        write_json_file(summary_path(o.out), report);
    }
    emit_report(report, o.format, out);
    return ok;
}

int cmd_sweep(const std::string& plan_path, const std::vector<std::string>& set,
              const std::string& out_path, unsigned jobs, const std::string& format,
              std::ostream& out, std::ostream& err, bool verbose)
{
    json j = load_config_json(plan_path);
    if (!set.empty()) {
        if (!j.contains("set")) j["set"] = json::array();
        for (const auto& s : set) j["set"].push_back(s);
    }
    const sweep_plan plan = plan_from_json(j, fs::path(plan_path).parent_path());
    const sweep_result r = sweep(plan, jobs);
    persist(r, out_path);
    std::size_t failed = 0;
    for (const auto& row : r.rows) {
        if (row.status == "ok") continue;
        ++failed;
        if (verbose) err << row.status << ": " << row.message << '\n';
    }
    json report = {{"kind", "sweep"},
                   {"rows", r.rows.size()},
                   {"failed", failed},
                   {"csv", out_path},
                   {"sidecar", sidecar_path(out_path).string()},
                   {"elapsed_s", r.timing.value("elapsed_s", 0.0)}};
    emit_report(report, format, out);
    return ok;
}

int cmd_rate(const common_options& o, int spectator, std::ostream& out, std::ostream& err)
{
    const json cfg_json = effective_config(o);
    const run_config cfg = config_from_json(cfg_json);
    const reduced_params p = reduced_params_from_spec(cfg.system, spectator);
    const cplx b = amplification_rate(p);
    const auto [lp, lm] = growth_exponents(b, p.Gamma(), p.Delta8, p.delta);
    const auto warnings = adiabatic_warnings(p, cfg.schedule);
    if (o.verbose)
        for (const auto& w : warnings) err << "warning: " << w << '\n';
    json report = {{"kind", "rate"},
                   {"spectator", spectator},
                   {"abs_b", std::abs(b)},
                   {"re_lambda_plus", lp.real()},
                   {"N", p.N},
                   {"alpha", p.alpha()},
                   {"Gamma", p.Gamma()},
                   {"Delta8", p.Delta8},
                   {"delta", p.delta},
                   {"b", complex_json(b)},
                   {"lambda_plus", complex_json(lp)},
                   {"lambda_minus", complex_json(lm)},
                   {"adiabatic_warnings", warnings},
                   {"config", cfg_json}};
    if (!o.out.empty()) write_json_file(o.out, report);
    emit_report(report, o.format, out);
    return ok;
}

int cmd_audit(const common_options& o, const audit_options& opt, std::ostream& out)
{
    const json cfg_json = effective_config(o);
    const run_config cfg = config_from_json(cfg_json);
    const audit_report a = audit(cfg.system, opt);
    if (o.format == "csv") {
        std::ostringstream csv;
        csv.precision(17);
        csv << "channel_k,abs_b,re_lambda_plus,ratio,flagged\n";
        for (const auto& c : a.channels)
            csv << c.k << ',' << std::abs(c.b) << ',' << c.lambda_plus.real() << ',' << c.ratio
                << ',' << (c.flagged ? 1 : 0) << '\n';
        out << csv.str();
        if (!o.out.empty()) write_text(o.out, csv.str());
        return ok;
    }
    json channels = json::array();
    for (const auto& c : a.channels)
        channels.push_back({{"k", c.k},
                            {"b", complex_json(c.b)},
                            {"lambda_plus", complex_json(c.lambda_plus)},
                            {"lambda_minus", complex_json(c.lambda_minus)},
                            {"ratio", c.ratio},
                            {"flagged", c.flagged}});
    const json report = {{"kind", "audit"},
                         {"signal_level", a.signal_level},
                         {"ctrl", opt.ctrl},
                         {"duration_s", opt.duration_s},
                         {"channels", channels},
                         {"config", cfg_json}};
    if (!o.out.empty()) write_json_file(o.out, report);
    out << report.dump(2) << '\n';
    return ok;
}

int cmd_preset(const std::string& name, const std::vector<std::string>& set,
               const std::string& out_path, std::ostream& out)
{
    json cfg = to_json(preset_config(name));
    for (const auto& s : set) apply_override(cfg, s);
    config_from_json(cfg);
    if (out_path.empty() || out_path == "-")
        out << cfg.dump(2) << '\n';
    else
        write_json_file(out_path, cfg);
    return ok;
}

} // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Cavity quantum-memory simulator: full and reduced models, sweeps, audits"};
    app.name("qmem");
    app.require_subcommand(1);

    common_options o;
    bool states = false;
    std::string times;
    unsigned jobs = 0;
    std::string plan;
    int spectator = 8;
    audit_options aopt;
    std::string preset_name;

    auto* run = app.add_subcommand("run", "signal protocol: time series and efficiency");
    add_common(run, o);
    run->add_option("--window", o.window, "energy window")
        ->check(CLI::IsMember({"retrieval", "total"}));
    run->add_flag("--states", states, "add the state trajectory to the CSV");

    auto* noise = app.add_subcommand("noise", "zero-input protocol: noise and apparent fidelity");
    add_common(noise, o);
    noise->add_flag("--states", states, "add the state trajectory to the CSV");

    auto* scan = app.add_subcommand("scan-storage", "efficiency and fidelity vs storage time");
    add_common(scan, o);
    scan->add_option("--times", times, "storage times in s: 'a:b:n' or a comma list");
    scan->add_option("-j,--jobs", jobs, "parallel runs (0 = all cores)")->capture_default_str();

    auto* sw = app.add_subcommand("sweep", "parameter sweep from a plan file");
    sw->add_option("-p,--plan", plan, "plan file")->required();
    sw->add_option("-o,--out", o.out, "results CSV; the sidecar goes next to it")->required();
    sw->add_option("-s,--set", o.set, "override applied to the plan's base config");
    sw->add_option("-j,--jobs", jobs, "parallel points (0 = all cores)")->capture_default_str();
    sw->add_option("--format", o.format, "report format")
        ->check(CLI::IsMember({"json", "csv"}));
    sw->add_flag("-v,--verbose", o.verbose, "list failed points");

    auto* rate = app.add_subcommand("rate", "amplification rate b and growth exponents");
    add_common(rate, o);
    rate->add_option("--spectator", spectator, "spectator excited level")->capture_default_str();

    auto* aud = app.add_subcommand("audit", "rank spectator amplification channels");
    add_common(aud, o);
    aud->add_option("--ctrl", aopt.ctrl, "control factor on every Omega")->capture_default_str();
    aud->add_option("--duration", aopt.duration_s, "protocol duration in s for flagging")
        ->capture_default_str();

    auto* pre = app.add_subcommand("preset", "write a built-in config");
    pre->add_option("name", preset_name, "preset name")
        ->required()
        ->check(CLI::IsMember(preset_names()));
    pre->add_option("-o,--out", o.out, "output file (default stdout)");
    pre->add_option("-s,--set", o.set, "override key=value");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return ok;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n\n" << app.help();
        return validation;
    }

    try {
        if (run->parsed()) return cmd_run(o, false, states, out, err);
        if (noise->parsed()) return cmd_run(o, true, states, out, err);
        if (scan->parsed()) return cmd_scan(o, times, jobs, out);
        if (sw->parsed()) return cmd_sweep(plan, o.set, o.out, jobs, o.format, out, err, o.verbose);
        if (rate->parsed()) return cmd_rate(o, spectator, out, err);
        if (aud->parsed()) return cmd_audit(o, aopt, out);
        if (pre->parsed()) return cmd_preset(preset_name, o.set, o.out, out);
    } catch (const io_error& e) {
        err << "io error: " << e.what() << '\n';
        return io;
    } catch (const invalid_input& e) {
        err << "invalid input: " << e.what() << '\n';
        return validation;
    } catch (const singular_parameters& e) {
        err << "singular parameters: " << e.what() << '\n';
        return numerical;
    } catch (const stiffness_error& e) {
        err << "stiffness: " << e.what() << " (t = " << e.time() << " s)\n";
        return numerical;
    } catch (const divergence_error& e) {
        err << "divergence: " << e.what() << " (t = " << e.time() << " s, growth "
            << e.growth_exponent() << " /s)\n";
        return numerical;
    } catch (const json::exception& e) {
        err << "invalid input: " << e.what() << '\n';
        return validation;
    }
    err << app.help();
    return validation;
}

} // namespace qmem::cli
