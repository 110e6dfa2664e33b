#include <qmem/metrics.hpp>
#include <qmem/parallel.hpp>

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numeric>

namespace qmem {

double integrate_uniform(std::span<const double> y, double dt)
{
    const std::size_t n = y.size();
    if (n < 2) return 0.0;
    const std::size_t intervals = n - 1;
    if (intervals % 2 != 0) {
        double acc = 0.5 * (y.front() + y.back());
        for (std::size_t i = 1; i + 1 < n; ++i) acc += y[i];
        return acc * dt;
    }
    double odd = 0.0, even = 0.0;
    for (std::size_t i = 1; i + 1 < n; ++i) (i % 2 ? odd : even) += y[i];
    return (y.front() + y.back() + 4.0 * odd + 2.0 * even) * dt / 3.0;
}

std::size_t window_begin(const memory_run& run, double t0)
{
    return static_cast<std::size_t>(
        std::lower_bound(run.t.begin(), run.t.end(), t0) - run.t.begin());
}

double output_energy(const memory_run& run, double t_from)
{
    const std::size_t i0 = window_begin(run, t_from);
    std::vector<double> p;
    p.reserve(run.t.size() - std::min(i0, run.t.size()));
    for (std::size_t i = i0; i < run.a_out.size(); ++i) p.push_back(std::norm(run.a_out[i]));
    return integrate_uniform(p, run.dt());
}

double efficiency(const memory_run& run, energy_window window)
{
    if (run.is_noise_run)
        throw invalid_input("efficiency: got a zero-input (noise) run");
    const double t0 = window == energy_window::total ? run.t.front() : run.retrieval_start;
    return output_energy(run, t0);
}

fidelity_result apparent_fidelity(const memory_run& noise)
{
    if (!noise.is_noise_run)
        throw invalid_input("apparent_fidelity: run was made with a nonzero input");
    fidelity_result r{};
    r.noise_energy = output_energy(noise, noise.t.front());
    r.raw_fidelity = 1.0 - r.noise_energy;
    r.fidelity = std::clamp(r.raw_fidelity, 0.0, 1.0);
    r.clamped = r.fidelity != r.raw_fidelity;
    return r;
}

std::string to_string(regime r)
{
    switch (r) {
    case regime::eit: return "EIT";
    case regime::ats: return "ATS";
    case regime::boundary: return "boundary";
    }
    return "?";
}

regime_result classify_regime(double omega_peak, double gamma)
{
    if (!(gamma > 0.0)) throw invalid_input("classify_regime: Gamma(T) must be > 0");
    const double f = std::abs(omega_peak) / gamma;
    if (std::abs(f - 1.0) <= 1e-6) return {regime::boundary, f};
    return {f < 1.0 ? regime::eit : regime::ats, f};
}

regime_result classify_regime(const system_spec& spec, const pulse_schedule& schedule)
{
    double omega = 0.0;
    const auto& C = spec.couplings;
    for (Eigen::Index i = 0; i < C.Omega.size(); ++i)
        if (C.desired_Omega(i)) omega = std::max(omega, std::abs(C.Omega(i)));
    return classify_regime(schedule.control1.amp * omega,
                           homogeneous_linewidth(spec.relaxation).gamma);
}

metrics_result evaluate(const run_config& cfg)
{
    const memory_run sig = run_protocol(cfg.system, cfg.schedule, cfg.integrator);
    const memory_run noise = noise_run(cfg.system, cfg.schedule, cfg.integrator);
    return {efficiency(sig, cfg.window), apparent_fidelity(noise), cfg.window,
            classify_regime(cfg.system, cfg.schedule)};
}

double dominant_period(std::span<const double> t, std::span<const double> y)
{
    const std::size_t n = std::min(t.size(), y.size());
    const double nan = std::numeric_limits<double>::quiet_NaN();
    if (n < 4) return nan;
    const double mean = std::accumulate(y.begin(), y.begin() + n, 0.0) / static_cast<double>(n);
    double spread = 0.0;
    for (std::size_t i = 0; i < n; ++i) spread = std::max(spread, std::abs(y[i] - mean));
    if (spread <= 1e-12 * std::max(1.0, std::abs(mean))) return nan;

    const auto [lo, hi] = std::minmax_element(t.begin(), t.begin() + n);
    const double span = *hi - *lo;
    double min_dt = std::numeric_limits<double>::infinity();
    std::vector<double> ts(t.begin(), t.begin() + n);
    std::sort(ts.begin(), ts.end());
    for (std::size_t i = 1; i < n; ++i)
        if (ts[i] > ts[i - 1]) min_dt = std::min(min_dt, ts[i] - ts[i - 1]);
    if (!(span > 0.0) || !std::isfinite(min_dt)) return nan;

    // Variance explained by the least-squares fit y ~ c0 + c1 cos(w t) + c2 sin(w t).
    // Exact for a pure tone, unlike a plain periodogram on a finite window.
    auto power = [&](double w) {
        Eigen::Matrix3d A = Eigen::Matrix3d::Zero();
        Eigen::Vector3d r = Eigen::Vector3d::Zero();
        for (std::size_t i = 0; i < n; ++i) {
            const double x = w * (t[i] - *lo);
            const Eigen::Vector3d f(1.0, std::cos(x), std::sin(x));
            A += f * f.transpose();
            r += f * (y[i] - mean);
        }
        const Eigen::Vector3d c = A.completeOrthogonalDecomposition().solve(r);
        return c.dot(r);
    };
    // from one period per scan span up to the Nyquist frequency
    const double w_lo = constants::two_pi / span;
    const double w_hi = std::numbers::pi / min_dt;
    if (!(w_hi > w_lo)) return nan;
    const int grid = static_cast<int>(std::min<std::size_t>(20000, 50 * n));
    double best_w = w_lo, best_p = -1.0;
    const double step = (w_hi - w_lo) / grid;
    for (int i = 0; i <= grid; ++i) {
        const double w = w_lo + step * i;
        const double p = power(w);
        if (p > best_p) {
            best_p = p;
            best_w = w;
        }
    }
    // golden-section refinement inside the neighbouring grid cells
    double a = std::max(w_lo, best_w - step), b = std::min(w_hi, best_w + step);
    const double g = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = b - g * (b - a), d = a + g * (b - a);
    double pc = power(c), pd = power(d);
    for (int it = 0; it < 100 && (b - a) > 1e-12 * best_w; ++it) {
        if (pc > pd) {
            b = d;
            d = c;
            pd = pc;
            c = b - g * (b - a);
            pc = power(c);
        } else {
            a = c;
            c = d;
            pc = pd;
            d = a + g * (b - a);
            pd = power(d);
        }
    }
    return constants::two_pi / (0.5 * (a + b));
}

storage_scan_result storage_time_scan(const run_config& base,
                                      std::span<const double> storage_times, unsigned jobs)
{
    for (double ts : storage_times)
        if (!(ts >= 0.0)) throw invalid_input("storage_time_scan: storage times must be >= 0");
    storage_scan_result out;
    out.rows.resize(storage_times.size());
    parallel_for(storage_times.size(), jobs, [&](std::size_t i) {
        run_config cfg = base;
        cfg.schedule.storage_time_s = storage_times[i];
        const metrics_result m = evaluate(cfg);
        out.rows[i] = {storage_times[i], m.efficiency, m.fidelity.fidelity};
    });
    std::vector<double> t, e;
    for (const auto& r : out.rows) {
        t.push_back(r.storage_time_s);
        e.push_back(r.efficiency);
    }
    out.measured_period_s = dominant_period(t, e);
    const double delta = base.system.levels.delta;
    out.period_pi_over_delta_s =
        delta > 0.0 ? std::numbers::pi / delta : std::numeric_limits<double>::infinity();
    out.period_delta_over_pi = delta / std::numbers::pi;
    return out;
}

} // namespace qmem
