#pragma once

// Figures of merit on a memory run: apparent efficiency, apparent fidelity,
// EIT/ATS regime, and the storage-time scan.

#include <qmem/config.hpp>
#include <qmem/dynamics.hpp>

#include <span>
#include <vector>

namespace qmem {

/// Integral of uniformly sampled data: composite Simpson for an even number
/// of intervals, trapezoid otherwise.
double integrate_uniform(std::span<const double> y, double dt);

/// First sample index with t >= t0.
std::size_t window_begin(const memory_run& run, double t0);

/// Energy of a_out over [t_from, t_end].
double output_energy(const memory_run& run, double t_from);

/// Apparent efficiency E. Throws invalid_input for a noise run.
double efficiency(const memory_run& run, energy_window window);

struct fidelity_result
{
    double fidelity;        ///< 1 - noise_energy clamped to [0, 1]
    double raw_fidelity;    ///< 1 - noise_energy before clamping
    double noise_energy;    ///< energy of a_n over the whole run
    bool clamped;
};

/// Apparent fidelity F = 1 - energy(a_n). Throws invalid_input unless the run
/// was made with zero input.
fidelity_result apparent_fidelity(const memory_run& noise);

enum class regime { eit, ats, boundary };

std::string to_string(regime r);

struct regime_result
{
    regime kind;
    double f;       ///< Omega_peak / Gamma(T)
};

/// EIT when f < 1, ATS when f > 1, boundary when |f - 1| <= 1e-6.
regime_result classify_regime(double omega_peak, double gamma);

/// Regime of the storage step: Omega_peak = amp1 * |desired Omega|.
regime_result classify_regime(const system_spec& spec, const pulse_schedule& schedule);

struct metrics_result
{
    double efficiency;
    fidelity_result fidelity;
    energy_window window;
    regime_result regime;
};

/// Signal run plus noise run, both from the zero state.
metrics_result evaluate(const run_config& cfg);

struct storage_scan_row
{
    double storage_time_s;
    double efficiency;
    double fidelity;
};

struct storage_scan_result
{
    std::vector<storage_scan_row> rows;
    /// Dominant period of E(t_s), see dominant_period(); NaN with fewer than
    /// four points or a flat series.
    double measured_period_s;
    double period_pi_over_delta_s;      ///< pi / delta
    double period_delta_over_pi;        ///< delta / pi, as printed
};

/// Dominant period of a sampled series: the frequency whose least-squares
/// sinusoid (with offset) explains the most variance, searched from one
/// period per span up to the Nyquist limit. Handles non-uniform sampling.
double dominant_period(std::span<const double> t, std::span<const double> y);

/// Reruns signal and noise protocols per storage time, `jobs` at a time.
/// Rows come back in input order.
storage_scan_result storage_time_scan(const run_config& base,
                                      std::span<const double> storage_times,
                                      unsigned jobs = 1);

} // namespace qmem
