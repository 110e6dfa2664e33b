#pragma once

// Signal and control pulse timing for a store/hold/retrieve cycle.

#include <qmem/model.hpp>

#include <string>

namespace qmem {

enum class control_shape { flat_top, gaussian };

std::string to_string(control_shape s);
control_shape control_shape_from_string(const std::string& s);

/// Gaussian signal, normalised so that the integral of |a_in|^2 is one.
struct signal_pulse
{
    double fwhm_s = 17.30e-9;   ///< intensity FWHM
    double center_s = 60e-9;
    cplx scale{1.0, 0.0};       ///< multiplies the unit-energy envelope

    /// Peak amplitude of the unit-energy envelope [s^-1/2].
    double peak() const;
    cplx amplitude(double t) const;
};

/// Control envelope in [0, 1] scaled by amp.
///
/// flat_top: raised-cosine rise over `edge_s`, flat top, raised-cosine fall;
/// `width_s` is the full duration from start of rise to end of fall.
/// gaussian: amplitude Gaussian whose intensity FWHM is `width_s`.
struct control_pulse
{
    double amp = 1.0;
    control_shape shape = control_shape::flat_top;
    double center_s = 0.0;
    double width_s = 50e-9;
    double edge_s = 5e-9;

    double envelope(double t) const;
    double value(double t) const { return amp * envelope(t); }
    double start() const;
    double stop() const;
};

struct pulse_schedule
{
    signal_pulse signal;
    control_pulse control1;
    control_pulse control2;         ///< center is derived, see retrieval_center()
    double storage_time_s = 455e-9; ///< control2 center - control1 center
    double tail_s = 10e-9;          ///< simulated time after control2 ends
    /// Retrieval window start; negative means "control2 onset".
    double retrieval_start_s = -1.0;

    double retrieval_center() const { return control1.center_s + storage_time_s; }
    /// control2 with its center placed at retrieval_center().
    control_pulse retrieval_pulse() const;
    /// Total control scaling amp1 env1(t) + amp2 env2(t).
    double control(double t) const;
    double t_end() const;
    double retrieval_start() const;

    /// Throws invalid_input naming the offending field.
    void validate() const;
};

bool operator==(const signal_pulse& a, const signal_pulse& b);
bool operator==(const control_pulse& a, const control_pulse& b);
bool operator==(const pulse_schedule& a, const pulse_schedule& b);

/// Fig. 2 timing for the NV memory (amp1 = 4.3, amp2 = 6, 455 ns storage).
pulse_schedule nv_schedule();
/// Same timing with amp2 = 1.5, used with the adiabatic reduced model.
pulse_schedule nv_reduced_schedule();
/// Rb memory timing (amp1 = 0.05, amp2 = 0.1, 91 ns storage).
pulse_schedule rb_schedule();

} // namespace qmem
