#include <qmem/pulses.hpp>

#include <algorithm>
#include <cmath>

namespace qmem {

namespace {

const double ln2 = std::log(2.0);

} // namespace

std::string to_string(control_shape s)
{
    return s == control_shape::gaussian ? "gaussian" : "flat_top";
}

control_shape control_shape_from_string(const std::string& s)
{
    if (s == "flat_top") return control_shape::flat_top;
    if (s == "gaussian") return control_shape::gaussian;
    throw invalid_input("shape: expected 'flat_top' or 'gaussian', got '" + s + "'");
}

double signal_pulse::peak() const
{
    // |a|^2 = A^2 exp(-4 ln2 x^2 / w^2) integrates to A^2 w sqrt(pi / (4 ln2))
    return 1.0 / std::sqrt(fwhm_s * std::sqrt(std::numbers::pi / (4.0 * ln2)));
}

cplx signal_pulse::amplitude(double t) const
{
    if (scale == cplx{}) return {};
    const double x = (t - center_s) / fwhm_s;
    return scale * (peak() * std::exp(-2.0 * ln2 * x * x));
}

double control_pulse::start() const
{
    return shape == control_shape::flat_top ? center_s - 0.5 * width_s
                                            : center_s - 2.0 * width_s;
}

double control_pulse::stop() const
{
    return shape == control_shape::flat_top ? center_s + 0.5 * width_s
                                            : center_s + 2.0 * width_s;
}

double control_pulse::envelope(double t) const
{
    if (shape == control_shape::gaussian) {
        const double x = (t - center_s) / width_s;
        return std::exp(-2.0 * ln2 * x * x);
    }
    const double t0 = start();
    const double t1 = stop();
    if (t <= t0 || t >= t1) return 0.0;
    const double edge = std::min(edge_s, 0.5 * width_s);
    if (edge <= 0.0) return 1.0;
    if (t < t0 + edge) return 0.5 * (1.0 - std::cos(std::numbers::pi * (t - t0) / edge));
    if (t > t1 - edge) return 0.5 * (1.0 - std::cos(std::numbers::pi * (t1 - t) / edge));
    return 1.0;
}

control_pulse pulse_schedule::retrieval_pulse() const
{
    control_pulse c = control2;
    c.center_s = retrieval_center();
    return c;
}

double pulse_schedule::control(double t) const
{
    return control1.value(t) + retrieval_pulse().value(t);
}

double pulse_schedule::t_end() const
{
    return retrieval_pulse().stop() + tail_s;
}

double pulse_schedule::retrieval_start() const
{
    return retrieval_start_s >= 0.0 ? retrieval_start_s : retrieval_pulse().start();
}

void pulse_schedule::validate() const
{
    if (!(signal.fwhm_s > 0.0)) throw invalid_input("schedule.signal.fwhm_s: must be > 0");
    if (!(control1.width_s > 0.0)) throw invalid_input("schedule.control1.width_s: must be > 0");
    if (!(control2.width_s > 0.0)) throw invalid_input("schedule.control2.width_s: must be > 0");
    if (!(control1.edge_s >= 0.0)) throw invalid_input("schedule.control1.edge_s: must be >= 0");
    if (!(control2.edge_s >= 0.0)) throw invalid_input("schedule.control2.edge_s: must be >= 0");
    if (!(storage_time_s >= 0.0)) throw invalid_input("schedule.storage_time_s: must be >= 0");
    if (!(tail_s >= 0.0)) throw invalid_input("schedule.tail_s: must be >= 0");
    if (!(signal.center_s > 0.0)) throw invalid_input("schedule.signal.center_s: must be > 0");
    if (control1.start() < 0.0)
        throw invalid_input("schedule.control1: pulse starts before t = 0");
}

bool operator==(const signal_pulse& a, const signal_pulse& b)
{
    return a.fwhm_s == b.fwhm_s && a.center_s == b.center_s && a.scale == b.scale;
}

bool operator==(const control_pulse& a, const control_pulse& b)
{
    return a.amp == b.amp && a.shape == b.shape && a.center_s == b.center_s &&
           a.width_s == b.width_s && a.edge_s == b.edge_s;
}

bool operator==(const pulse_schedule& a, const pulse_schedule& b)
{
    return a.signal == b.signal && a.control1 == b.control1 && a.control2 == b.control2 &&
           a.storage_time_s == b.storage_time_s && a.tail_s == b.tail_s &&
           a.retrieval_start_s == b.retrieval_start_s;
}

pulse_schedule nv_schedule()
{
    pulse_schedule s;
    s.signal.fwhm_s = 17.30e-9;
    s.signal.center_s = 60e-9;
    s.control1.amp = 4.3;
    s.control1.center_s = 55e-9;
    s.control1.width_s = 70e-9;
    s.control2.amp = 6.0;
    s.control2.width_s = 40e-9;
    s.storage_time_s = 455e-9;
    s.tail_s = 10e-9;
    return s;
}

pulse_schedule nv_reduced_schedule()
{
    pulse_schedule s = nv_schedule();
    s.control2.amp = 1.5;
    return s;
}

pulse_schedule rb_schedule()
{
    pulse_schedule s = nv_schedule();
    s.control1.amp = 0.05;
    s.control2.amp = 0.1;
    s.storage_time_s = 91e-9;
    return s;
}

} // namespace qmem
