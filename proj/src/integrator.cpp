#include <qmem/integrator.hpp>

#include <algorithm>
#include <cmath>
#include <sstream>

#if defined(__SSE__) || defined(__x86_64__)
#include <xmmintrin.h>
#define QMEM_HAVE_MXCSR 1
#endif

namespace qmem {

namespace {

// Dormand-Prince 5(4) tableau with Hairer's continuous extension.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                 a64 = 49.0 / 176, a65 = -5103.0 / 18656;
constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192,
                 a75 = -2187.0 / 6784, a76 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                 e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
constexpr double d1 = -12715105075.0 / 11282082432, d3 = 87487479700.0 / 32700410799,
                 d4 = -10690763975.0 / 1880347072, d5 = 701980252875.0 / 199316789632,
                 d6 = -1453857185.0 / 822651844, d7 = 69997945.0 / 29380423;

// Decaying coherences underflow into subnormals during long idle intervals,
// which slows every arithmetic op by orders of magnitude; flush them to zero
// for the duration of one integration.
class flush_denormals
{
public:
    flush_denormals()
    {
#ifdef QMEM_HAVE_MXCSR
        m_saved = _mm_getcsr();
        _mm_setcsr(m_saved | 0x8040u);
#endif
    }
    ~flush_denormals()
    {
#ifdef QMEM_HAVE_MXCSR
        _mm_setcsr(m_saved);
#endif
    }
    flush_denormals(const flush_denormals&) = delete;
    flush_denormals& operator=(const flush_denormals&) = delete;

private:
    unsigned int m_saved = 0;
};

bool all_finite(const cvector& y)
{
    for (Eigen::Index i = 0; i < y.size(); ++i)
        if (!std::isfinite(y[i].real()) || !std::isfinite(y[i].imag())) return false;
    return true;
}

double scaled_rms(const cvector& e, const cvector& y0, const cvector& y1,
                  double rtol, double atol)
{
    if (e.size() == 0) return 0.0;
    double acc = 0.0;
    for (Eigen::Index i = 0; i < e.size(); ++i) {
        const double sc = atol + rtol * std::max(std::abs(y0[i]), std::abs(y1[i]));
        const double r = std::abs(e[i]) / sc;
        acc += r * r;
    }
    return std::sqrt(acc / static_cast<double>(e.size()));
}

double initial_step(const rhs_fn& f, double t0, const cvector& y0, const cvector& f0,
                    double span, const integrator_options& opt, integrator_stats& st)
{
    auto norm = [&](const cvector& v) {
        double acc = 0.0;
        for (Eigen::Index i = 0; i < v.size(); ++i) {
            const double sc = opt.atol + opt.rtol * std::abs(y0[i]);
            acc += std::norm(v[i]) / (sc * sc);
        }
        return v.size() ? std::sqrt(acc / static_cast<double>(v.size())) : 0.0;
    };
    const double dn0 = norm(y0);
    const double dn1 = norm(f0);
    double h0 = (dn0 < 1e-5 || dn1 < 1e-5) ? 1e-6 * span : 0.01 * dn0 / dn1;
    h0 = std::min({h0, span, opt.max_step});
    cvector y1 = y0 + h0 * f0;
    cvector f1(y0.size());
    f(t0 + h0, y1, f1);
    ++st.rhs_evaluations;
    const double dn2 = norm(f1 - f0) / h0;
    const double der = std::max(dn1, dn2);
    const double h1 = der <= 1e-15 ? std::max(1e-6 * span, h0 * 1e-3)
                                   : std::pow(0.01 / der, 1.0 / 5.0);
    return std::min({100.0 * h0, h1, span, opt.max_step});
}

} // namespace

cvector integrate(const rhs_fn& f, cvector y, std::span<const double> grid,
                  const integrator_options& opt, const sample_fn& sample,
                  integrator_stats* stats_out)
{
    if (!(opt.rtol > 0.0) || !(opt.atol > 0.0))
        throw invalid_input("integrator: rtol and atol must be > 0");
    if (!(opt.max_step > 0.0))
        throw invalid_input("integrator: max_step must be > 0");
    if (grid.empty()) throw invalid_input("integrator: empty output grid");
    if (!std::is_sorted(grid.begin(), grid.end()))
        throw invalid_input("integrator: output grid must be ascending");

    const flush_denormals ftz;
    integrator_stats st;
    const double t_start = grid.front();
    const double t_stop = grid.back();
    std::size_t next = 0;
    if (sample) sample(next, t_start, y);
    ++next;
    if (t_stop <= t_start) {
        if (stats_out) *stats_out = st;
        return y;
    }

    const Eigen::Index n = y.size();
    cvector k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), tmp(n), y1(n), err(n);
    cvector r2(n), r3(n), r4(n), r5(n), yi(n);

    double t = t_start;
    f(t, y, k1);
    ++st.rhs_evaluations;
    const double span = t_stop - t_start;
    double h = opt.initial_step > 0.0 ? std::min(opt.initial_step, opt.max_step)
                                      : initial_step(f, t, y, k1, span, opt, st);

    // growth tracking for divergence diagnostics
    double ref_t = t;
    double ref_log = std::log(std::max(y.norm(), 1e-300));
    double last_t = t;
    double last_log = ref_log;
    long long since_ref = 0;

    double err_prev = 1e-4;
    bool last_rejected = false;
    int nonfinite_trials = 0;

    while (t < t_stop) {
        if (st.steps + st.rejected >= opt.max_steps) {
            std::ostringstream os;
            os << "integrator: step budget exhausted at t = " << t << " s";
            throw stiffness_error(os.str(), t);
        }
        h = std::min(h, opt.max_step);
        bool last_step = false;
        if (t + h >= t_stop || t + 1.01 * h >= t_stop) {
            h = t_stop - t;
            last_step = true;
        }
        if (h <= 16.0 * std::numeric_limits<double>::epsilon() * std::max(std::abs(t), 1e-30)) {
            std::ostringstream os;
            if (nonfinite_trials > 0) {
                // shrinking could not get past non-finite values
                const double growth =
                    last_t > ref_t ? (last_log - ref_log) / (last_t - ref_t) : 0.0;
                os << "integrator: state diverged at t = " << t
                   << " s (estimated growth exponent " << growth << " 1/s)";
                throw divergence_error(os.str(), t, growth);
            }
            os << "integrator: step size underflow at t = " << t
               << " s (problem too stiff for the explicit scheme)";
            throw stiffness_error(os.str(), t);
        }

        tmp = y + h * (a21 * k1);
        f(t + c2 * h, tmp, k2);
        tmp = y + h * (a31 * k1 + a32 * k2);
        f(t + c3 * h, tmp, k3);
        tmp = y + h * (a41 * k1 + a42 * k2 + a43 * k3);
        f(t + c4 * h, tmp, k4);
        tmp = y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4);
        f(t + c5 * h, tmp, k5);
        tmp = y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
        f(t + h, tmp, k6);
        y1 = y + h * (a71 * k1 + a73 * k3 + a74 * k4 + a75 * k5 + a76 * k6);
        const double t_new = last_step ? t_stop : t + h;
        f(t_new, y1, k7);
        st.rhs_evaluations += 6;

        if (!all_finite(y1) || !all_finite(k7)) {
            if (++nonfinite_trials > 40) {
                const double growth =
                    last_t > ref_t ? (last_log - ref_log) / (last_t - ref_t) : 0.0;
                std::ostringstream os;
                os << "integrator: state diverged at t = " << t
                   << " s (estimated growth exponent " << growth << " 1/s)";
                throw divergence_error(os.str(), t, growth);
            }
            ++st.rejected;
            h *= 0.1;
            last_rejected = true;
            continue;
        }
        nonfinite_trials = 0;

        err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
        const double en = scaled_rms(err, y, y1, opt.rtol, opt.atol);

        if (en <= 1.0) {
            // dense output coefficients
            r2 = y1 - y;
            r3 = h * k1 - r2;
            r4 = r2 - h * k7 - r3;
            r5 = h * (d1 * k1 + d3 * k3 + d4 * k4 + d5 * k5 + d6 * k6 + d7 * k7);
            while (next < grid.size() && grid[next] <= t_new) {
                const double tg = grid[next];
                if (tg >= t_new) {
                    if (sample) sample(next, tg, y1);
                } else {
                    const double th = (tg - t) / h;
                    const double th1 = 1.0 - th;
                    yi = y + th * (r2 + th1 * (r3 + th * (r4 + th1 * r5)));
                    if (sample) sample(next, tg, yi);
                }
                ++next;
            }

            ++st.steps;
            t = t_new;
            y.swap(y1);
            k1.swap(k7);

            last_t = t;
            last_log = std::log(std::max(y.norm(), 1e-300));
            if (last_log > 690.0) {
                const double growth = (last_log - ref_log) / std::max(last_t - ref_t, 1e-300);
                std::ostringstream os;
                os << "integrator: state norm overflow at t = " << t
                   << " s (estimated growth exponent " << growth << " 1/s)";
                throw divergence_error(os.str(), t, growth);
            }
            if (++since_ref >= 2000) {
                ref_t = last_t;
                ref_log = last_log;
                since_ref = 0;
            }

            // PI step-size controller
            const double e = std::max(en, 1e-10);
            double fac = 0.9 * std::pow(e, -0.7 / 5.0) * std::pow(err_prev, 0.4 / 5.0);
            fac = std::clamp(fac, 0.2, last_rejected ? 1.0 : 10.0);
            h *= fac;
            err_prev = e;
            last_rejected = false;
        } else {
            ++st.rejected;
            const double fac = std::max(0.2, 0.9 * std::pow(en, -1.0 / 5.0));
            h *= std::isfinite(fac) ? fac : 0.2;
            last_rejected = true;
        }
    }
    // grid points at t_stop not yet emitted (rounding)
    while (next < grid.size()) {
        if (sample) sample(next, grid[next], y);
        ++next;
    }
    if (stats_out) *stats_out = st;
    return y;
}

} // namespace qmem
