#include <qmem/reduced.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace qmem {

namespace {

constexpr cplx I{0.0, 1.0};

struct lambda_labels
{
    int ground_signal;      // j of the desired G (2)
    int ground_control;     // j of the desired Omega (3)
    int excited;            // shared excited level (9)
};

lambda_labels find_lambda(const system_spec& spec)
{
    const auto& C = spec.couplings;
    std::vector<std::pair<int, int>> g, o;
    for (int j = 0; j < C.G.rows(); ++j)
        for (int c = 0; c < C.G.cols(); ++c) {
            if (C.desired_G(j, c)) g.emplace_back(j + 1, spec.levels.excited[c]);
            if (C.desired_Omega(j, c)) o.emplace_back(j + 1, spec.levels.excited[c]);
        }
    if (g.size() != 1 || o.size() != 1)
        throw invalid_input("couplings: need exactly one desired G and one desired Omega "
                            "to define the Lambda system");
    if (g[0].second != o[0].second || g[0].first == o[0].first)
        throw invalid_input("couplings: desired G and Omega must share the excited level "
                            "and use different ground levels");
    return {g[0].first, o[0].first, g[0].second};
}

double fastest_reduced_rate(const reduced_params& p, const pulse_schedule& s)
{
    double r = 2.0 * p.delta;
    r = std::max(r, constants::two_pi / s.signal.fwhm_s);
    for (const control_pulse* c : {&s.control1, &s.control2}) {
        if (c->shape == control_shape::flat_top && c->edge_s > 0.0)
            r = std::max(r, constants::two_pi / c->edge_s);
        else
            r = std::max(r, constants::two_pi / c->width_s);
    }
    return r;
}

} // namespace

reduced_params reduced_params_from_spec(const system_spec& spec, int spectator)
{
    spec.validate();
    const auto lam = find_lambda(spec);
    if (spec.levels.excited_index(spectator) < 0)
        throw invalid_input("reduced: spectator level " + std::to_string(spectator) +
                            " is not an excited level");
    if (spectator == lam.excited)
        throw invalid_input("reduced: spectator level must differ from the signal level");
    reduced_params p;
    p.N = spec.ensemble.n_emitters;
    p.G29 = spec.G(lam.ground_signal, lam.excited);
    p.Omega39 = spec.Omega(lam.ground_control, lam.excited);
    p.G38 = spec.G(lam.ground_control, spectator);
    p.Omega28 = spec.Omega(lam.ground_signal, spectator);
    p.Delta8 = spec.levels.detuning_of(spectator);
    p.delta = spec.levels.delta;
    p.kappa = spec.cavity.kappa;
    p.gamma_d = spec.relaxation.gamma_d();
    p.gamma_e = spec.relaxation.gamma_e;
    p.gamma_s = spec.relaxation.gamma_s;
    return p;
}

term_mask term_mask::all() { return {}; }

term_mask term_mask::only(std::initializer_list<int> terms)
{
    return only(std::vector<int>(terms));
}

term_mask term_mask::only(const std::vector<int>& terms)
{
    term_mask m;
    m.weight.fill(0.0);
    m.weight[1] = 1.0;
    for (int t : terms) m.set(t, 1.0);
    return m;
}

void term_mask::set(int term, double w)
{
    if (term < 1 || term > 8)
        throw invalid_input("term_mask: term index " + std::to_string(term) +
                            " outside 1..8");
    if (term == 1 && w != 1.0)
        throw invalid_input("term_mask: term 1 is the time derivative and cannot be changed");
    if (!std::isfinite(w)) throw invalid_input("term_mask: non-finite weight");
    weight[term] = w;
}

std::vector<int> term_mask::enabled_terms() const
{
    std::vector<int> out;
    for (int i = 1; i <= 8; ++i)
        if (enabled(i)) out.push_back(i);
    return out;
}

cplx reduced_cavity(cplx s32, const reduced_params& p, double ctrl, cplx a_in)
{
    const double alpha = p.alpha();
    if (alpha == 0.0) throw singular_parameters("reduced: alpha = Gamma kappa + |G29|^2 N is zero");
    const cplx beta = std::sqrt(2.0 * p.kappa) * p.Gamma() * a_in -
                      ctrl * p.Omega39 * std::conj(p.G29) * std::conj(s32);
    return beta / alpha;
}

cplx reduced_rhs(cplx s32, double t, const reduced_params& p, const term_mask& m,
                 double ctrl, cplx a_in)
{
    const double alpha = p.alpha();
    if (alpha == 0.0) throw singular_parameters("reduced: alpha = Gamma kappa + |G29|^2 N is zero");
    const double G = p.Gamma();
    const double s2k = std::sqrt(2.0 * p.kappa);
    const cplx W39 = ctrl * p.Omega39;
    const cplx W28 = ctrl * p.Omega28;
    const cplx s23 = std::conj(s32);
    const cplx beta = s2k * G * a_in - W39 * std::conj(p.G29) * s23;
    const double bb = std::norm(beta);
    const cplx spectator = cplx{G, -p.Delta8};
    const cplx e2 = std::polar(1.0, 2.0 * p.delta * t);
    const auto& w = m.weight;

    cplx d{};
    if (w[2] != 0.0) d -= w[2] * p.gamma_s * s32;
    if (w[3] != 0.0) d -= w[3] * s2k * p.N * std::conj(p.G29) * W39 * a_in / alpha;
    if (w[4] != 0.0) d -= w[4] * p.kappa * std::norm(W39) * s32 / alpha;
    if (w[5] != 0.0) d -= w[5] * std::norm(p.G29) * bb * s32 / (G * alpha * alpha);
    if (w[6] != 0.0) d -= w[6] * std::norm(p.G38) * bb * s32 / (spectator * alpha * alpha);
    if (w[7] != 0.0)
        d -= w[7] * e2 * s2k * p.N * G * p.G38 * std::conj(W28) * a_in / (spectator * alpha);
    if (w[8] != 0.0)
        d += w[8] * e2 * p.N * p.G38 * std::conj(W28) * W39 * std::conj(p.G29) * s23 /
             (spectator * alpha);
    return d;
}

std::vector<std::string> adiabatic_warnings(const reduced_params& p,
                                            const pulse_schedule& s)
{
    std::vector<std::string> out;
    const double amp = std::max(std::abs(s.control1.amp), std::abs(s.control2.amp));
    const double rabi = std::max(amp * std::abs(p.Omega39), std::abs(p.G29) * std::sqrt(p.N));
    if (rabi > p.kappa / 2.0) {
        std::ostringstream os;
        os << "adiabatic elimination questionable: max(amp |Omega39|, |G29| sqrt(N)) = " << rabi
           << " rad/s exceeds kappa/2 = " << p.kappa / 2.0 << " rad/s";
        out.push_back(os.str());
    }
    double bandwidth = 0.0;
    for (const control_pulse* c : {&s.control1, &s.control2}) {
        const double tc = (c->shape == control_shape::flat_top && c->edge_s > 0.0)
                              ? c->edge_s
                              : c->width_s;
        bandwidth = std::max(bandwidth, 1.0 / tc);
    }
    if (bandwidth > p.Gamma() / 2.0) {
        std::ostringstream os;
        os << "adiabatic elimination questionable: control bandwidth " << bandwidth
           << " 1/s exceeds Gamma/2 = " << p.Gamma() / 2.0 << " rad/s";
        out.push_back(os.str());
    }
    return out;
}

reduced_run reduced_protocol(const reduced_params& p, const pulse_schedule& schedule,
                             const term_mask& mask, const run_options& opt, bool zero_input)
{
    schedule.validate();
    if (p.alpha() == 0.0)
        throw singular_parameters("reduced: alpha = Gamma kappa + |G29|^2 N is zero");
    pulse_schedule sched = schedule;
    if (zero_input) sched.signal.scale = 0.0;
    const control_pulse c2 = sched.retrieval_pulse();
    auto ctrl = [&](double t) { return sched.control1.value(t) + c2.value(t); };

    const double cap = constants::two_pi / fastest_reduced_rate(p, sched) / 20.0 *
                       std::min(1.0, opt.step_cap_scale);
    const double t_end = sched.t_end();
    const double dt_req = opt.dt > 0.0 ? std::min(opt.dt, cap) : cap;
    const auto n_int = static_cast<std::size_t>(std::ceil(t_end / dt_req));
    const double dt = t_end / static_cast<double>(n_int);

    reduced_run out;
    out.warnings = adiabatic_warnings(p, sched);
    memory_run& run = out.run;
    run.is_noise_run = zero_input;
    run.retrieval_start = sched.retrieval_start();
    run.max_step = cap;
    run.state_labels = {"sigma32"};
    run.t.resize(n_int + 1);
    for (std::size_t i = 0; i <= n_int; ++i) run.t[i] = dt * static_cast<double>(i);
    run.t.back() = t_end;
    run.a_in.resize(run.t.size());
    run.a_out.resize(run.t.size());
    if (opt.record_trajectory) run.trajectory.resize(run.t.size());

    const double s2k = std::sqrt(2.0 * p.kappa);
    auto f = [&](double t, const cvector& y, cvector& dy) {
        dy[0] = reduced_rhs(y[0], t, p, mask, ctrl(t), sched.signal.amplitude(t));
    };
    auto sample = [&](std::size_t i, double t, const cvector& y) {
        const cplx ain = sched.signal.amplitude(t);
        run.a_in[i] = ain;
        run.a_out[i] = s2k * reduced_cavity(y[0], p, ctrl(t), ain) - ain;
        if (opt.record_trajectory) run.trajectory[i] = y;
    };
    integrator_options iopt;
    iopt.rtol = opt.rtol;
    iopt.atol = opt.atol;
    iopt.max_step = cap;
    iopt.initial_step = cap;
    integrate(f, cvector::Zero(1), run.t, iopt, sample, &run.stats);
    return out;
}

std::vector<cplx> integrate_reduced(const reduced_params& p, const term_mask& mask,
                                    double ctrl, cplx s32_0, std::span<const double> grid,
                                    double rtol, double atol)
{
    std::vector<cplx> out(grid.size());
    auto f = [&](double t, const cvector& y, cvector& dy) {
        dy[0] = reduced_rhs(y[0], t, p, mask, ctrl, 0.0);
    };
    integrator_options iopt;
    iopt.rtol = rtol;
    iopt.atol = atol;
    if (p.delta > 0.0) iopt.max_step = constants::two_pi / (2.0 * p.delta) / 20.0;
    cvector y0(1);
    y0[0] = s32_0;
    integrate(f, y0, grid, iopt, [&](std::size_t i, double, const cvector& y) { out[i] = y[0]; });
    return out;
}

cplx amplification_rate(const reduced_params& p)
{
    const double alpha = p.alpha();
    if (!(alpha > 0.0))
        throw singular_parameters("amplification_rate: alpha = Gamma kappa + |G29|^2 N is zero");
    return p.N * std::conj(p.G29) * p.Omega39 * p.G38 * std::conj(p.Omega28) / alpha;
}

std::pair<cplx, cplx> growth_exponents(cplx b, double Gamma, double Delta8, double delta)
{
    const double g2 = Gamma * Gamma + Delta8 * Delta8;
    if (delta == 0.0) {
        const double r = std::abs(b) / std::sqrt(g2);
        return {r, -r};
    }
    const double rad = std::norm(b) / g2 - delta * delta;
    // principal root; a zero radicand gives a purely oscillatory pair
    const cplx s = std::sqrt(cplx{rad, 0.0});
    const cplx id{0.0, delta};
    const cplx p = id + s, m = id - s;
    // the smaller root cancels when |b|^2 / (Gamma^2 + Delta8^2) << delta^2;
    // recover it from the product p m = -|b|^2 / (Gamma^2 + Delta8^2)
    const double k2 = std::norm(b) / g2;
    if (k2 == 0.0) return {p, m};
    if (std::abs(p) >= std::abs(m)) return {p, -k2 / p};
    return {-k2 / m, m};
}

cplx two_level_oracle(const reduced_params& p, double t, cplx s0, double ctrl)
{
    // s32 = e^{i delta t} w with w' = -i delta w + c conj(w). The 2x2 system
    // M = [[-i delta, c], [conj c, i delta]] satisfies M^2 = (|c|^2 - delta^2) I.
    const cplx c = ctrl * ctrl * amplification_rate(p) / cplx{p.Gamma(), -p.Delta8};
    const cplx s = std::sqrt(cplx{std::norm(c) - p.delta * p.delta, 0.0});
    const cplx st = s * t;
    const cplx ch = std::cosh(st);
    const cplx shc = std::abs(st) < 1e-8 ? cplx{t, 0.0} * (1.0 + st * st / 6.0)
                                          : std::sinh(st) / s;
    const cplx w = (ch - I * p.delta * shc) * s0 + c * shc * std::conj(s0);
    return std::polar(1.0, p.delta * t) * w;
}

audit_report audit(const system_spec& spec, const audit_options& opt)
{
    spec.validate();
    const auto lam = find_lambda(spec);
    audit_report rep;
    rep.signal_level = lam.excited;
    for (int k : spec.levels.excited) {
        if (k == lam.excited) continue;
        reduced_params p = reduced_params_from_spec(spec, k);
        p.Omega39 *= opt.ctrl;
        p.Omega28 *= opt.ctrl;
        const cplx b = amplification_rate(p);
        if (b == cplx{}) continue;
        const auto [lp, lm] = growth_exponents(b, p.Gamma(), p.Delta8, p.delta);
        audit_channel ch;
        ch.k = k;
        ch.b = b;
        ch.lambda_plus = lp;
        ch.lambda_minus = lm;
        const double num = std::abs(p.G38 * p.Omega28);
        ch.ratio = p.Delta8 != 0.0 ? num / std::abs(p.Delta8)
                                   : std::numeric_limits<double>::infinity();
        ch.flagged = lp.real() * opt.duration_s > 1.0;
        rep.channels.push_back(ch);
    }
    std::stable_sort(rep.channels.begin(), rep.channels.end(),
                     [](const audit_channel& a, const audit_channel& b) {
                         if (a.lambda_plus.real() != b.lambda_plus.real())
                             return a.lambda_plus.real() > b.lambda_plus.real();
                         return std::abs(a.b) > std::abs(b.b);
                     });
    return rep;
}

} // namespace qmem
