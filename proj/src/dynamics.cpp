#include <qmem/dynamics.hpp>

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <memory>
#include <ostream>
#include <set>

namespace qmem {

state_layout::state_layout(const system_spec& spec)
    : m_excited(spec.levels.excited), m_cols(spec.levels.n_excited())
{
    m_labels.push_back("a");
    int next = 1;
    m_g23 = next++;
    m_labels.push_back("sigma23");
    if (spec.include_level1) {
        m_g21 = next++;
        m_labels.push_back("sigma21");
        m_g31 = next++;
        m_labels.push_back("sigma31");
    }
    m_optical.assign(level_scheme::n_ground * m_cols, -1);
    for (int j = 1; j <= level_scheme::n_ground; ++j) {
        if (j == 1 && !spec.include_level1) continue;
        for (int c = 0; c < m_cols; ++c) {
            const int k = m_excited[c];
            if (spec.is_frozen(j, k)) continue;
            m_optical[(j - 1) * m_cols + c] = next++;
            m_labels.push_back("sigma" + std::to_string(j) + std::to_string(k));
            ++m_n_optical;
        }
    }
    m_size = next;
}

int state_layout::ground(int j, int jp) const
{
    if (j == 2 && jp == 3) return m_g23;
    if (j == 2 && jp == 1) return m_g21;
    if (j == 3 && jp == 1) return m_g31;
    return -1;
}

int state_layout::optical(int j, int k) const
{
    auto it = std::find(m_excited.begin(), m_excited.end(), k);
    if (it == m_excited.end() || j < 1 || j > level_scheme::n_ground) return -1;
    return m_optical[(j - 1) * m_cols + static_cast<int>(it - m_excited.begin())];
}

equations_of_motion::equations_of_motion(const system_spec& spec, const pulse_schedule& schedule)
    : m_spec(spec), m_schedule(schedule), m_ctrl2(schedule.retrieval_pulse()),
      m_layout((spec.validate(), schedule.validate(), spec)),
      m_cols(spec.levels.n_excited()), m_kappa(spec.cavity.kappa),
      m_sqrt2kappa(std::sqrt(2.0 * spec.cavity.kappa)), m_gamma_s(spec.relaxation.gamma_s),
      m_gamma_o(spec.relaxation.optical_damping()),
      m_N(static_cast<double>(spec.ensemble.n_emitters)), m_level1(spec.include_level1)
{
    m_G.resize(3 * m_cols);
    m_Omega.resize(3 * m_cols);
    for (int j = 1; j <= 3; ++j) {
        for (int c = 0; c < m_cols; ++c) {
            const int k = spec.levels.excited[c];
            m_G[(j - 1) * m_cols + c] = spec.G(j, k);
            m_Omega[(j - 1) * m_cols + c] = spec.Omega(j, k);
        }
    }
    m_decay.resize(m_cols);
    for (int c = 0; c < m_cols; ++c)
        m_decay[c] = cplx{-m_gamma_o, -spec.levels.detuning[c]};
}

double equations_of_motion::fastest_rate() const
{
    const auto& L = m_spec.levels;
    double r = std::max(m_kappa, 2.0 * L.delta);
    if (m_level1) r = std::max({r, std::abs(L.omega22), std::abs(L.omega33)});
    for (double d : L.detuning) r = std::max(r, std::abs(d));
    return r;
}

void equations_of_motion::operator()(double t, const cvector& y, cvector& dy) const
{
    const auto& L = m_spec.levels;
    const double ctrl = m_schedule.control1.value(t) + m_ctrl2.value(t);
    const cplx a_in = m_schedule.signal.amplitude(t);
    const cplx a = y[state_layout::cavity];

    // rotating-frame phases attached to G_jk and Omega_jk, rows j = 1, 2, 3
    const cplx e_delta = std::polar(1.0, L.delta * t);
    cplx phase_G[3] = {1.0, 1.0, e_delta};
    cplx phase_O[3] = {1.0, std::conj(e_delta), 1.0};
    if (m_level1) {
        phase_G[0] = std::polar(1.0, L.omega22 * t);
        phase_O[0] = std::polar(1.0, L.omega33 * t);
    }

    // ground-ground matrix S(j, j') with populations from the closure
    const int i23 = m_layout.ground(2, 3);
    const int i21 = m_layout.ground(2, 1);
    const int i31 = m_layout.ground(3, 1);
    const cplx s23 = y[i23];
    const cplx s21 = i21 >= 0 ? y[i21] : cplx{};
    const cplx s31 = i31 >= 0 ? y[i31] : cplx{};
    const cplx S[3][3] = {{0.0, std::conj(s21), std::conj(s31)},
                          {s21, m_N, s23},
                          {s31, std::conj(s23), 0.0}};

    const int j_first = m_level1 ? 0 : 1;
    cplx da = -m_kappa * a + m_sqrt2kappa * a_in;
    cplx ds23{}, ds21{}, ds31{};

    for (int c = 0; c < m_cols; ++c) {
        cplx D[3];
        cplx sig[3];
        for (int j = 0; j < 3; ++j) {
            const int idx = j * m_cols + c;
            D[j] = a * m_G[idx] * phase_G[j] + ctrl * m_Omega[idx] * phase_O[j];
            const int slot = m_layout.optical_at(j + 1, c);
            sig[j] = slot >= 0 ? y[slot] : cplx{};
        }
        for (int j = j_first; j < 3; ++j) {
            const int slot = m_layout.optical_at(j + 1, c);
            if (slot < 0) continue;
            cplx drive{};
            for (int jp = j_first; jp < 3; ++jp) drive += D[jp] * S[j][jp];
            dy[slot] = m_decay[c] * sig[j] + cplx{0.0, 1.0} * drive;
            da += cplx{0.0, 1.0} * std::conj(m_G[j * m_cols + c] * phase_G[j]) * sig[j];
        }
        // d sigma_{jj'} = ... - i [D_jk conj(sigma_j'k) - conj(D_j'k) sigma_jk]
        ds23 += D[1] * std::conj(sig[2]) - std::conj(D[2]) * sig[1];
        if (m_level1) {
            ds21 += D[1] * std::conj(sig[0]) - std::conj(D[0]) * sig[1];
            ds31 += D[2] * std::conj(sig[0]) - std::conj(D[0]) * sig[2];
        }
    }
    const cplx minus_i{0.0, -1.0};
    dy[state_layout::cavity] = da;
    dy[i23] = -m_gamma_s * s23 + minus_i * ds23;
    if (i21 >= 0) dy[i21] = -m_gamma_s * s21 + minus_i * ds21;
    if (i31 >= 0) dy[i31] = -m_gamma_s * s31 + minus_i * ds31;
}

rhs_fn build_rhs(const system_spec& spec, const pulse_schedule& schedule)
{
    auto eom = std::make_shared<equations_of_motion>(spec, schedule);
    return [eom](double t, const cvector& y, cvector& dy) { (*eom)(t, y, dy); };
}

namespace {

memory_run integrate_cycle(const system_spec& spec, const pulse_schedule& schedule,
                           const run_options& opt, bool noise)
{
    pulse_schedule sched = schedule;
    if (noise) sched.signal.scale = 0.0;
    const equations_of_motion eom(spec, sched);

    const double period = constants::two_pi / eom.fastest_rate();
    const double cap = period / 20.0 * std::min(1.0, opt.step_cap_scale);
    const double t_end = sched.t_end();
    const double dt_req = opt.dt > 0.0 ? std::min(opt.dt, cap) : cap;
    const auto n_int = static_cast<std::size_t>(std::ceil(t_end / dt_req));
    const double dt = t_end / static_cast<double>(n_int);

    memory_run run;
    run.is_noise_run = noise;
    run.retrieval_start = sched.retrieval_start();
    run.max_step = cap;
    run.state_labels = eom.layout().labels();
    run.t.resize(n_int + 1);
    for (std::size_t i = 0; i <= n_int; ++i) run.t[i] = dt * static_cast<double>(i);
    run.t.back() = t_end;
    run.a_in.resize(run.t.size());
    run.a_out.resize(run.t.size());
    if (opt.record_trajectory) run.trajectory.resize(run.t.size());

    const double s2k = std::sqrt(2.0 * eom.kappa());
    auto sample = [&](std::size_t i, double t, const cvector& y) {
        const cplx ain = sched.signal.amplitude(t);
        run.a_in[i] = ain;
        run.a_out[i] = s2k * y[state_layout::cavity] - ain;
        if (opt.record_trajectory) run.trajectory[i] = y;
    };

    integrator_options iopt;
    iopt.rtol = opt.rtol;
    iopt.atol = opt.atol;
    iopt.max_step = cap;
    iopt.initial_step = cap;
    const cvector y0 = cvector::Zero(eom.layout().size());
    auto f = [&eom](double t, const cvector& y, cvector& dy) { eom(t, y, dy); };
    integrate(f, y0, run.t, iopt, sample, &run.stats);
    return run;
}

} // namespace

memory_run run_protocol(const system_spec& spec, const pulse_schedule& schedule,
                        const run_options& opt)
{
    return integrate_cycle(spec, schedule, opt, false);
}

memory_run noise_run(const system_spec& spec, const pulse_schedule& schedule,
                     const run_options& opt)
{
    return integrate_cycle(spec, schedule, opt, true);
}

void write_csv(const memory_run& run, std::ostream& os, bool with_states)
{
    const bool states = with_states && !run.trajectory.empty();
    os << "t_s,re_a_out,im_a_out,abs2_a_out";
    if (states)
        for (const auto& l : run.state_labels) os << ",re_" << l << ",im_" << l;
    os << '\n';
    os << std::setprecision(17);
    for (std::size_t i = 0; i < run.t.size(); ++i) {
        const cplx v = run.a_out[i];
        os << run.t[i] << ',' << v.real() << ',' << v.imag() << ',' << std::norm(v);
        if (states)
            for (Eigen::Index s = 0; s < run.trajectory[i].size(); ++s)
                os << ',' << run.trajectory[i][s].real() << ',' << run.trajectory[i][s].imag();
        os << '\n';
    }
}

bool noise_free_structure(const system_spec& spec)
{
    // Propagate "possibly nonzero" through every coupling that does not
    // need a cavity amplitude. The zero-input run stays at zero iff none of
    // the reachable optical coherences radiates into the cavity.
    const auto& L = spec.levels;
    const int cols = L.n_excited();
    const int jmin = spec.include_level1 ? 1 : 2;
    auto live = [&](int j, int k) { return !spec.is_frozen(j, k); };

    bool opt_nz[4][32] = {};
    bool gr_nz[4][4] = {};   // ground coherences, symmetric
    gr_nz[2][2] = true;      // population of level 2
    bool changed = true;
    while (changed) {
        changed = false;
        for (int c = 0; c < cols; ++c) {
            const int k = L.excited[c];
            for (int j = jmin; j <= 3; ++j) {
                if (!live(j, k) || opt_nz[j][c]) continue;
                for (int jp = jmin; jp <= 3; ++jp) {
                    if (gr_nz[j][jp] && spec.Omega(jp, k) != cplx{}) {
                        opt_nz[j][c] = changed = true;
                        break;
                    }
                }
            }
        }
        for (int j = jmin; j <= 3; ++j) {
            for (int jp = jmin; jp <= 3; ++jp) {
                if (j == jp || gr_nz[j][jp]) continue;
                for (int c = 0; c < cols; ++c) {
                    const int k = L.excited[c];
                    if ((opt_nz[jp][c] && spec.Omega(j, k) != cplx{}) ||
                        (opt_nz[j][c] && spec.Omega(jp, k) != cplx{})) {
                        gr_nz[j][jp] = gr_nz[jp][j] = changed = true;
                        break;
                    }
                }
            }
        }
    }
    for (int c = 0; c < cols; ++c)
        for (int j = jmin; j <= 3; ++j)
            if (opt_nz[j][c] && spec.G(j, L.excited[c]) != cplx{}) return false;
    return true;
}

} // namespace qmem
