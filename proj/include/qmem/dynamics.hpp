#pragma once

// Semi-classical equations of motion for the ensemble + cavity, and the
// store/hold/retrieve protocol built on them.

#include <qmem/integrator.hpp>
#include <qmem/model.hpp>
#include <qmem/pulses.hpp>

#include <iosfwd>
#include <string>
#include <vector>

namespace qmem {

/// Maps dynamical variables onto state-vector slots.
///
/// Slot 0 is the cavity amplitude a. Then the ground coherences sigma_23,
/// sigma_21, sigma_31 (the last two only with the level-1 block), then the
/// optical coherences sigma_jk for every retained (ground j, excited k).
class state_layout
{
public:
    explicit state_layout(const system_spec& spec);

    static constexpr int cavity = 0;

    int size() const { return m_size; }
    /// Slot of sigma_{j j'} for (2,3), (2,1), (3,1); -1 when absent.
    int ground(int j, int jp) const;
    /// Slot of sigma_{jk}; -1 when absent or frozen.
    int optical(int j, int k) const;
    /// Optical slot by ground label and excited column.
    int optical_at(int j, int col) const { return m_optical[(j - 1) * m_cols + col]; }
    const std::vector<std::string>& labels() const { return m_labels; }
    int n_optical() const { return m_n_optical; }

private:
    std::vector<int> m_excited;
    int m_cols = 0;
    int m_size = 0;
    int m_n_optical = 0;
    int m_g23 = -1, m_g21 = -1, m_g31 = -1;
    std::vector<int> m_optical;
    std::vector<std::string> m_labels;
};

/// Right-hand side of the coherence and cavity equations under the fixed
/// population closure sigma_22 = N, all other populations zero.
class equations_of_motion
{
public:
    equations_of_motion(const system_spec& spec, const pulse_schedule& schedule);

    void operator()(double t, const cvector& y, cvector& dy) const;

    const state_layout& layout() const { return m_layout; }
    /// max(|omega22|, |omega33|, 2 delta, |Delta_k|, kappa) over retained terms.
    double fastest_rate() const;
    double kappa() const { return m_kappa; }
    const pulse_schedule& schedule() const { return m_schedule; }

private:
    system_spec m_spec;
    pulse_schedule m_schedule;
    control_pulse m_ctrl2;
    state_layout m_layout;
    int m_cols;
    double m_kappa;
    double m_sqrt2kappa;
    double m_gamma_s;
    double m_gamma_o;
    double m_N;
    std::vector<cplx> m_G;      // row-major (j-1, col)
    std::vector<cplx> m_Omega;
    std::vector<cplx> m_decay;  // -(i Delta_k + gamma_o)
    bool m_level1;
};

rhs_fn build_rhs(const system_spec& spec, const pulse_schedule& schedule);

struct run_options
{
    double rtol = 1e-8;
    double atol = 1e-10;
    /// Output grid spacing; 0 uses the step cap (fastest period / 20).
    double dt = 0.0;
    /// Extra factor applied to the automatic step cap (<= 1 refines).
    double step_cap_scale = 1.0;
    bool record_trajectory = false;
};

struct memory_run
{
    std::vector<double> t;
    std::vector<cplx> a_in;
    std::vector<cplx> a_out;
    std::vector<cvector> trajectory;        ///< empty unless requested
    std::vector<std::string> state_labels;
    bool is_noise_run = false;
    double retrieval_start = 0.0;
    double max_step = 0.0;
    integrator_stats stats;

    double dt() const { return t.size() > 1 ? t[1] - t[0] : 0.0; }
};

/// Integrates the full cycle from the zero state: signal + control1,
/// storage interval, control2.
memory_run run_protocol(const system_spec& spec, const pulse_schedule& schedule,
                        const run_options& opt = {});

/// Same protocol with a_in identically zero.
memory_run noise_run(const system_spec& spec, const pulse_schedule& schedule,
                     const run_options& opt = {});

/// Columns t_s, re_a_out, im_a_out, abs2_a_out [, re_/im_ state columns].
void write_csv(const memory_run& run, std::ostream& os, bool with_states = false);

/// True when no Omega-driven coherence feeds the cavity without a cavity
/// amplitude already present, so the zero-input run stays exactly zero.
bool noise_free_structure(const system_spec& spec);

} // namespace qmem
