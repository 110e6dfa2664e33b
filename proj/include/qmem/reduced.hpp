#pragma once

// Adiabatically eliminated 4-level model: one equation for the spin
// coherence sigma_32 with eight separately weighted terms, the two-mode
// amplification oracle, and the amplification-channel audit.
//
// Levels: ground 2 (populated) and 3, excited 9 (desired, signal G29 and
// control Omega39) and one spectator k (G3k, Omega2k, detuning Delta_k).
// With Gamma = gamma_d + gamma_e, alpha = Gamma kappa + |G29|^2 N and
// ctrl(t) = amp1 env1 + amp2 env2 multiplying every Omega:
//
//   d/dt s32 = - gamma_s s32                                         (2)
//              - sqrt(2k) N G29* W39 a_in / alpha                    (3)
//              - kappa |W39|^2 s32 / alpha                           (4)
//              - |G29|^2 |beta|^2 s32 / (Gamma alpha^2)              (5)
//              - |G38|^2 |beta|^2 s32 / ((Gamma - i D8) alpha^2)     (6)
//              - e^{2i delta t} sqrt(2k) N Gamma G38 W28* a_in
//                  / ((Gamma - i D8) alpha)                          (7)
//              + e^{2i delta t} N G38 W28* W39 G29* s23
//                  / ((Gamma - i D8) alpha)                          (8)
//
// with W = ctrl(t) Omega, s23 = conj(s32) and
// beta = sqrt(2k) Gamma a_in - W39 G29* s23. Term 1 is the derivative itself.
//
// Output reconstruction: eliminating sigma_29 from
//   0 = -Gamma s29 + i a G29 N + i W39 s23
// and a from
//   0 = -kappa a + sqrt(2k) a_in + i G29* s29
// gives a = beta / alpha, and a_out = sqrt(2k) a - a_in.

#include <qmem/dynamics.hpp>
#include <qmem/model.hpp>
#include <qmem/pulses.hpp>

#include <array>
#include <string>
#include <utility>
#include <vector>

namespace qmem {

struct reduced_params
{
    double N = 1.0;
    cplx G29, Omega39;      ///< desired signal and control couplings
    cplx G38, Omega28;      ///< spectator couplings
    double Delta8 = 0.0;    ///< spectator detuning
    double delta = 0.0;
    double kappa = 0.0;
    double gamma_d = 0.0;
    double gamma_e = 0.0;
    double gamma_s = 0.0;

    double Gamma() const { return gamma_d + gamma_e; }
    double alpha() const { return Gamma() * kappa + std::norm(G29) * N; }
};

/// Desired Lambda from the system's coupling masks; spectator level `k` (default 8).
/// Throws invalid_input when the masks do not define exactly one desired G
/// and one desired Omega sharing an excited level.
reduced_params reduced_params_from_spec(const system_spec& spec, int spectator = 8);

/// Per-term weights for terms 1..8 (index 0 unused). Term 1 is the time
/// derivative and always has weight 1.
struct term_mask
{
    std::array<double, 9> weight{0, 1, 1, 1, 1, 1, 1, 1, 1};

    static term_mask all();
    /// Exactly the listed terms at weight 1; term 1 is implied.
    static term_mask only(std::initializer_list<int> terms);
    static term_mask only(const std::vector<int>& terms);
    bool enabled(int term) const { return weight.at(term) != 0.0; }
    void set(int term, double w);
    std::vector<int> enabled_terms() const;
};

/// d/dt sigma_32 for the given state, control factor and input amplitude.
/// Throws singular_parameters when alpha = 0.
cplx reduced_rhs(cplx s32, double t, const reduced_params& p, const term_mask& mask,
                 double ctrl, cplx a_in);

/// Intracavity amplitude a = beta / alpha.
cplx reduced_cavity(cplx s32, const reduced_params& p, double ctrl, cplx a_in);

struct reduced_run
{
    memory_run run;                      ///< trajectory holds sigma_32
    std::vector<std::string> warnings;   ///< adiabatic-validity heuristics
};

/// Heuristic checks of the adiabatic elimination for this schedule.
std::vector<std::string> adiabatic_warnings(const reduced_params& p,
                                            const pulse_schedule& schedule);

/// Integrates the reduced equation through storage and retrieval.
reduced_run reduced_protocol(const reduced_params& p, const pulse_schedule& schedule,
                             const term_mask& mask, const run_options& opt = {},
                             bool zero_input = false);

/// Integrates the reduced equation from sigma_32(t0) under a constant
/// control factor and no input; samples at `grid`.
std::vector<cplx> integrate_reduced(const reduced_params& p, const term_mask& mask,
                                    double ctrl, cplx s32_0, std::span<const double> grid,
                                    double rtol = 1e-10, double atol = 1e-14);

/// b = N G29* Omega39 G38 Omega28* / alpha, at unit control factor.
cplx amplification_rate(const reduced_params& p);

/// lambda_pm = i delta +- sqrt(|b|^2 / (Gamma^2 + Delta8^2) - delta^2).
std::pair<cplx, cplx> growth_exponents(cplx b, double Gamma, double Delta8, double delta);

/// Closed-form sigma_32(t) of the {1, 8} system under constant control
/// factor `ctrl`, from sigma_32(0) = s0.
cplx two_level_oracle(const reduced_params& p, double t, cplx s0, double ctrl = 1.0);

struct audit_channel
{
    int k;
    cplx b;
    cplx lambda_plus;
    cplx lambda_minus;
    double ratio;       ///< |G3k Omega2k| / |Delta_k|
    bool flagged;       ///< Re lambda_plus * duration > 1
};

struct audit_options
{
    double ctrl = 1.0;          ///< control factor applied to every Omega
    double duration_s = 1e-6;   ///< protocol duration used for flagging
};

struct audit_report
{
    std::vector<audit_channel> channels;   ///< ranked, most dangerous first
    int signal_level;                       ///< desired excited level
};

/// Scores every spectator excited level with a nonzero b. Throws
/// invalid_input when the system has no desired Lambda.
audit_report audit(const system_spec& spec, const audit_options& opt = {});

} // namespace qmem
