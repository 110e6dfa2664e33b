#pragma once

// Physical description of an ensemble Lambda-memory: level scheme, coupling
// tables, cavity, relaxation and ensemble size, plus the built-in presets.

#include <qmem/error.hpp>

#include <Eigen/Dense>

#include <complex>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace qmem {

using cplx = std::complex<double>;
using cmatrix = Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic>;
using bmatrix = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>;

namespace constants {
inline constexpr double c_light = 299792458.0;          // m/s
inline constexpr double hbar = 1.054571817e-34;          // J s
inline constexpr double eps0 = 8.8541878128e-12;         // F/m
inline constexpr double two_pi = 2.0 * std::numbers::pi;
} // namespace constants

/// How printed frequency tables are turned into rates.
/// angular: the printed number is used as rad/s directly.
/// cyclic:  the printed number is a frequency in Hz and is multiplied by 2 pi.
enum class table_units { angular, cyclic };

double unit_factor(table_units u);
std::string to_string(table_units u);
table_units table_units_from_string(const std::string& s);

/// Ground levels are always labelled 1, 2, 3. Level 2 carries the
/// population, 2-9 is the signal transition, 3-9 the control transition.
struct level_scheme
{
    static constexpr int n_ground = 3;

    std::vector<int> excited;       ///< excited labels, ascending energy
    std::vector<double> detuning;   ///< Delta_k = omega_k2 - omega_c [rad/s]
    int resonant_level = 9;         ///< excited level with Delta = 0
    double delta = 0.0;             ///< omega_22 - omega_33 [rad/s]
    double omega22 = 0.0;           ///< e_22/hbar relative to level 1 [rad/s]
    double omega33 = 0.0;           ///< e_33/hbar relative to level 1 [rad/s]

    int n_excited() const { return static_cast<int>(excited.size()); }
    /// Column index of an excited label, or -1.
    int excited_index(int label) const;
    double detuning_of(int label) const;
    void validate() const;
};

/// G and Omega are n_ground x n_excited, row j-1, column excited_index(k).
struct coupling_set
{
    cmatrix G;
    cmatrix Omega;
    bmatrix desired_G;
    bmatrix desired_Omega;
};

struct cavity_params
{
    double wavelength_m = 637e-9;   ///< vacuum wavelength
    double refractive_index = 1.0;
    double Q = 1e4;
    double volume_scale = 1.0;
    std::optional<double> volume_m3;    ///< overrides volume_scale * (lambda/n)^3
    std::optional<double> dipole_cm;    ///< d_z, needed only for g_c

    // derived by derive_cavity()
    double omega_c = 0.0;   ///< [rad/s]
    double kappa = 0.0;     ///< amplitude decay, da/dt = -kappa a + ... [rad/s]
    double volume = 0.0;    ///< [m^3]
    double g_c = 0.0;       ///< [rad/s], 0 when no dipole is given
};

struct relaxation_params
{
    double gamma_s = 0.0;       ///< spin inhomogeneous broadening [rad/s]
    double gamma_e = 0.0;       ///< optical inhomogeneous broadening [rad/s]
    double temperature_K = 0.0;
    double gamma0 = 0.0;        ///< [rad/s]
    double c_coeff = 0.0;       ///< [K^-5]
    double r_rate = 0.0;        ///< [1/s]
    double gamma_r = 0.0;       ///< radiative decay, cooperativity only [rad/s]

    /// Optical decoherence gamma_d(T) = Gamma(T)/2.
    double gamma_d() const;
    /// gamma_d + gamma_e, the total optical coherence damping.
    double optical_damping() const { return gamma_d() + gamma_e; }
};

enum class population_closure { fixed, dynamic };

struct ensemble_params
{
    int n_emitters = 1;
    population_closure closure = population_closure::fixed;
};

struct system_spec
{
    std::string name;
    level_scheme levels;
    coupling_set couplings;
    cavity_params cavity;
    relaxation_params relaxation;
    ensemble_params ensemble;
    bool include_level1 = true;
    /// (j, k) optical coherences held at zero throughout the evolution.
    std::vector<std::pair<int, int>> frozen;
    table_units units = table_units::angular;
    std::string provenance;

    /// Coupling by labels; zero for absent levels or a disabled level-1 row.
    cplx G(int j, int k) const;
    cplx Omega(int j, int k) const;
    bool is_frozen(int j, int k) const;

    /// Throws invalid_input naming the offending field.
    void validate() const;
};

bool operator==(const level_scheme& a, const level_scheme& b);
bool operator==(const coupling_set& a, const coupling_set& b);
bool operator==(const cavity_params& a, const cavity_params& b);
bool operator==(const relaxation_params& a, const relaxation_params& b);
bool operator==(const ensemble_params& a, const ensemble_params& b);
bool operator==(const system_spec& a, const system_spec& b);

struct linewidth_result
{
    double gamma;           ///< Gamma(T) [rad/s]
    bool above_validity;    ///< T > 100 K, formula extrapolated
};

/// Gamma(T) = gamma0 + c r T^5.
linewidth_result homogeneous_linewidth(const relaxation_params& relax);

struct cavity_result
{
    cavity_params cavity;
    double cooperativity;   ///< g_c^2 N / (kappa gamma_r); NaN if undefined
};

/// Fills omega_c, kappa = omega_c/(2Q), V and g_c.
cavity_result derive_cavity(cavity_params cav, int n_emitters, double gamma_r);

/// G_jk = g_c gx(j,k) and Omega_jk = d_z gy(j,k) E2 / (2 hbar).
coupling_set couplings_from_dipoles(const cmatrix& gx, const cmatrix& gy,
                                    double d_z, double e_field, double g_c,
                                    const bmatrix& desired_G,
                                    const bmatrix& desired_Omega);

/// Full 9-level NV ensemble with every tabulated coupling.
system_spec nv_preset(table_units units = table_units::angular);

/// NV reduced to levels {2, 3, 8, 9}: only G29, Omega39, G38, Omega28 and
/// sigma_38 frozen at zero.
system_spec nv_simplified_preset(table_units units = table_units::angular);

/// Cavity-based Rb-87 D1 memory, levels {g, s, e', e} = {2, 3, 8, 9}.
system_spec rb_preset();

/// Copy with every coupling outside the desired masks set to zero.
system_spec desired_only(const system_spec& spec);

} // namespace qmem
