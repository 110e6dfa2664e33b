#include <qmem/model.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>

namespace qmem {

double unit_factor(table_units u)
{
    return u == table_units::cyclic ? constants::two_pi : 1.0;
}

std::string to_string(table_units u)
{
    return u == table_units::cyclic ? "cyclic" : "angular";
}

table_units table_units_from_string(const std::string& s)
{
    if (s == "angular") return table_units::angular;
    if (s == "cyclic") return table_units::cyclic;
    throw invalid_input("table_units: expected 'angular' or 'cyclic', got '" + s + "'");
}

int level_scheme::excited_index(int label) const
{
    auto it = std::find(excited.begin(), excited.end(), label);
    return it == excited.end() ? -1 : static_cast<int>(it - excited.begin());
}

double level_scheme::detuning_of(int label) const
{
    int i = excited_index(label);
    if (i < 0)
        throw invalid_input("levels: no excited level " + std::to_string(label));
    return detuning[i];
}

void level_scheme::validate() const
{
    if (excited.empty())
        throw invalid_input("levels.excited: at least one excited level required");
    if (detuning.size() != excited.size())
        throw invalid_input("levels.detuning_rad_per_s: expected " +
                            std::to_string(excited.size()) + " entries");
    std::set<int> seen;
    for (int k : excited) {
        if (k <= n_ground)
            throw invalid_input("levels.excited: label " + std::to_string(k) +
                                " collides with a ground level");
        if (!seen.insert(k).second)
            throw invalid_input("levels.excited: duplicate label " + std::to_string(k));
    }
    int r = excited_index(resonant_level);
    if (r < 0)
        throw invalid_input("levels.resonant_level: not among the excited levels");
    if (detuning[r] != 0.0)
        throw invalid_input("levels.detuning_rad_per_s: resonant level must have zero detuning");
    if (!(delta >= 0.0))
        throw invalid_input("levels.delta_rad_per_s: must be >= 0");
    for (double d : detuning)
        if (!std::isfinite(d))
            throw invalid_input("levels.detuning_rad_per_s: non-finite entry");
}

double relaxation_params::gamma_d() const
{
    return homogeneous_linewidth(*this).gamma / 2.0;
}

cplx system_spec::G(int j, int k) const
{
    if (j == 1 && !include_level1) return {};
    int c = levels.excited_index(k);
    if (c < 0 || j < 1 || j > level_scheme::n_ground) return {};
    return couplings.G(j - 1, c);
}

cplx system_spec::Omega(int j, int k) const
{
    if (j == 1 && !include_level1) return {};
    int c = levels.excited_index(k);
    if (c < 0 || j < 1 || j > level_scheme::n_ground) return {};
    return couplings.Omega(j - 1, c);
}

bool system_spec::is_frozen(int j, int k) const
{
    return std::find(frozen.begin(), frozen.end(), std::make_pair(j, k)) != frozen.end();
}

void system_spec::validate() const
{
    levels.validate();
    const auto rows = level_scheme::n_ground;
    const auto cols = levels.n_excited();
    auto check = [&](const auto& m, const char* key) {
        if (m.rows() != rows || m.cols() != cols) {
            std::ostringstream os;
            os << key << ": expected " << rows << "x" << cols << ", got "
               << m.rows() << "x" << m.cols();
            throw invalid_input(os.str());
        }
    };
    check(couplings.G, "couplings.G");
    check(couplings.Omega, "couplings.Omega");
    check(couplings.desired_G, "couplings.desired_G");
    check(couplings.desired_Omega, "couplings.desired_Omega");
    for (Eigen::Index i = 0; i < couplings.G.size(); ++i) {
        if (!std::isfinite(couplings.G(i).real()) || !std::isfinite(couplings.G(i).imag()) ||
            !std::isfinite(couplings.Omega(i).real()) || !std::isfinite(couplings.Omega(i).imag()))
            throw invalid_input("couplings: non-finite entry");
    }
    if (!(cavity.Q > 0.0)) throw invalid_input("cavity.Q: must be > 0");
    if (!(cavity.kappa > 0.0)) throw invalid_input("cavity.kappa_rad_per_s: must be > 0");
    const auto& r = relaxation;
    for (auto [v, key] : {std::pair{r.gamma_s, "relaxation.gamma_s_rad_per_s"},
                          std::pair{r.gamma_e, "relaxation.gamma_e_rad_per_s"},
                          std::pair{r.gamma0, "relaxation.gamma0_rad_per_s"},
                          std::pair{r.c_coeff, "relaxation.c_per_K5"},
                          std::pair{r.r_rate, "relaxation.r_per_s"},
                          std::pair{r.gamma_r, "relaxation.gamma_r_rad_per_s"},
                          std::pair{r.temperature_K, "relaxation.temperature_K"}}) {
        if (!(v >= 0.0)) throw invalid_input(std::string(key) + ": must be >= 0");
    }
    if (ensemble.n_emitters < 1)
        throw invalid_input("ensemble.n_emitters: must be >= 1");
    if (ensemble.closure != population_closure::fixed)
        throw invalid_input("ensemble.closure: only 'fixed' is implemented");
    for (auto [j, k] : frozen) {
        if (j < 1 || j > rows || levels.excited_index(k) < 0)
            throw invalid_input("frozen: (" + std::to_string(j) + "," +
                                std::to_string(k) + ") is not an optical coherence");
    }
}

bool operator==(const level_scheme& a, const level_scheme& b)
{
    return a.excited == b.excited && a.detuning == b.detuning &&
           a.resonant_level == b.resonant_level && a.delta == b.delta &&
           a.omega22 == b.omega22 && a.omega33 == b.omega33;
}

bool operator==(const coupling_set& a, const coupling_set& b)
{
    auto same = [](const auto& x, const auto& y) {
        return x.rows() == y.rows() && x.cols() == y.cols() && x == y;
    };
    return same(a.G, b.G) && same(a.Omega, b.Omega) &&
           same(a.desired_G, b.desired_G) && same(a.desired_Omega, b.desired_Omega);
}

bool operator==(const cavity_params& a, const cavity_params& b)
{
    return a.wavelength_m == b.wavelength_m && a.refractive_index == b.refractive_index &&
           a.Q == b.Q && a.volume_scale == b.volume_scale && a.volume_m3 == b.volume_m3 &&
           a.dipole_cm == b.dipole_cm && a.omega_c == b.omega_c && a.kappa == b.kappa &&
           a.volume == b.volume && a.g_c == b.g_c;
}

bool operator==(const relaxation_params& a, const relaxation_params& b)
{
    return a.gamma_s == b.gamma_s && a.gamma_e == b.gamma_e &&
           a.temperature_K == b.temperature_K && a.gamma0 == b.gamma0 &&
           a.c_coeff == b.c_coeff && a.r_rate == b.r_rate && a.gamma_r == b.gamma_r;
}

bool operator==(const ensemble_params& a, const ensemble_params& b)
{
    return a.n_emitters == b.n_emitters && a.closure == b.closure;
}

bool operator==(const system_spec& a, const system_spec& b)
{
    return a.name == b.name && a.levels == b.levels && a.couplings == b.couplings &&
           a.cavity == b.cavity && a.relaxation == b.relaxation &&
           a.ensemble == b.ensemble && a.include_level1 == b.include_level1 &&
           a.frozen == b.frozen && a.units == b.units && a.provenance == b.provenance;
}

linewidth_result homogeneous_linewidth(const relaxation_params& relax)
{
    const double T = relax.temperature_K;
    if (!(T >= 0.0))
        throw invalid_input("relaxation.temperature_K: must be >= 0");
    const double T5 = T * T * T * T * T;
    return {relax.gamma0 + relax.c_coeff * relax.r_rate * T5, T > 100.0};
}

cavity_result derive_cavity(cavity_params cav, int n_emitters, double gamma_r)
{
    if (!(cav.Q > 0.0)) throw invalid_input("cavity.Q: must be > 0");
    if (!(cav.wavelength_m > 0.0)) throw invalid_input("cavity.wavelength_m: must be > 0");
    if (!(cav.refractive_index > 0.0))
        throw invalid_input("cavity.refractive_index: must be > 0");
    if (cav.volume_m3) {
        if (!(*cav.volume_m3 > 0.0)) throw invalid_input("cavity.volume_m3: must be > 0");
    } else if (!(cav.volume_scale > 0.0)) {
        throw invalid_input("cavity.volume_scale: must be > 0");
    }

    const double n = cav.refractive_index;
    const double lambda_medium = cav.wavelength_m / n;
    cav.omega_c = constants::two_pi * constants::c_light / cav.wavelength_m;
    cav.kappa = cav.omega_c / (2.0 * cav.Q);
    cav.volume = cav.volume_m3 ? *cav.volume_m3
                               : cav.volume_scale * lambda_medium * lambda_medium * lambda_medium;
    const double eps = n * n * constants::eps0;
    cav.g_c = cav.dipole_cm
                  ? *cav.dipole_cm * std::sqrt(cav.omega_c / (2.0 * cav.volume * constants::hbar * eps))
                  : 0.0;

    double coop = std::numeric_limits<double>::quiet_NaN();
    if (gamma_r > 0.0 && cav.g_c > 0.0)
        coop = cav.g_c * cav.g_c * n_emitters / (cav.kappa * gamma_r);
    return {cav, coop};
}

coupling_set couplings_from_dipoles(const cmatrix& gx, const cmatrix& gy, double d_z,
                                    double e_field, double g_c, const bmatrix& desired_G,
                                    const bmatrix& desired_Omega)
{
    if (gx.rows() != gy.rows() || gx.cols() != gy.cols())
        throw invalid_input("couplings: g_x and g_y projections differ in shape");
    if (desired_G.rows() != gx.rows() || desired_G.cols() != gx.cols() ||
        desired_Omega.rows() != gx.rows() || desired_Omega.cols() != gx.cols())
        throw invalid_input("couplings: desired masks do not match projection shape");
    coupling_set out;
    out.G = gx * g_c;
    out.Omega = gy * (d_z * e_field / (2.0 * constants::hbar));
    out.desired_G = desired_G;
    out.desired_Omega = desired_Omega;
    return out;
}

namespace {

constexpr double Hz = 1.0;
constexpr double kHz = 1e3;
constexpr double MHz = 1e6;
constexpr double GHz = 1e9;
constexpr cplx I{0.0, 1.0};

// Control field amplitude E2 for the Rb preset; amp1/amp2 multiply it.
constexpr double rb_control_field_V_per_m = 4.5e6;

// Tabulated NV couplings, rows j = 1..3, columns k = 4..9.
cmatrix nv_signal_table()
{
    cmatrix g(3, 6);
    g << 2.51 * I * Hz, -14.93 * I * Hz, 2.23 * I * MHz, 3.66 * GHz, 4.21 * kHz, -0.214 * GHz,
        -26.78 * I * kHz, -97.19 * I * kHz, 92.86 * I * MHz, 0.214 * GHz, 5.35 * MHz, 3.66 * GHz,
        -18.34 * I * MHz, -66.75 * I * MHz, -0.135 * I * MHz, -0.316 * MHz, 3.67 * GHz, -5.34 * MHz;
    return g;
}

cmatrix nv_control_table()
{
    cmatrix o(3, 6);
    o << 6.77 * I * GHz, -1.64 * I * GHz, 3.34 * kHz, -3.19 * Hz, 4.02 * MHz, 24.5 * Hz,
        -1.64 * I * GHz, -6.77 * I * GHz, 10.3 * I * MHz, -21.2 * kHz, -0.131 * GHz, -0.258 * MHz,
        2.41 * I * MHz, 9.97 * I * GHz, 6.97 * I * GHz, -14.5 * MHz, 0.194 * MHz, -0.176 * GHz;
    return o;
}

bmatrix single_entry_mask(int rows, int cols, int r, int c)
{
    bmatrix m = bmatrix::Constant(rows, cols, false);
    m(r, c) = true;
    return m;
}

} // namespace

system_spec nv_preset(table_units units)
{
    const double f = unit_factor(units);
    system_spec s;
    s.name = "nv";
    s.units = units;

    auto& L = s.levels;
    L.excited = {4, 5, 6, 7, 8, 9};
    // Ey branch sits ~240 GHz below the Ex branch (2 x 120 GHz excited-state
    // strain shift); inside each branch the levels are a few GHz apart.
    L.detuning = {-242.0 * GHz * f, -240.4 * GHz * f, -238.6 * GHz * f,
                  -4.7 * GHz * f, -1.6 * GHz * f, 0.0};
    L.resonant_level = 9;
    // ground splitting 2 x 3.4 MHz (transverse strain), zero-field D = 2.87 GHz
    L.delta = 6.8 * MHz * f;
    L.omega22 = (2.87 * GHz + 3.4 * MHz) * f;
    L.omega33 = L.omega22 - L.delta;

    s.couplings.G = nv_signal_table() * f;
    s.couplings.Omega = nv_control_table() * f;
    s.couplings.desired_G = single_entry_mask(3, 6, 1, 5);       // G_29
    s.couplings.desired_Omega = single_entry_mask(3, 6, 2, 5);   // Omega_39

    cavity_params cav;
    cav.wavelength_m = 637e-9;
    cav.refractive_index = 2.4;
    cav.Q = 7100.0;
    cav.volume_scale = 2.4;

    auto& R = s.relaxation;
    R.gamma_s = 0.0;
    R.gamma_e = 1.0 * GHz * f;
    R.temperature_K = 2.0;
    R.gamma0 = constants::two_pi * 16.2 * MHz;
    R.c_coeff = 9.2e-7;
    R.r_rate = 1.0 / 12.5e-9;
    R.gamma_r = 1.0 / 12.5e-9;

    s.ensemble.n_emitters = 155;
    s.cavity = derive_cavity(cav, s.ensemble.n_emitters, R.gamma_r).cavity;
    s.include_level1 = true;
    s.provenance =
        "NV ensemble, 9 levels. Field shifts: E_x(gs) = 3.4 MHz, E_x(es) = 120 GHz, "
        "E_y(gs) = E_y(es) = 0, B_z(gs) = 9.9 kHz, B_z = 10 kHz (recorded, not interpreted). "
        "Coupling table values interpreted as " + to_string(units) + " rates.";
    return s;
}

system_spec nv_simplified_preset(table_units units)
{
    const system_spec full = nv_preset(units);
    system_spec s = full;
    s.name = "nv4";
    s.levels.excited = {8, 9};
    s.levels.detuning = {full.levels.detuning_of(8), 0.0};
    s.include_level1 = false;

    s.couplings.G = cmatrix::Zero(3, 2);
    s.couplings.Omega = cmatrix::Zero(3, 2);
    s.couplings.G(1, 1) = full.G(2, 9);
    s.couplings.Omega(2, 1) = full.Omega(3, 9);
    s.couplings.G(2, 0) = full.G(3, 8);
    s.couplings.Omega(1, 0) = full.Omega(2, 8);
    s.couplings.desired_G = single_entry_mask(3, 2, 1, 1);
    s.couplings.desired_Omega = single_entry_mask(3, 2, 2, 1);
    s.frozen = {{3, 8}};
    s.provenance = "NV reduced to levels {2,3,8,9}; only G29, Omega39, G38, Omega28; "
                   "sigma_38 held at zero. " + full.provenance;
    return s;
}

system_spec rb_preset()
{
    system_spec s;
    s.name = "rb";
    s.units = table_units::angular;

    // |2> = |g> = 5S1/2 F=1, |3> = |s> = 5S1/2 F=2,
    // |8> = |e'> = 5P1/2 F'=1, |9> = |e> = 5P1/2 F'=2
    auto& L = s.levels;
    L.excited = {8, 9};
    L.detuning = {-constants::two_pi * 816.656 * MHz, 0.0};
    L.resonant_level = 9;
    L.delta = constants::two_pi * 6834.682610904 * MHz;
    L.omega22 = 0.0;
    L.omega33 = -L.delta;

    cavity_params cav;
    cav.wavelength_m = 794.97e-9;
    cav.refractive_index = 1.0;
    cav.Q = 7100.0;
    cav.volume_scale = 1.5;
    cav.dipole_cm = 2.537e-29;

    auto& R = s.relaxation;
    R.gamma0 = constants::two_pi * 5.746 * MHz;
    R.gamma_r = constants::two_pi * 5.746 * MHz;

    s.ensemble.n_emitters = 250;
    s.cavity = derive_cavity(cav, s.ensemble.n_emitters, R.gamma_r).cavity;

    // D1 dipole factors g(F, F'); rows j = 1..3 (level 1 unused), cols k = 8, 9
    const double g11 = std::sqrt(1.0 / 6.0);
    const double g12 = std::sqrt(5.0 / 6.0);
    const double g21 = std::sqrt(5.0 / 6.0);
    const double g22 = std::sqrt(5.0 / 6.0);
    cmatrix gx = cmatrix::Zero(3, 2);
    cmatrix gy = cmatrix::Zero(3, 2);
    gx(1, 1) = g12;     // G_29: F=1 -> F'=2
    gx(2, 0) = g21;     // G_38: F=2 -> F'=1
    gy(2, 1) = g22;     // Omega_39: F=2 -> F'=2
    gy(1, 0) = g11;     // Omega_28: F=1 -> F'=1
    const double control_field = rb_control_field_V_per_m;
    s.couplings = couplings_from_dipoles(gx, gy, *cav.dipole_cm, control_field, s.cavity.g_c,
                                         single_entry_mask(3, 2, 1, 1),
                                         single_entry_mask(3, 2, 2, 1));
    s.include_level1 = false;
    s.provenance = "Rb-87 D1 line, cavity memory. Unwanted couplings other than G38 and "
                   "Omega28 set to zero. Control field E2 = " +
                   std::to_string(control_field) + " V/m.";
    return s;
}

system_spec desired_only(const system_spec& spec)
{
    system_spec s = spec;
    auto& C = s.couplings;
    for (Eigen::Index i = 0; i < C.G.size(); ++i) {
        if (!C.desired_G(i)) C.G(i) = 0.0;
        if (!C.desired_Omega(i)) C.Omega(i) = 0.0;
    }
    s.name = spec.name + "-desired";
    return s;
}

} // namespace qmem
