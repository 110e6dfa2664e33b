#include <qmem/config.hpp>
#include <qmem/metrics.hpp>
#include <qmem/reduced.hpp>

#include <doctest.h>

#include <Eigen/Eigenvalues>

#include <cmath>
#include <random>
#include <vector>

using namespace qmem;

namespace {

const cplx I{0.0, 1.0};

reduced_params random_params(std::mt19937_64& rng)
{
    std::uniform_real_distribution<double> u(0.0, 1.0);
    auto phase = [&] { return std::polar(1.0, 6.283185307179586 * u(rng)); };
    reduced_params p;
    p.N = 50 + 250 * u(rng);
    p.G29 = (0.5e9 + 3e9 * u(rng)) * phase();
    p.Omega39 = (0.05e9 + 0.3e9 * u(rng)) * phase();
    p.G38 = (0.5e9 + 3e9 * u(rng)) * phase();
    p.Omega28 = (0.02e9 + 0.2e9 * u(rng)) * phase();
    p.Delta8 = (u(rng) < 0.5 ? -1 : 1) * (1e9 + 4e9 * u(rng));
    p.delta = 2e7 * u(rng);
    p.kappa = 5e10 + 2e11 * u(rng);
    p.gamma_d = 5e7;
    p.gamma_e = 0.5e9 + u(rng) * 1e9;
    return p;
}

// sigma_32 = e^{i delta t} w, [w, conj w]' = M [w, conj w] with
// M = [[-i delta, K], [conj K, i delta]] and K = ctrl^2 b / (Gamma - i D8),
// propagated through an eigendecomposition of M.
cplx eigen_oracle(const reduced_params& p, double ctrl, cplx s0, double t)
{
    const cplx b = p.N * std::conj(p.G29) * p.Omega39 * p.G38 * std::conj(p.Omega28) /
                   (p.Gamma() * p.kappa + std::norm(p.G29) * p.N);
    const cplx K = ctrl * ctrl * b / cplx(p.Gamma(), -p.Delta8);
    Eigen::Matrix2cd M;
    M << -I * p.delta, K, std::conj(K), I * p.delta;
    Eigen::ComplexEigenSolver<Eigen::Matrix2cd> es(M);
    const Eigen::Matrix2cd V = es.eigenvectors();
    Eigen::Matrix2cd E = Eigen::Matrix2cd::Zero();
    E(0, 0) = std::exp(es.eigenvalues()[0] * t);
    E(1, 1) = std::exp(es.eigenvalues()[1] * t);
    Eigen::Vector2cd w0(s0, std::conj(s0));
    const Eigen::Vector2cd w = V * E * V.inverse() * w0;
    return std::exp(I * p.delta * t) * w[0];
}

std::vector<double> grid(double t_end, int n)
{
    std::vector<double> g(n + 1);
    for (int i = 0; i <= n; ++i) g[i] = t_end * i / n;
    return g;
}

} // namespace

TEST_SUITE("reduced")
{
    TEST_CASE("parameters of the simplified NV preset")
    {
        const auto s = nv_simplified_preset();
        const auto p = reduced_params_from_spec(s);
        CHECK(p.G29 == cplx(3.66e9, 0));
        CHECK(p.Omega39 == cplx(-0.176e9, 0));
        CHECK(p.G38 == cplx(3.67e9, 0));
        CHECK(p.Omega28 == cplx(-0.131e9, 0));
        CHECK(p.Delta8 == -1.6e9);
        CHECK(p.delta == 6.8e6);
        CHECK(p.N == 155);
        CHECK(p.kappa == doctest::Approx(s.cavity.kappa));
        CHECK(p.Gamma() == doctest::Approx(s.relaxation.optical_damping()));
        CHECK_THROWS_AS(reduced_params_from_spec(s, 7), invalid_input);
        CHECK_THROWS_AS(reduced_params_from_spec(s, 9), invalid_input);

        auto none = s;
        none.couplings.desired_G.setConstant(false);
        CHECK_THROWS_AS(reduced_params_from_spec(none), invalid_input);
    }

    TEST_CASE("each term matches its closed form and scales with its weight")
    {
        std::mt19937_64 rng(3);
        auto p = random_params(rng);
        p.gamma_s = 2e6;
        const double ctrl = 1.7, t = 123e-9;
        const cplx s32(0.3, -0.2), a_in(40.0, 15.0);
        const cplx s23 = std::conj(s32);
        const cplx W39 = ctrl * p.Omega39, W28 = ctrl * p.Omega28;
        const double G = p.Gamma(), k = p.kappa, N = p.N;
        const double al = G * k + std::norm(p.G29) * N;
        const cplx beta = std::sqrt(2 * k) * G * a_in - W39 * std::conj(p.G29) * s23;
        const cplx GD = cplx(G, -p.Delta8);
        const cplx e2 = std::exp(2.0 * I * p.delta * t);
        const cplx terms[9] = {
            0.0,
            0.0,
            -p.gamma_s * s32,
            -std::sqrt(2 * k) * N * std::conj(p.G29) * W39 * a_in / al,
            -k * std::norm(W39) * s32 / al,
            -std::norm(p.G29) * std::norm(beta) * s32 / (G * al * al),
            -std::norm(p.G38) * std::norm(beta) * s32 / (GD * al * al),
            -e2 * std::sqrt(2 * k) * N * G * p.G38 * std::conj(W28) * a_in / (GD * al),
            e2 * N * p.G38 * std::conj(W28) * W39 * std::conj(p.G29) * s23 / (GD * al)};
        cplx total = 0.0;
        for (int term = 2; term <= 8; ++term) {
            const cplx got = reduced_rhs(s32, t, p, term_mask::only({term}), ctrl, a_in);
            CHECK(std::abs(got - terms[term]) <= 1e-12 * std::abs(terms[term]));
            auto half = term_mask::only({term});
            half.set(term, 0.5);
            const cplx h = reduced_rhs(s32, t, p, half, ctrl, a_in);
            CHECK(std::abs(h - 0.5 * terms[term]) <= 1e-12 * std::abs(terms[term]));
            total += terms[term];
        }
        const cplx all = reduced_rhs(s32, t, p, term_mask::all(), ctrl, a_in);
        CHECK(std::abs(all - total) <= 1e-12 * std::abs(total));
        CHECK(reduced_rhs(s32, t, p, term_mask::only(std::vector<int>{}), ctrl, a_in) == 0.0);
    }

    TEST_CASE("term mask bookkeeping")
    {
        const auto m = term_mask::only({3, 8});
        CHECK(m.enabled_terms() == std::vector<int>{1, 3, 8});
        CHECK(term_mask::all().enabled_terms() == std::vector<int>{1, 2, 3, 4, 5, 6, 7, 8});
        term_mask x;
        CHECK_THROWS_AS(x.set(1, 0.0), invalid_input);
        CHECK_THROWS_AS(x.set(9, 1.0), invalid_input);
        CHECK_THROWS_AS(term_mask::only({0}), invalid_input);
    }

    TEST_CASE("cavity amplitude solves the two eliminated steady-state equations")
    {
        std::mt19937_64 rng(5);
        for (int n = 0; n < 10; ++n) {
            const auto p = random_params(rng);
            const double ctrl = 0.3 + n * 0.4;
            const cplx s32(0.1 * n, 0.05), a_in(3.0, -1.0 * n);
            // unknowns (sigma_29, a):
            //   0 = -Gamma s29 + i G29 N a + i W39 s23
            //   0 = i G29* s29 - kappa a + sqrt(2 kappa) a_in
            Eigen::Matrix2cd A;
            A << -p.Gamma(), I * p.G29 * p.N, I * std::conj(p.G29), -p.kappa;
            Eigen::Vector2cd rhs(-I * ctrl * p.Omega39 * std::conj(s32),
                                 -std::sqrt(2 * p.kappa) * a_in);
            const Eigen::Vector2cd x = A.partialPivLu().solve(rhs);
            const cplx a = reduced_cavity(s32, p, ctrl, a_in);
            CHECK(std::abs(a - x[1]) <= 1e-12 * std::abs(x[1]));
        }
    }

    TEST_CASE("alpha = 0 is singular")
    {
        reduced_params p;
        p.kappa = 0;
        p.G29 = 0;
        CHECK_THROWS_AS(reduced_rhs(0.1, 0, p, term_mask::all(), 1, 0), singular_parameters);
        CHECK_THROWS_AS(amplification_rate(p), singular_parameters);
    }

    TEST_CASE("{1,8} integration matches the eigendecomposition oracle")
    {
        std::mt19937_64 rng(17);
        const auto g = grid(500e-9, 50);
        for (int n = 0; n < 10; ++n) {
            const auto p = random_params(rng);
            const double ctrl = 0.5 + 1.5 * n / 9.0;
            const cplx s0(0.6, -0.8);
            const auto num = integrate_reduced(p, term_mask::only({8}), ctrl, s0, g);
            double worst = 0;
            for (std::size_t i = 0; i < g.size(); ++i) {
                const cplx ref = eigen_oracle(p, ctrl, s0, g[i]);
                worst = std::max(worst, std::abs(num[i] - ref) / std::abs(ref));
                const cplx closed = two_level_oracle(p, g[i], s0, ctrl);
                CHECK(std::abs(closed - ref) <= 1e-9 * std::abs(ref));
            }
            CHECK(worst <= 1e-6);
        }
    }

    TEST_CASE("closed form: b = 0 is constant, t = 0 is the identity")
    {
        std::mt19937_64 rng(19);
        auto p = random_params(rng);
        const cplx s0(0.2, 0.7);
        CHECK(two_level_oracle(p, 0.0, s0) == s0);
        p.G38 = 0;
        for (double t : {1e-9, 1e-7, 5e-7})
            CHECK(std::abs(two_level_oracle(p, t, s0) - s0) < 1e-14);
    }

    TEST_CASE("growth exponents: sum, characteristic polynomial, delta = 0")
    {
        std::mt19937_64 rng(23);
        for (int n = 0; n < 50; ++n) {
            const auto p = random_params(rng);
            const cplx b = amplification_rate(p);
            const auto [lp, lm] = growth_exponents(b, p.Gamma(), p.Delta8, p.delta);
            CHECK(std::abs(lp + lm - 2.0 * I * p.delta) <= 1e-12 * std::abs(lp));
            const double k2 = std::norm(b) / (p.Gamma() * p.Gamma() + p.Delta8 * p.Delta8);
            // lambda^2 - 2 i delta lambda - |K|^2 = 0
            for (cplx l : {lp, lm}) {
                const cplx poly = l * l - 2.0 * I * p.delta * l - k2;
                CHECK(std::abs(poly) <= 1e-12 * (std::norm(l) + k2));
            }
            CHECK(std::abs(lp * lm + k2) <= 1e-12 * k2);
            const auto [z, zm] = growth_exponents(b, p.Gamma(), p.Delta8, 0.0);
            CHECK(z.real() == std::abs(b) / std::sqrt(p.Gamma() * p.Gamma() + p.Delta8 * p.Delta8));
            CHECK(z.imag() == 0.0);
            CHECK(zm == -z);
        }
        // zero radicand
        const auto [a, c] = growth_exponents(cplx(3.0, 4.0), 0.0, 1.0, 5.0);
        CHECK(a.real() == 0.0);
        CHECK(c.real() == 0.0);
    }

    TEST_CASE("Re lambda_plus is non-increasing in |Delta8| and delta")
    {
        const cplx b(2e16, 1e16);
        const double G = 1.05e9;
        double prev = INFINITY;
        for (double d8 = 0; d8 <= 2e10; d8 += 1e9) {
            const double r = growth_exponents(b, G, d8, 6.8e6).first.real();
            CHECK(r <= prev);
            prev = r;
        }
        prev = INFINITY;
        for (double d = 0; d <= 5e7; d += 2.5e6) {
            const double r = growth_exponents(b, G, 1.6e9, d).first.real();
            CHECK(r <= prev);
            prev = r;
        }
    }

    TEST_CASE("|b| ignores conjugation of a factor; b scales as 2 alpha(N) / alpha(2N)")
    {
        std::mt19937_64 rng(29);
        const auto p = random_params(rng);
        for (int f = 0; f < 4; ++f) {
            auto q = p;
            if (f == 0) q.G29 = std::conj(q.G29);
            if (f == 1) q.Omega39 = std::conj(q.Omega39);
            if (f == 2) q.G38 = std::conj(q.G38);
            if (f == 3) q.Omega28 = std::conj(q.Omega28);
            CHECK(std::abs(amplification_rate(q)) ==
                  doctest::Approx(std::abs(amplification_rate(p))).epsilon(1e-14));
        }
        auto q = p;
        q.N = 2 * p.N;
        const cplx ratio = amplification_rate(q) / amplification_rate(p);
        CHECK(std::abs(ratio - 2 * p.alpha() / q.alpha()) <= 1e-14);
    }

    TEST_CASE("product symmetry of the {1,8} system")
    {
        std::mt19937_64 rng(31);
        const auto p = random_params(rng);
        const auto g = grid(500e-9, 25);
        const cplx s0(0.5, 0.5);
        const auto ref = integrate_reduced(p, term_mask::only({8}), 1.2, s0, g);
        for (double x : {0.1, 0.5, 2.0}) {
            auto q = p;
            q.G38 *= x;
            q.Omega28 /= x;
            const auto got = integrate_reduced(q, term_mask::only({8}), 1.2, s0, g);
            for (std::size_t i = 0; i < g.size(); ++i)
                CHECK(std::abs(std::abs(got[i]) - std::abs(ref[i])) <= 1e-10 * std::abs(ref[i]));
        }
    }

    TEST_CASE("term 8 drives the efficiency up while F stays at one")
    {
        const run_config c = preset_config("nv4-adiabatic");
        const auto p = reduced_params_from_spec(c.system);
        double prev = -1;
        for (double w = 0; w <= 1.0; w += 0.125) {
            auto m = term_mask::all();
            m.set(8, w);
            const double e = efficiency(reduced_protocol(p, c.schedule, m).run, c.window);
            CHECK(e > prev);
            prev = e;
            const auto noise = reduced_protocol(p, c.schedule, m, {}, true).run;
            CHECK(apparent_fidelity(noise).fidelity == 1.0);
        }
    }

    TEST_CASE("adiabatic-validity heuristics")
    {
        const run_config c = preset_config("nv4-adiabatic");
        auto p = reduced_params_from_spec(c.system);
        auto s = c.schedule;
        s.control1.amp = s.control2.amp = 1e4;
        const auto w = adiabatic_warnings(p, s);
        REQUIRE_FALSE(w.empty());
        CHECK(w.front().find("kappa/2") != std::string::npos);
        s = c.schedule;
        s.control1.edge_s = s.control2.edge_s = 1e-12;
        bool bandwidth = false;
        for (const auto& m : adiabatic_warnings(p, s))
            bandwidth |= m.find("bandwidth") != std::string::npos;
        CHECK(bandwidth);
    }

    TEST_CASE("audit ranks the k = 8 channel first on NV and flags it on Rb")
    {
        const auto nv = audit(nv_preset());
        CHECK(nv.signal_level == 9);
        REQUIRE_FALSE(nv.channels.empty());
        CHECK(nv.channels.front().k == 8);
        CHECK(nv.channels.front().ratio == doctest::Approx(3.67e9 * 0.131e9 / 1.6e9));
        for (std::size_t i = 1; i < nv.channels.size(); ++i)
            CHECK(nv.channels[i - 1].lambda_plus.real() >= nv.channels[i].lambda_plus.real());

        CHECK(audit(desired_only(nv_preset())).channels.empty());

        const auto rb = audit(rb_preset(), {1.0, 200e-9});
        REQUIRE(rb.channels.size() == 1);
        CHECK(rb.channels.front().k == 8);
        CHECK(rb.channels.front().flagged);

        auto none = nv_preset();
        none.couplings.desired_Omega.setConstant(false);
        CHECK_THROWS_AS(audit(none), invalid_input);
    }
}
