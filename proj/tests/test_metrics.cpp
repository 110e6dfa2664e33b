#include <qmem/metrics.hpp>

#include <doctest.h>

#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

using namespace qmem;

namespace {

memory_run synthetic_run(int n, double dt, double value, bool noise)
{
    memory_run r;
    r.is_noise_run = noise;
    for (int i = 0; i <= n; ++i) {
        r.t.push_back(i * dt);
        r.a_in.push_back(0.0);
        r.a_out.push_back(value);
    }
    return r;
}

} // namespace

TEST_SUITE("metrics")
{
    TEST_CASE("uniform quadrature: Simpson on even interval counts, trapezoid otherwise")
    {
        // cubic on 10 intervals is exact under Simpson
        std::vector<double> y;
        const double dt = 0.1;
        for (int i = 0; i <= 10; ++i) {
            const double x = i * dt;
            y.push_back(x * x * x - 2 * x + 1);
        }
        CHECK(integrate_uniform(y, dt) == doctest::Approx(0.25 - 1 + 1).epsilon(1e-14));
        // linear on 3 intervals is exact under the trapezoid rule
        std::vector<double> lin = {1, 2, 3, 4};
        CHECK(integrate_uniform(lin, 0.5) == doctest::Approx(3.75).epsilon(1e-15));
        CHECK(integrate_uniform(std::vector<double>{5.0}, 0.1) == 0.0);
    }

    TEST_CASE("output energy and the retrieval window")
    {
        auto r = synthetic_run(100, 0.01, 2.0, false);
        r.retrieval_start = 0.5;
        CHECK(output_energy(r, 0.0) == doctest::Approx(4.0).epsilon(1e-12));
        CHECK(window_begin(r, 0.5) == 50);
        CHECK(output_energy(r, 0.5) == doctest::Approx(2.0).epsilon(1e-12));
        CHECK(efficiency(r, energy_window::retrieval) == doctest::Approx(2.0).epsilon(1e-12));
        CHECK(efficiency(r, energy_window::total) == doctest::Approx(4.0).epsilon(1e-12));
    }

    TEST_CASE("efficiency rejects noise runs, fidelity rejects signal runs")
    {
        const auto sig = synthetic_run(10, 0.1, 0.0, false);
        const auto noi = synthetic_run(10, 0.1, 0.0, true);
        CHECK_THROWS_AS(efficiency(noi, energy_window::total), invalid_input);
        CHECK_THROWS_AS(apparent_fidelity(sig), invalid_input);
        CHECK(apparent_fidelity(noi).fidelity == 1.0);
    }

    TEST_CASE("fidelity is 1 - noise energy, clamped to [0, 1]")
    {
        const auto small = apparent_fidelity(synthetic_run(100, 0.01, 0.1, true));
        CHECK(small.noise_energy == doctest::Approx(0.01).epsilon(1e-12));
        CHECK(small.fidelity == doctest::Approx(0.99).epsilon(1e-12));
        CHECK_FALSE(small.clamped);

        const auto big = apparent_fidelity(synthetic_run(100, 0.01, std::sqrt(3.0), true));
        CHECK(big.raw_fidelity == doctest::Approx(-2.0).epsilon(1e-12));
        CHECK(big.fidelity == 0.0);
        CHECK(big.clamped);
    }

    TEST_CASE("regime classification around Omega = Gamma")
    {
        CHECK(classify_regime(0.5, 1.0).kind == regime::eit);
        CHECK(classify_regime(2.0, 1.0).kind == regime::ats);
        CHECK(classify_regime(1.0, 1.0).kind == regime::boundary);
        CHECK(classify_regime(1.0 + 5e-7, 1.0).kind == regime::boundary);
        CHECK(classify_regime(2.0, 1.0).f == 2.0);
        CHECK_THROWS_AS(classify_regime(1.0, 0.0), invalid_input);
        CHECK(to_string(regime::eit) == "EIT");
        CHECK(to_string(regime::ats) == "ATS");

        // NV storage: 4.3 * 0.176 GHz against Gamma(2 K) ~ 0.102 GHz
        const auto r = classify_regime(nv_preset(), nv_schedule());
        CHECK(r.kind == regime::ats);
        CHECK(r.f == doctest::Approx(4.3 * 0.176e9 / 101789957.17630929).epsilon(1e-12));
    }

    TEST_CASE("dominant period of a sampled sinusoid")
    {
        std::vector<double> t, y;
        double x = 0;
        for (int i = 0; i < 40; ++i) {
            t.push_back(x);
            y.push_back(3 + std::cos(2 * std::numbers::pi * x / 0.37 + 0.4));
            x += 0.05 + 0.01 * (i % 3);   // non-uniform
        }
        CHECK(dominant_period(t, y) == doctest::Approx(0.37).epsilon(1e-3));

        CHECK(std::isnan(dominant_period(std::vector<double>{0, 1, 2}, std::vector<double>{1, 2, 1})));
        const std::vector<double> flat(10, 1.0), tt = {0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
        CHECK(std::isnan(dominant_period(tt, flat)));
    }

    TEST_CASE("evaluate reports efficiency, fidelity and regime together")
    {
        run_config c;
        c.system = nv_simplified_preset();
        c.schedule = nv_reduced_schedule();
        c.schedule.storage_time_s = 100e-9;
        const auto m = evaluate(c);
        CHECK(m.efficiency > 0.0);
        CHECK(m.fidelity.fidelity == 1.0);
        CHECK(m.window == energy_window::retrieval);
        CHECK(m.regime.kind == regime::ats);
    }

    TEST_CASE("storage scan keeps input order and reports both period conventions")
    {
        run_config c;
        c.system = nv_simplified_preset();
        c.schedule = nv_reduced_schedule();
        const std::vector<double> times = {300e-9, 100e-9, 200e-9};
        const auto s = storage_time_scan(c, times, 2);
        REQUIRE(s.rows.size() == 3);
        for (std::size_t i = 0; i < 3; ++i) CHECK(s.rows[i].storage_time_s == times[i]);
        CHECK(std::isnan(s.measured_period_s));
        CHECK(s.period_pi_over_delta_s == doctest::Approx(std::numbers::pi / 6.8e6));
        CHECK(s.period_delta_over_pi == doctest::Approx(6.8e6 / std::numbers::pi));
        const auto serial = storage_time_scan(c, times, 1);
        for (std::size_t i = 0; i < 3; ++i) CHECK(serial.rows[i].efficiency == s.rows[i].efficiency);
    }
}
