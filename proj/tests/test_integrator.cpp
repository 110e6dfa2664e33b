#include <qmem/integrator.hpp>

#include <doctest.h>

#include <cmath>
#include <limits>
#include <vector>

using namespace qmem;

namespace {

std::vector<double> linspace(double a, double b, int n)
{
    std::vector<double> g(n);
    for (int i = 0; i < n; ++i) g[i] = a + (b - a) * i / (n - 1);
    return g;
}

} // namespace

TEST_SUITE("integrator")
{
    TEST_CASE("complex exponential matches exp(lambda t) on every grid point")
    {
        const std::complex<double> lambda(-1.0, 5.0);
        const rhs_fn f = [&](double, const cvector& y, cvector& dy) { dy = lambda * y; };
        cvector y0(2);
        y0 << 1.0, std::complex<double>(0.3, -0.7);
        const auto grid = linspace(0, 2, 41);
        integrator_options opt;
        opt.rtol = 1e-11;
        opt.atol = 1e-14;
        double worst = 0;
        std::size_t calls = 0;
        integrator_stats st;
        integrate(f, y0, grid, opt,
                  [&](std::size_t i, double t, const cvector& y) {
                      CHECK(i == calls++);
                      CHECK(t == grid[i]);
                      for (int k = 0; k < 2; ++k)
                          worst = std::max(worst, std::abs(y[k] - y0[k] * std::exp(lambda * t)));
                  },
                  &st);
        CHECK(calls == grid.size());
        CHECK(worst < 1e-9);
        CHECK(st.steps > 0);
        CHECK(st.rhs_evaluations >= 6 * st.steps);
    }

    TEST_CASE("dense output between steps keeps fifth-order accuracy")
    {
        // Few large steps, many samples in between.
        const rhs_fn f = [](double t, const cvector&, cvector& dy) { dy[0] = std::cos(t); };
        cvector y0 = cvector::Zero(1);
        const auto grid = linspace(0, 3, 301);
        integrator_options opt;
        opt.rtol = 1e-10;
        opt.atol = 1e-12;
        double worst = 0;
        integrate(f, y0, grid, opt, [&](std::size_t, double t, const cvector& y) {
            worst = std::max(worst, std::abs(y[0] - std::sin(t)));
        });
        CHECK(worst < 1e-8);
    }

    TEST_CASE("max_step bounds the step count from below")
    {
        const rhs_fn f = [](double, const cvector&, cvector& dy) { dy.setZero(); };
        integrator_options opt;
        opt.max_step = 0.01;
        integrator_stats st;
        const auto grid = linspace(0, 1, 3);
        integrate(f, cvector::Ones(1), grid, opt, [](std::size_t, double, const cvector&) {}, &st);
        CHECK(st.steps >= 100);
    }

    TEST_CASE("non-finite derivatives raise divergence_error")
    {
        const rhs_fn f = [](double t, const cvector& y, cvector& dy) {
            dy = y;
            if (t > 0.5) dy[0] = std::numeric_limits<double>::quiet_NaN();
        };
        const auto grid = linspace(0, 1, 11);
        CHECK_THROWS_AS(integrate(f, cvector::Ones(1), grid, integrator_options{},
                                  [](std::size_t, double, const cvector&) {}),
                        divergence_error);
    }

    TEST_CASE("finite-time blow-up is reported as a numerical error")
    {
        // y' = y^2, y(0) = 1 blows up at t = 1.
        const rhs_fn f = [](double, const cvector& y, cvector& dy) { dy = y.cwiseProduct(y); };
        const auto grid = linspace(0, 2, 5);
        bool numerical = false;
        try {
            integrate(f, cvector::Ones(1), grid, integrator_options{},
                      [](std::size_t, double, const cvector&) {});
        } catch (const stiffness_error&) {
            numerical = true;
        } catch (const divergence_error&) {
            numerical = true;
        }
        CHECK(numerical);
    }
}
