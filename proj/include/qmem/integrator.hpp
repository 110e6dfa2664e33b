#pragma once

// Adaptive Dormand-Prince 5(4) integrator for complex state vectors with
// dense output on a caller-supplied grid.

#include <qmem/error.hpp>

#include <Eigen/Dense>

#include <complex>
#include <functional>
#include <limits>
#include <span>

namespace qmem {

using cvector = Eigen::VectorXcd;

/// dy/dt = f(t, y); writes the derivative into the third argument.
using rhs_fn = std::function<void(double, const cvector&, cvector&)>;

/// Receives (grid index, time, interpolated state).
using sample_fn = std::function<void(std::size_t, double, const cvector&)>;

struct integrator_options
{
    double rtol = 1e-8;
    double atol = 1e-10;
    double max_step = std::numeric_limits<double>::infinity();
    double initial_step = 0.0;     ///< 0 picks one automatically
    long long max_steps = 200'000'000;
};

struct integrator_stats
{
    long long steps = 0;
    long long rejected = 0;
    long long rhs_evaluations = 0;
};

/// Integrates from grid.front() to grid.back(), calling `sample` for every
/// grid point (ascending). Returns the state at grid.back().
///
/// Throws stiffness_error when the step underflows and divergence_error
/// when the state becomes non-finite.
cvector integrate(const rhs_fn& f, cvector y0, std::span<const double> grid,
                  const integrator_options& opt, const sample_fn& sample,
                  integrator_stats* stats = nullptr);

} // namespace qmem
