#pragma once

#include <stdexcept>
#include <string>

namespace qmem {

/// Base of every error the library raises.
class error : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

/// Bad user input: out-of-range values, inconsistent dimensions, bad keys.
class invalid_input : public error
{
public:
    using error::error;
};

/// Parameters that make a closed-form expression singular (e.g. alpha = 0).
class singular_parameters : public error
{
public:
    using error::error;
};

/// Step size fell below the representable limit.
class stiffness_error : public error
{
public:
    stiffness_error(const std::string& msg, double t)
        : error(msg), m_time(t) {}
    double time() const { return m_time; }

private:
    double m_time;
};

/// Non-finite values appeared in the state.
class divergence_error : public error
{
public:
    divergence_error(const std::string& msg, double t, double growth)
        : error(msg), m_time(t), m_growth(growth) {}
    double time() const { return m_time; }
    /// Estimated exponential growth rate of the state norm [1/s].
    double growth_exponent() const { return m_growth; }

private:
    double m_time;
    double m_growth;
};

class io_error : public error
{
public:
    using error::error;
};

class schema_version_error : public io_error
{
public:
    using io_error::io_error;
};

} // namespace qmem
