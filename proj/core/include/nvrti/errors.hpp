#pragma once

#include <stdexcept>
#include <string>

namespace nvrti {

/// Input failed a contract check (bad units, out-of-range parameter, malformed file).
class validation_error : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A numerical routine could not reach its target tolerance.
/// `achieved` carries the tolerance actually reached when the routine gave up.
class numerical_error : public std::runtime_error {
public:
    numerical_error(const std::string& what, double achieved)
        : std::runtime_error(what + " (achieved tolerance " + std::to_string(achieved) + ")"),
          achieved_tolerance(achieved) {}
    double achieved_tolerance;
};

/// Thrown when a threshold condition has negligible probability of ever firing.
class unreachable_threshold_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// An iterative procedure ran out of its budget before meeting its goal.
class non_convergence_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace nvrti
