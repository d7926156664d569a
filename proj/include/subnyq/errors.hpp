#ifndef SUBNYQ_ERRORS_HPP
#define SUBNYQ_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace subnyq {

// Structural misuse: bad dimensions, invalid sampling parameters, malformed input.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Numerically rank-deficient system. Carries the condition number estimate at
// the point of failure so callers can report which configuration broke.
class SingularMatrixError : public std::runtime_error {
public:
    SingularMatrixError(const std::string& msg, double condition_number)
        : std::runtime_error(msg), condition_number_(condition_number) {}

    double condition_number() const { return condition_number_; }

private:
    double condition_number_;
};

// An iterative numerical routine failed to converge.
class ConvergenceError : public std::runtime_error {
public:
    ConvergenceError(const std::string& msg, int iterations)
        : std::runtime_error(msg), iterations_(iterations) {}

    int iterations() const { return iterations_; }

private:
    int iterations_;
};

// Filesystem or format failure while reading/writing signals, bundles or tables.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace subnyq

#endif
