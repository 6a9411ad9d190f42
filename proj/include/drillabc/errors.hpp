#pragma once

#include <stdexcept>
#include <string>

namespace drillabc {

// Invalid argument to a numerical routine (negative speed, non-positive
// stiffness, malformed parameter vector, ...).
class DomainError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Iterative method failed (eigen-solver cap, singular system).
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed input file or a dataset that cannot support the request.
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class IntegrationError : public NumericError {
public:
    IntegrationError(const std::string& what, double last_valid_time)
        : NumericError(what), last_valid_time_(last_valid_time) {}
    double last_valid_time() const noexcept { return last_valid_time_; }

private:
    double last_valid_time_;
};

class AssemblyError : public NumericError {
public:
    using NumericError::NumericError;
};

// ABC acceptance rate collapsed below the stall threshold.
class StallError : public NumericError {
public:
    StallError(const std::string& what, double tolerance)
        : NumericError(what), tolerance_(tolerance) {}
    double tolerance() const noexcept { return tolerance_; }

private:
    double tolerance_;
};

class InsufficientSampleError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace drillabc
