#ifndef MFHAWKES_ERRORS_HPP
#define MFHAWKES_ERRORS_HPP

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mfhawkes {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Argument outside the documented domain of an operation.
class DomainError : public Error {
public:
    using Error::Error;
};

/// Malformed or incomplete configuration; `path` names the offending field.
class ConfigError : public Error {
public:
    ConfigError(std::string path, const std::string& what)
        : Error(path.empty() ? what : path + ": " + what), path_(std::move(path)) {}
    const std::string& path() const noexcept { return path_; }

private:
    std::string path_;
};

/// A model violates one of the standing assumptions (A.1)-(A.3).
class AssumptionViolation : public Error {
public:
    AssumptionViolation(std::string assumption, const std::string& what)
        : Error(assumption + " violated: " + what), assumption_(std::move(assumption)) {}
    const std::string& assumption() const noexcept { return assumption_; }

private:
    std::string assumption_;
};

/// A numerical procedure failed (non-convergence, instability, truncation).
class NumericError : public Error {
public:
    using Error::Error;
};

/// Thinning exceeded its candidate-point guard.
class ExplosionError : public NumericError {
public:
    using NumericError::NumericError;
};

/// Empirical counts exceeded the requested state truncation.
class OverflowError : public Error {
public:
    OverflowError(std::size_t required, const std::string& what)
        : Error(what), required_n_max_(required) {}
    std::size_t required_n_max() const noexcept { return required_n_max_; }

private:
    std::size_t required_n_max_;
};

/// Absolute continuity of the flow fails at the witness cell.
class AcViolationError : public NumericError {
public:
    AcViolationError(double t, std::size_t x, const std::string& what)
        : NumericError(what), t_(t), x_(x) {}
    double time() const noexcept { return t_; }
    std::size_t state() const noexcept { return x_; }

private:
    double t_;
    std::size_t x_;
};

}  // namespace mfhawkes

#endif  // MFHAWKES_ERRORS_HPP
