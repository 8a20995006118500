#pragma once

#include <any>
#include <stdexcept>
#include <string>

namespace robmv {

// Root of every error the library throws on purpose.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed arguments: empty data, out-of-range parameters, non-finite values.
class InputError : public Error {
public:
    using Error::Error;
};

// Fewer observations than the method needs (e.g. p >= n for MCD).
class DimensionError : public InputError {
public:
    using InputError::InputError;
};

// Requested variant exists in the literature but not here.
class UnsupportedError : public InputError {
public:
    using InputError::InputError;
};

// A matrix that has to be inverted is (numerically) singular.
class SingularityError : public Error {
public:
    using Error::Error;
};

// Zero scale, all weights zero, every candidate subset singular, ...
class DegenerateError : public Error {
public:
    using Error::Error;
};

// Sparse method thresholded every variable away.
class SparsityError : public Error {
public:
    using Error::Error;
};

// Resampling lost more than half of its replicates.
class ResamplingError : public Error {
public:
    using Error::Error;
};

// Unreadable, empty or malformed files.
class IoError : public Error {
public:
    using Error::Error;
};

// Iteration budget exhausted. Carries the last iterate so callers can inspect it.
class ConvergenceError : public Error {
public:
    ConvergenceError(const std::string& what, int iterations, std::any last = {})
        : Error(what), iterations_(iterations), last_(std::move(last)) {}

    int iterations() const noexcept { return iterations_; }
    const std::any& last_iterate() const noexcept { return last_; }

    template <class T>
    const T* last_as() const noexcept {
        return std::any_cast<T>(&last_);
    }

private:
    int iterations_;
    std::any last_;
};

}  // namespace robmv
