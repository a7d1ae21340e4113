#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace concord {

// Bad arguments or malformed domain objects (shape mismatches, broken
// invariants, out-of-range parameters).
struct InvalidInputError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Confidence-inequality check called with c1/c2 outside (1,inf)x(0,1).
struct WeightRangeError : InvalidInputError {
    using InvalidInputError::InvalidInputError;
};

// Confidence-inequality check called with a[bad]/sum(a) >= b[bad]/sum(b).
struct RatioPreconditionError : InvalidInputError {
    using InvalidInputError::InvalidInputError;
};

// An operation was called in the wrong order (e.g. static trust queried
// after the first computation round without a cached matrix).
struct StateError : std::logic_error {
    using std::logic_error::logic_error;
};

// NaN/Inf reached a numeric routine, or a linear system stayed singular
// after the ridge fallback. `epoch` is set by training loops, -1 otherwise.
struct NumericalError : std::runtime_error {
    explicit NumericalError(const std::string& what, long epoch_index = -1)
        : std::runtime_error(what), epoch(epoch_index) {}
    long epoch;
};

// Iterative solver hit max_iter; carries the last iterate and its residual.
struct ConvergenceError : std::runtime_error {
    ConvergenceError(const std::string& what, std::vector<double> iterate,
                     double res)
        : std::runtime_error(what), last_iterate(std::move(iterate)), residual(res) {}
    std::vector<double> last_iterate;
    double residual;
};

// Rejection sampling exhausted its attempt budget.
struct GenerationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace concord
