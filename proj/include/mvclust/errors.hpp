#pragma once

#include <stdexcept>
#include <string>

namespace mvclust {

// Error taxonomy used across the library. The CLI maps ShapeError/InputError
// to exit code 1 and NumericError/TrainingError to exit code 2.

struct ShapeError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct InputError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct TrainingError : NumericError {
    using NumericError::NumericError;
};

} // namespace mvclust
