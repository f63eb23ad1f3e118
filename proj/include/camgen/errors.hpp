#pragma once

#include <stdexcept>
#include <string>

namespace camgen {

// Argument validation uses std::invalid_argument. The types below map onto
// the CLI exit codes (2 = data/checkpoint, 3 = numerical failure).

struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Checkpoint or dataset is structurally fine but incompatible with the run.
struct VersionError : DataError {
    using DataError::DataError;
};

struct EmptySplitError : DataError {
    using DataError::DataError;
};

struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace camgen
