#pragma once

#include <stdexcept>
#include <string>

namespace fwtraj {

// Bad sizes or out-of-range construction arguments.
struct DimensionError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Problem cannot be posed (e.g. start == goal with no heading given).
struct DegenerateSpecError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// KKT matrix not invertible (rank-deficient equality rows or degree too low).
struct SingularKktError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// NaN/Inf appeared inside the solver loop; message carries the iteration.
struct NonFiniteError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Scenario file parse/validation failure; message names the field.
struct ScenarioError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace fwtraj
