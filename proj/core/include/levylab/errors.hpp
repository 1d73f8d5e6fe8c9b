#pragma once

#include <stdexcept>
#include <string>

namespace levylab {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// model construction
struct CompoundPoissonError : Error {
    CompoundPoissonError()
        : Error("rejected: pure compound Poisson process (no Gaussian part, no drift, finite jump activity)") {}
};
struct ParamError : Error {
    using Error::Error;
};

// generic argument violations
struct DomainError : Error {
    using Error::Error;
};

// simulation / estimation
struct BudgetExceededError : Error {
    using Error::Error;
};
struct UnsupportedFamilyError : Error {
    using Error::Error;
};
struct InfiniteMeanLadderError : Error {
    using Error::Error;
};
struct CalibrationError : Error {
    using Error::Error;
};
struct CoverageError : Error {
    using Error::Error;
};
struct EmptySampleError : Error {
    EmptySampleError() : Error("empty sample") {}
};

// harness
struct ConfigError : Error {
    using Error::Error;
};
struct UnknownExperimentError : Error {
    using Error::Error;
};

}  // namespace levylab
