#pragma once

#include <stdexcept>
#include <string>

namespace beamwave {

/// Base class for all beamwave errors.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct InvalidGrid : Error { using Error::Error; };
struct InvalidOrder : Error { using Error::Error; };
struct SymbolNotPositive : Error { using Error::Error; };
struct InvalidArgument : Error { using Error::Error; };
struct UnsupportedForFamily : Error { using Error::Error; };

struct NoConvergence : Error { using Error::Error; };
struct TrivialSolution : Error { using Error::Error; };

struct HomotopyBroken : Error {
    HomotopyBroken(const std::string& msg, int stage, double last_good)
        : Error(msg), stage_index(stage), last_good_parameter(last_good) {}
    int stage_index;
    double last_good_parameter;
};

struct FredholmViolation : Error { using Error::Error; };
struct DegenerateKernel : Error { using Error::Error; };
struct EigenFailure : Error { using Error::Error; };
struct IndexMismatch : Error { using Error::Error; };
struct NoTransitionInRange : Error { using Error::Error; };

struct StageNonConvergence : Error { using Error::Error; };

struct WindowBelowFloor : Error { using Error::Error; };
struct InsufficientTail : Error { using Error::Error; };

struct ConfigError : Error { using Error::Error; };

} // namespace beamwave
