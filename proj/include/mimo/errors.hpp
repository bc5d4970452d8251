#pragma once

#include <stdexcept>
#include <string>

namespace mimo {

struct DimensionMismatch : std::invalid_argument {
    explicit DimensionMismatch(const std::string& what) : std::invalid_argument(what) {}
};

struct NotPositiveDefinite : std::runtime_error {
    explicit NotPositiveDefinite(const std::string& what) : std::runtime_error(what) {}
};

// CG direction lost positive curvature, matrix is not PD (or badly conditioned).
struct BreakdownError : std::runtime_error {
    explicit BreakdownError(const std::string& what) : std::runtime_error(what) {}
};

struct UnsupportedOrder : std::invalid_argument {
    explicit UnsupportedOrder(const std::string& what) : std::invalid_argument(what) {}
};

struct NotAConstellationPoint : std::invalid_argument {
    explicit NotAConstellationPoint(const std::string& what) : std::invalid_argument(what) {}
};

// penalty/reward pair makes a binary subproblem concave; solution would sit at the wrong
// stationary point instead of the projected minimizer
struct NonconvexDenominator : std::invalid_argument {
    explicit NonconvexDenominator(const std::string& what) : std::invalid_argument(what) {}
};

struct SearchSpaceTooLarge : std::invalid_argument {
    explicit SearchSpaceTooLarge(const std::string& what) : std::invalid_argument(what) {}
};

struct InvalidCorrelation : std::invalid_argument {
    explicit InvalidCorrelation(const std::string& what) : std::invalid_argument(what) {}
};

struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

struct DivergenceDetected : std::runtime_error {
    explicit DivergenceDetected(const std::string& what) : std::runtime_error(what) {}
};

struct EmptyBatch : std::invalid_argument {
    explicit EmptyBatch(const std::string& what) : std::invalid_argument(what) {}
};

struct IndexError : std::out_of_range {
    explicit IndexError(const std::string& what) : std::out_of_range(what) {}
};

} // namespace mimo
