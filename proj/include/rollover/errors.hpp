#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace rollover {

/// Base of every library error.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// An affine transform left its domain of finiteness before the requested horizon.
struct ExplosionError : Error {
    double explosion_time;  // years; first time the moment becomes infinite
    ExplosionError(const std::string& what, double time) : Error(what), explosion_time(time) {}
};

struct DimensionError : Error { using Error::Error; };
struct DomainError : Error { using Error::Error; };
struct StepFailure : Error { using Error::Error; };
struct ConventionError : Error { using Error::Error; };
struct NegativeGrowth : Error { using Error::Error; };
struct MeshError : Error { using Error::Error; };
struct DegenerateAnnuity : Error { using Error::Error; };
struct QuadratureError : Error { using Error::Error; };
struct BootstrapError : Error { using Error::Error; };
struct NegativeIntensity : Error { using Error::Error; };
struct EmptyPanel : Error { using Error::Error; };
struct UnitError : Error { using Error::Error; };
struct MissingQuote : Error { using Error::Error; };
struct SpecError : Error { using Error::Error; };
struct UnknownInstrument : Error { using Error::Error; };
struct ConfigError : Error { using Error::Error; };

struct ParseError : Error {
    std::size_t row;
    std::size_t column;
    ParseError(const std::string& what, std::size_t r, std::size_t c)
        : Error(what + " (row " + std::to_string(r) + ", column " + std::to_string(c) + ")"), row(r), column(c) {}
};

}  // namespace rollover
