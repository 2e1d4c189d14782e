#pragma once

#include <stdexcept>
#include <string>

namespace cehis {

// Base for everything this library throws on purpose.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Malformed input file (wrong arity, non-integer field, bad header). Carries file:line context.
struct ParseError : Error {
    using Error::Error;
};

// Structurally well-formed input that violates a contract (id out of range, bad config value).
struct ValidationError : Error {
    using Error::Error;
};

// Information from t >= t_q reached a computation about t_q.
struct TemporalLeakError : Error {
    using Error::Error;
};

// A replay reasoner was asked about a query its dump does not cover.
struct LookupError : Error {
    using Error::Error;
};

// Structural problem in a dump or cache file (duplicate key, missing column).
struct FormatError : Error {
    using Error::Error;
};

// Metric undefined on the given input (empty report set, zero accepted predictions).
struct MetricError : Error {
    using Error::Error;
};

// Beta calibration cannot proceed (empty grid, empty validation set).
struct CalibrationError : Error {
    using Error::Error;
};

} // namespace cehis
