#pragma once

#include <stdexcept>
#include <string>

namespace ada {

// Base class for everything this library throws on purpose.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Incompatible tensor/vector shapes. Message names both shapes.
struct DimensionError : Error {
    using Error::Error;
};

// Malformed binary file (bad magic, truncation, ...). Message carries the
// byte offset where parsing stopped.
struct FormatError : Error {
    using Error::Error;
};

// Malformed text file (CSV/TSV). Message carries the line number.
struct ParseError : Error {
    using Error::Error;
};

// Structurally valid input with bad content: NaN payloads, out-of-range
// labels, id-set mismatches, missing videos.
struct DataError : Error {
    using Error::Error;
};

// Invalid or infeasible configuration.
struct ConfigError : Error {
    using Error::Error;
};

// Training blew up (non-finite or runaway loss). Message names the step.
struct DivergenceError : Error {
    using Error::Error;
};

}  // namespace ada
