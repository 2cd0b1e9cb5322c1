#pragma once

#include <stdexcept>
#include <string>

namespace siphi {

// Every library failure derives from Error so the CLI can map it to exit 1.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Mismatched extents between operands or against a declared layout.
struct ShapeError : Error {
    using Error::Error;
};

// Argument outside the operation's domain (empty input, bad epoch, k > n, ...).
struct DomainError : Error {
    using Error::Error;
};

// Invalid head / recipe / sweep configuration.
struct ConfigError : Error {
    using Error::Error;
};

// Member prediction sets that do not cover the same sample ids.
struct AlignmentError : Error {
    using Error::Error;
};

// Gradient or loss became non-finite.
struct NumericError : Error {
    using Error::Error;
};

}  // namespace siphi
