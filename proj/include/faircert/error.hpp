#pragma once

#include <stdexcept>
#include <string>

namespace faircert {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Input dimensions do not agree with the model or spec.
class DimensionError : public Error {
public:
    using Error::Error;
};

/// Malformed model, spec, certificate, transcript or commitment document.
class SchemaError : public Error {
public:
    using Error::Error;
};

/// A value could not be represented in the fixed-point encoding.
class EncodingError : public Error {
public:
    using Error::Error;
};

} // namespace faircert
