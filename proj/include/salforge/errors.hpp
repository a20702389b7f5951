#pragma once

#include <stdexcept>
#include <string>

namespace salforge {

// Base class for all salforge failures.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Tensor/operation shape mismatch; message names both shapes.
class ShapeError : public Error {
public:
    using Error::Error;
};

// Caller violated a documented precondition (empty soup, non-scalar loss, ...).
class ContractError : public Error {
public:
    using Error::Error;
};

// Malformed textual input (mesh files, manifests, config).
class ParseError : public Error {
public:
    using Error::Error;
};

// Binary artifact failed validation (magic, version, CRC, truncation).
class IntegrityError : public Error {
public:
    using Error::Error;
};

// Invalid configuration value or unknown key/arch/scheme.
class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace salforge
