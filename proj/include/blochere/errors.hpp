#pragma once

#include <stdexcept>
#include <string>

namespace blochere {

/// Base of all library errors. The message is prefixed with the module name.
class Error : public std::runtime_error {
public:
    Error(const std::string& module, const std::string& what)
        : std::runtime_error(module + ": " + what), module_(module) {}

    const std::string& module() const { return module_; }

private:
    std::string module_;
};

class SpectrumError : public Error {
public:
    explicit SpectrumError(const std::string& what) : Error("spectrum", what) {}
};

class FieldError : public Error {
public:
    explicit FieldError(const std::string& what) : Error("field", what) {}
};

class BlochError : public Error {
public:
    explicit BlochError(const std::string& what) : Error("bloch", what) {}
};

class StepSizeError : public BlochError {
public:
    using BlochError::BlochError;
};

class InvariantError : public BlochError {
public:
    using BlochError::BlochError;
};

class HistoryError : public Error {
public:
    HistoryError(const std::string& module, const std::string& what) : Error(module, what) {}
};

class EnsembleError : public Error {
public:
    explicit EnsembleError(const std::string& what) : Error("ensemble", what) {}
};

class ValidityError : public Error {
public:
    explicit ValidityError(const std::string& what) : Error("validity", what) {}
};

class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& what) : Error("config", what) {}
};

}  // namespace blochere
