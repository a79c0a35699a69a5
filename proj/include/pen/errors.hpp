// Copyright 2026 The PEN Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace pen {

/// Shapes or lengths that do not fit together.
class DimensionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A value outside the admissible range of an operation.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// The reduced stiffness system could not be solved.
class SolverError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// An operation was invoked in the wrong order (e.g. backward without a recorded forward pass).
class StateError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// Model, checkpoint or dataset files that cannot be read back.
class LoadError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Training had to abort (non-finite objective or gradient, repeated solver failure).
class TrainingError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid configuration; key() names the offending entry.
class ConfigError : public std::invalid_argument {
public:
    ConfigError(std::string key, const std::string& what)
        : std::invalid_argument(what), key_(std::move(key)) {}

    [[nodiscard]] const std::string& key() const noexcept { return key_; }

private:
    std::string key_;
};

}  // namespace pen
