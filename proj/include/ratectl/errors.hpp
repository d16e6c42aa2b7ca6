#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace ratectl {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed or out-of-contract input (exit code 2 at the CLI).
class InvalidInput : public Error {
public:
    using Error::Error;
};

/// Zero population vectors and similar inputs a computation cannot scale.
class DegenerateInput : public InvalidInput {
public:
    using InvalidInput::InvalidInput;
};

/// Instance outside the reach of a specialised solver (e.g. K != 2).
class UnsupportedInstance : public InvalidInput {
public:
    using InvalidInput::InvalidInput;
};

/// Operation on an extinct (all-zero) stochastic state.
class ExtinctState : public InvalidInput {
public:
    using InvalidInput::InvalidInput;
};

/// An action outside the feasible set. Carries the rollout step when known.
class InfeasibleAction : public Error {
public:
    explicit InfeasibleAction(const std::string& what, std::optional<std::size_t> step = std::nullopt)
        : Error(step ? what + " (step " + std::to_string(*step) + ")" : what), step_(step) {}

    std::optional<std::size_t> step() const noexcept { return step_; }

private:
    std::optional<std::size_t> step_;
};

/// Iteration did not converge or produced no admissible candidate.
class NumericalFailure : public Error {
public:
    using Error::Error;
};

/// Requested discretisation exceeds the configured memory cap.
class CapacityError : public Error {
public:
    using Error::Error;
};

}  // namespace ratectl
