#pragma once

#include <stdexcept>
#include <string>

namespace bmc {

// Exit codes used by the CLI.
enum ExitCode : int {
    kExitOk = 0,
    kExitConfig = 1,
    kExitNumerical = 2,
    kExitPositivityLoss = 3,
};

struct ParameterError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct ContractError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Step size outside the admissible range of the implicit scheme.
struct StepSizeError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// The closed-form implicit step has no positive root for this draw.
struct PositivityLossError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NonConvergenceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Evaluation requested outside the admissible domain (wrong side of the
// start point, vanishing decay constant, unsupported parameter regime).
struct DomainError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct PoleError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

#define BMC_REQUIRE(cond, exc, msg)        \
    do {                                   \
        if (!(cond)) throw exc(msg);       \
    } while (0)

}  // namespace bmc
