// Error taxonomy shared across the library.
//
// Three families map onto the CLI exit-code contract:
//   - ConfigError: invalid configuration or model assumptions violated on
//     load (exit code 2 together with usage errors).
//   - StateError:  an operation was called in a state that cannot serve it,
//     e.g. reading estimates before the Gram matrix is invertible (exit 1).
//   - std::domain_error (standard): argument outside an operation's domain,
//     e.g. a quantile level outside (0, 1) (exit 1).
#pragma once

#include <stdexcept>
#include <string>

namespace drsim {

struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

struct StateError : std::runtime_error {
    explicit StateError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace drsim
