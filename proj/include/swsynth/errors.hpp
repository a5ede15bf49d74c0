#pragma once

#include <stdexcept>
#include <string>

namespace swsynth {

/// Malformed input: configuration, data files, formulas. CLI exit code 2.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Factorization failure, non-convergence, infeasible interval rows. CLI exit code 3.
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace swsynth
