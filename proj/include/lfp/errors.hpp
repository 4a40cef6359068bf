#pragma once

#include <stdexcept>
#include <string>

namespace lfp {

/// Argument outside the mathematical domain of an operation (zero frequency, non-positive radius, ...).
class domain_error : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Inconsistent or incomplete configuration (missing Monte Carlo spec, too few quadrature points, bad shapes).
class config_error : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A numerical procedure could not deliver a trustworthy answer (ill-conditioning, divergence, non-convergence).
class numerical_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace lfp
