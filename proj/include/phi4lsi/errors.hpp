#pragma once

#include <stdexcept>
#include <string>

namespace phi4 {

/** invalid or inconsistent configuration (bad dimensions, unknown keys, ...) */
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

/** operands live on different lattices or have mismatched sizes */
struct ShapeError : std::runtime_error {
    explicit ShapeError(const std::string& msg) : std::runtime_error(msg) {}
};

/** parameter outside the mathematical domain (m2 <= 0, p < 1, ...) */
struct DomainError : std::runtime_error {
    explicit DomainError(const std::string& msg) : std::runtime_error(msg) {}
};

/** request exceeds a hard capability cap (oracle site count, ...) */
struct CapabilityError : std::runtime_error {
    explicit CapabilityError(const std::string& msg) : std::runtime_error(msg) {}
};

/** a numerical self-consistency gate failed (quadrature refinement drift, ...) */
struct PrecisionError : std::runtime_error {
    explicit PrecisionError(const std::string& msg) : std::runtime_error(msg) {}
};

/** time discretisation blew up (diverging Langevin trajectory) */
struct StepSizeError : std::runtime_error {
    explicit StepSizeError(const std::string& msg) : std::runtime_error(msg) {}
};

/** file could not be read or written */
struct IoError : std::runtime_error {
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

/** a verified inequality was violated beyond tolerance */
struct InequalityViolation : std::runtime_error {
    explicit InequalityViolation(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace phi4
