#pragma once

#include <stdexcept>
#include <string>

namespace charcalc {

// Precondition / domain violations (CLI exit code 2).
struct DomainError : std::runtime_error {
    explicit DomainError(const std::string& what) : std::runtime_error(what) {}
};

// Mixed conductors in cyclotomic arithmetic.
struct ConductorMismatch : DomainError {
    explicit ConductorMismatch(const std::string& what) : DomainError(what) {}
};

// A predicate that cannot be decided at the working precision (CLI exit code 3).
struct IndeterminateAtPrecision : std::runtime_error {
    explicit IndeterminateAtPrecision(const std::string& what) : std::runtime_error(what) {}
};

} // namespace charcalc
