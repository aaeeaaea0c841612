#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mfito {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A documented precondition of an operation does not hold.
class PreconditionError : public Error {
public:
    using Error::Error;
};

/// A state-space enumeration would exceed its configured budget.
class BudgetError : public Error {
public:
    BudgetError(const std::string& what, std::size_t requested, std::size_t budget)
        : Error(what + " (requested " + std::to_string(requested) + " states, budget " +
                std::to_string(budget) + ")"),
          requested_(requested), budget_(budget) {}

    std::size_t requested() const noexcept { return requested_; }
    std::size_t budget() const noexcept { return budget_; }

private:
    std::size_t requested_;
    std::size_t budget_;
};

/// A declared bound (coefficient bound or dominating intensity) was violated.
class BoundViolation : public Error {
public:
    using Error::Error;
};

namespace detail {

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw PreconditionError(msg);
}

}  // namespace detail
}  // namespace mfito
