#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace intratp {

/// Raised when input data or configuration fails validation.
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

/// Raised when the netting problem (or one of its windows) has no feasible solution.
class InfeasibleError : public std::runtime_error {
public:
    InfeasibleError(const std::string& what, std::size_t window_index,
                    std::string constraint_class)
        : std::runtime_error(what),
          window_index_(window_index),
          constraint_class_(std::move(constraint_class)) {}

    std::size_t window_index() const { return window_index_; }
    const std::string& constraint_class() const { return constraint_class_; }

private:
    std::size_t window_index_;
    std::string constraint_class_;
};

}  // namespace intratp
