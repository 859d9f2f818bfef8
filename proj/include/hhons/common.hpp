// Shared aliases and error types.

#ifndef HHONS_COMMON_HPP
#define HHONS_COMMON_HPP

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace hhons {

using Vector2 = Eigen::Vector2d;
using Matrix2 = Eigen::Matrix2d;

/// Thrown on malformed mesh files; carries the offending line number in the message.
struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Thrown on connectivity defects (non-manifold faces, inverted elements, ...).
struct StructureError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Thrown when a local Gram/stiffness solve fails on degenerate geometry.
struct ConditioningError : std::runtime_error {
  ConditioningError(const std::string& what, int entity_id)
      : std::runtime_error(what + " (entity " + std::to_string(entity_id) + ")"),
        entity(entity_id)
  {}
  int entity;
};

/// Thrown on parameter values outside their admissible range.
struct InvalidParameter : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Thrown when evaluating a quantity at a point where it is singular.
struct SingularityError : std::domain_error {
  using std::domain_error::domain_error;
};

} // namespace hhons

#endif
