// Scaled monomial bases on elements and faces, polygon/segment quadrature,
// Gram matrices, and local L2-orthogonal projection.

#ifndef HHONS_BASIS_HPP
#define HHONS_BASIS_HPP

#include "hhons/common.hpp"
#include "hhons/mesh.hpp"

#include <functional>
#include <vector>

namespace hhons {

struct QuadratureRule {
  Eigen::Matrix2Xd points;  // physical coordinates
  Eigen::VectorXd weights;
  int exactness_degree = 0;

  int size() const { return static_cast<int>(weights.size()); }
  Vector2 point(int q) const { return points.col(q); }
};

/// Gauss-Legendre nodes/weights on [-1,1], exact for polynomials of degree 2n-1.
void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights);

/// Quadrature on a polygonal element, exact for polynomials up to `order`,
/// built by fanning the element into triangles from its barycenter. Throws
/// StructureError if the element is not star-shaped with respect to it.
QuadratureRule element_quadrature(const Mesh& mesh, int element_id, int order);

/// Gauss-Legendre rule mapped onto a (straight) face.
QuadratureRule face_quadrature(const Mesh& mesh, int face_id, int order);

/// Scalar polynomial basis on an element or face: monomials in the scaled
/// variable (x - x_X)/h_X, optionally L2-orthonormalized through a Cholesky
/// factorization of the Gram matrix (same interface either way).
class ScalarBasis {
public:
  static ScalarBasis on_element(const Mesh& mesh, int element_id, int degree, bool orthonormalize = false);
  static ScalarBasis on_face(const Mesh& mesh, int face_id, int degree, bool orthonormalize = false);

  int degree() const { return degree_; }
  int dimension() const { return dimension_; }
  bool on_element_support() const { return on_element_; }

  /// Values of all basis functions at x.
  Eigen::VectorXd eval(const Vector2& x) const;
  /// Gradients of all basis functions at x (2 x dimension). Face bases have
  /// tangential-only variation.
  Eigen::Matrix2Xd eval_gradient(const Vector2& x) const;

  /// Gram matrix in this basis over the support (identity when orthonormalized).
  const Eigen::MatrixXd& gram() const { return gram_; }

private:
  ScalarBasis() = default;
  Eigen::VectorXd eval_monomials(const Vector2& x) const;
  Eigen::Matrix2Xd eval_monomial_gradients(const Vector2& x) const;

  bool on_element_ = true;
  int support_id_ = -1;
  int degree_ = 0;
  int dimension_ = 0;
  Vector2 center_ = Vector2::Zero();
  double scale_ = 1.0;
  Vector2 tangent_ = Vector2::UnitX();           // face bases only
  std::vector<std::array<int, 2>> exponents_;    // element bases only
  Eigen::MatrixXd transform_;  // basis = transform * monomials (identity unless orthonormalized)
  Eigen::MatrixXd gram_;
};

using ScalarField = std::function<double(const Vector2&)>;
using VectorField = std::function<Vector2(const Vector2&)>;

/// Coefficients of the L2-orthogonal projection of f onto the basis, using the
/// given quadrature for the moment integrals. Throws ConditioningError if the
/// Gram matrix is numerically singular.
Eigen::VectorXd l2_project(const ScalarField& f, const ScalarBasis& basis, const QuadratureRule& quad);

} // namespace hhons

#endif
