#include "hhons/basis.hpp"

#include <cmath>

namespace hhons {

void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights)
{
  nodes.assign(n, 0.0);
  weights.assign(n, 0.0);
  const double pi = std::acos(-1.0);
  const int m = (n + 1) / 2;
  for (int i = 0; i < m; ++i) {
    double x = std::cos(pi * (i + 0.75) / (n + 0.5));
    double pp = 0.0;
    for (int it = 0; it < 100; ++it) {
      // Legendre recurrence and Newton update.
      double p0 = 1.0, p1 = 0.0;
      for (int j = 0; j < n; ++j) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * j + 1.0) * x * p1 - j * p2) / (j + 1.0);
      }
      pp = n * (x * p0 - p1) / (x * x - 1.0);
      const double dx = p0 / pp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    nodes[i] = -x;
    nodes[n - 1 - i] = x;
    weights[i] = 2.0 / ((1.0 - x * x) * pp * pp);
    weights[n - 1 - i] = weights[i];
  }
}

namespace {

/// Collapsed tensor Gauss rule on the triangle (a, b, c), exact up to `order`.
void append_triangle_rule(const Vector2& a, const Vector2& b, const Vector2& c, int order,
                          std::vector<Vector2>& pts, std::vector<double>& wts)
{
  const double jac2 = (b.x() - a.x()) * (c.y() - a.y()) - (c.x() - a.x()) * (b.y() - a.y());

  // The Duffy substitution u = s(1-t), v = st adds one to the polynomial
  // degree in s, hence the +2 below.
  const int n = std::max(1, (order + 2 + 1) / 2);
  std::vector<double> gx, gw;
  gauss_legendre(n, gx, gw);

  for (int i = 0; i < n; ++i) {
    const double s = 0.5 * (gx[i] + 1.0);
    const double ws = 0.5 * gw[i];
    for (int j = 0; j < n; ++j) {
      const double t = 0.5 * (gx[j] + 1.0);
      const double wt = 0.5 * gw[j];
      const double u = s * (1.0 - t);
      const double v = s * t;
      pts.push_back(a + u * (b - a) + v * (c - a));
      wts.push_back(ws * wt * s * jac2);  // |J_duffy| = s, times the affine Jacobian
    }
  }
}

} // namespace

QuadratureRule element_quadrature(const Mesh& mesh, int element_id, int order)
{
  if (order < 0) throw InvalidParameter("element_quadrature: order must be >= 0");
  const Element& T = mesh.element(element_id);

  std::vector<Vector2> pts;
  std::vector<double> wts;
  const int nv = static_cast<int>(T.vertex_ids.size());
  for (int i = 0; i < nv; ++i) {
    const Vector2& a = mesh.vertex(T.vertex_ids[i]).coords;
    const Vector2& b = mesh.vertex(T.vertex_ids[(i + 1) % nv]).coords;
    const double cross = (a.x() - T.barycenter.x()) * (b.y() - T.barycenter.y()) -
                         (b.x() - T.barycenter.x()) * (a.y() - T.barycenter.y());
    if (cross <= 0.0)
      throw StructureError("element " + std::to_string(element_id) +
                           " is not star-shaped with respect to its barycenter");
    append_triangle_rule(T.barycenter, a, b, order, pts, wts);
  }

  QuadratureRule rule;
  rule.points.resize(2, static_cast<int>(pts.size()));
  rule.weights.resize(static_cast<int>(pts.size()));
  for (int q = 0; q < rule.size(); ++q) {
    rule.points.col(q) = pts[q];
    rule.weights[q] = wts[q];
  }
  rule.exactness_degree = order;
  return rule;
}

QuadratureRule face_quadrature(const Mesh& mesh, int face_id, int order)
{
  if (order < 0) throw InvalidParameter("face_quadrature: order must be >= 0");
  const Face& F = mesh.face(face_id);
  const Vector2& a = mesh.vertex(F.vertex_ids[0]).coords;
  const Vector2& b = mesh.vertex(F.vertex_ids[1]).coords;

  const int n = std::max(1, (order + 1 + 1) / 2);
  std::vector<double> gx, gw;
  gauss_legendre(n, gx, gw);

  QuadratureRule rule;
  rule.points.resize(2, n);
  rule.weights.resize(n);
  for (int q = 0; q < n; ++q) {
    const double t = 0.5 * (gx[q] + 1.0);
    rule.points.col(q) = a + t * (b - a);
    rule.weights[q] = 0.5 * gw[q] * F.measure;
  }
  rule.exactness_degree = order;
  return rule;
}

ScalarBasis ScalarBasis::on_element(const Mesh& mesh, int element_id, int degree, bool orthonormalize)
{
  if (degree < 0) throw InvalidParameter("basis degree must be >= 0");
  const Element& T = mesh.element(element_id);

  ScalarBasis basis;
  basis.on_element_ = true;
  basis.support_id_ = element_id;
  basis.degree_ = degree;
  basis.dimension_ = (degree + 1) * (degree + 2) / 2;
  basis.center_ = T.barycenter;
  basis.scale_ = T.diameter;
  for (int total = 0; total <= degree; ++total)
    for (int b = 0; b <= total; ++b)
      basis.exponents_.push_back({total - b, b});

  basis.transform_ = Eigen::MatrixXd::Identity(basis.dimension_, basis.dimension_);

  const QuadratureRule quad = element_quadrature(mesh, element_id, 2 * degree);
  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(basis.dimension_, basis.dimension_);
  for (int q = 0; q < quad.size(); ++q) {
    const Eigen::VectorXd phi = basis.eval_monomials(quad.point(q));
    gram.noalias() += quad.weights[q] * phi * phi.transpose();
  }

  if (orthonormalize) {
    Eigen::LLT<Eigen::MatrixXd> llt(gram);
    if (llt.info() != Eigen::Success)
      throw ConditioningError("element Gram matrix is not positive definite", element_id);
    basis.transform_ = llt.matrixL().solve(Eigen::MatrixXd::Identity(basis.dimension_, basis.dimension_));
    basis.gram_ = Eigen::MatrixXd::Identity(basis.dimension_, basis.dimension_);
  } else {
    basis.gram_ = gram;
  }
  return basis;
}

ScalarBasis ScalarBasis::on_face(const Mesh& mesh, int face_id, int degree, bool orthonormalize)
{
  if (degree < 0) throw InvalidParameter("basis degree must be >= 0");
  const Face& F = mesh.face(face_id);

  ScalarBasis basis;
  basis.on_element_ = false;
  basis.support_id_ = face_id;
  basis.degree_ = degree;
  basis.dimension_ = degree + 1;
  basis.center_ = F.midpoint;
  basis.scale_ = F.diameter;
  const Vector2& a = mesh.vertex(F.vertex_ids[0]).coords;
  const Vector2& b = mesh.vertex(F.vertex_ids[1]).coords;
  basis.tangent_ = (b - a).normalized();

  basis.transform_ = Eigen::MatrixXd::Identity(basis.dimension_, basis.dimension_);

  const QuadratureRule quad = face_quadrature(mesh, face_id, 2 * degree);
  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(basis.dimension_, basis.dimension_);
  for (int q = 0; q < quad.size(); ++q) {
    const Eigen::VectorXd phi = basis.eval_monomials(quad.point(q));
    gram.noalias() += quad.weights[q] * phi * phi.transpose();
  }

  if (orthonormalize) {
    Eigen::LLT<Eigen::MatrixXd> llt(gram);
    if (llt.info() != Eigen::Success)
      throw ConditioningError("face Gram matrix is not positive definite", face_id);
    basis.transform_ = llt.matrixL().solve(Eigen::MatrixXd::Identity(basis.dimension_, basis.dimension_));
    basis.gram_ = Eigen::MatrixXd::Identity(basis.dimension_, basis.dimension_);
  } else {
    basis.gram_ = gram;
  }
  return basis;
}

Eigen::VectorXd ScalarBasis::eval_monomials(const Vector2& x) const
{
  Eigen::VectorXd values(dimension_);
  if (on_element_) {
    const Vector2 xi = (x - center_) / scale_;
    for (int j = 0; j < dimension_; ++j)
      values[j] = std::pow(xi.x(), exponents_[j][0]) * std::pow(xi.y(), exponents_[j][1]);
  } else {
    const double t = (x - center_).dot(tangent_) / scale_;
    double p = 1.0;
    for (int j = 0; j < dimension_; ++j) {
      values[j] = p;
      p *= t;
    }
  }
  return values;
}

Eigen::Matrix2Xd ScalarBasis::eval_monomial_gradients(const Vector2& x) const
{
  Eigen::Matrix2Xd grads(2, dimension_);
  if (on_element_) {
    const Vector2 xi = (x - center_) / scale_;
    for (int j = 0; j < dimension_; ++j) {
      const int a = exponents_[j][0], b = exponents_[j][1];
      grads(0, j) = a == 0 ? 0.0 : a * std::pow(xi.x(), a - 1) * std::pow(xi.y(), b) / scale_;
      grads(1, j) = b == 0 ? 0.0 : b * std::pow(xi.x(), a) * std::pow(xi.y(), b - 1) / scale_;
    }
  } else {
    const double t = (x - center_).dot(tangent_) / scale_;
    double p = 1.0;  // t^(j-1)
    for (int j = 0; j < dimension_; ++j) {
      if (j == 0) {
        grads.col(j).setZero();
      } else {
        grads.col(j) = (j * p / scale_) * tangent_;
        p *= t;
      }
    }
  }
  return grads;
}

Eigen::VectorXd ScalarBasis::eval(const Vector2& x) const
{
  return transform_ * eval_monomials(x);
}

Eigen::Matrix2Xd ScalarBasis::eval_gradient(const Vector2& x) const
{
  return eval_monomial_gradients(x) * transform_.transpose();
}

Eigen::VectorXd l2_project(const ScalarField& f, const ScalarBasis& basis, const QuadratureRule& quad)
{
  Eigen::VectorXd moments = Eigen::VectorXd::Zero(basis.dimension());
  for (int q = 0; q < quad.size(); ++q)
    moments += quad.weights[q] * f(quad.point(q)) * basis.eval(quad.point(q));

  Eigen::LDLT<Eigen::MatrixXd> ldlt(basis.gram());
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive())
    throw ConditioningError("singular Gram matrix in L2 projection", -1);
  return ldlt.solve(moments);
}

} // namespace hhons
