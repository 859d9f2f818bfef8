#include "hhons/forms.hpp"

#include <cmath>

namespace hhons {

namespace {

/// G v or G_s v at quadrature point q, from reconstructed coefficients.
Matrix2 tensor_at(const Eigen::VectorXd& coef, const Eigen::MatrixXd& phi, int Nk, int q)
{
  Matrix2 out;
  out(0, 0) = phi.col(q).dot(coef.segment(0 * Nk, Nk));
  out(0, 1) = phi.col(q).dot(coef.segment(1 * Nk, Nk));
  out(1, 0) = phi.col(q).dot(coef.segment(2 * Nk, Nk));
  out(1, 1) = phi.col(q).dot(coef.segment(3 * Nk, Nk));
  return out;
}

Vector2 cell_value_at(const Eigen::VectorXd& vloc, const Eigen::MatrixXd& phi, int Nk, int q)
{
  return {phi.col(q).dot(vloc.segment(0, Nk)), phi.col(q).dot(vloc.segment(Nk, Nk))};
}

/// Stabilization weight (delta^r + |d|^r)^((r-2)/r); zero on a vanishing base.
double stab_weight(double delta, double r, double d_norm)
{
  const double base = std::pow(delta, r) + std::pow(d_norm, r);
  if (base == 0.0) return 0.0;
  return std::pow(base, (r - 2.0) / r);
}

double capped_viscosity(const CarreauYasuda& law, const Matrix2& tau)
{
  const double nu = effective_viscosity(law, tau);
  return std::isfinite(nu) ? nu : 0.0;
}

} // namespace

Forms::Forms(const VelocitySpace& space, CarreauYasuda stress, LaplaceConvection convection,
             FormsOptions options)
    : space_(&space), stress_(stress), convection_(convection), options_(options)
{
  coupling_.reserve(space.mesh().n_elements());
  for (int e = 0; e < space.mesh().n_elements(); ++e)
    coupling_.push_back(-space.tables(e).mass_k * space.ops(e).divergence);
}

double Forms::viscous_value(const HybridVelocity& w, const HybridVelocity& v) const
{
  const Mesh& mesh = space_->mesh();
  const int Nk = space_->n_cell_scalar();
  double total = 0.0;
  for (int e = 0; e < mesh.n_elements(); ++e) {
    const ElementTables& tab = space_->tables(e);
    const LocalOperators& op = space_->ops(e);
    const Eigen::VectorXd wloc = space_->gather_local(w, e);
    const Eigen::VectorXd vloc = space_->gather_local(v, e);
    const Eigen::VectorXd gw = op.gradient_sym * wloc;
    const Eigen::VectorXd gv = op.gradient_sym * vloc;
    for (int q = 0; q < tab.quad.size(); ++q) {
      const Matrix2 tw = tensor_at(gw, tab.phi, Nk, q);
      const Matrix2 tv = tensor_at(gv, tab.phi, Nk, q);
      total += tab.quad.weights[q] * stress_eval(stress_, tw).cwiseProduct(tv).sum();
    }
  }
  return total + stabilization_value(w, v);
}

double Forms::stabilization_value(const HybridVelocity& w, const HybridVelocity& v) const
{
  const Mesh& mesh = space_->mesh();
  const int NF = space_->n_face_scalar();
  const double prefactor = options_.stab_scaling * stress_.mu;
  double total = 0.0;
  for (int e = 0; e < mesh.n_elements(); ++e) {
    const ElementTables& tab = space_->tables(e);
    const LocalOperators& op = space_->ops(e);
    const Eigen::VectorXd wloc = space_->gather_local(w, e);
    const Eigen::VectorXd vloc = space_->gather_local(v, e);

    double elem = 0.0;
    for (size_t fl = 0; fl < tab.faces.size(); ++fl) {
      const FaceTables& ft = tab.faces[fl];
      const QuadratureRule& fq = space_->face_quad(ft.face_id);
      const Eigen::VectorXd dw = op.residual[fl] * wloc;
      const Eigen::VectorXd dv = op.residual[fl] * vloc;
      for (int q = 0; q < fq.size(); ++q) {
        Vector2 dwq, dvq;
        for (int i = 0; i < 2; ++i) {
          dwq[i] = ft.psi.col(q).dot(dw.segment(i * NF, NF));
          dvq[i] = ft.psi.col(q).dot(dv.segment(i * NF, NF));
        }
        elem += fq.weights[q] * stab_weight(stress_.delta, stress_.r, dwq.norm()) * dwq.dot(dvq);
      }
    }
    total += prefactor * mesh.element(e).diameter * elem;
  }
  return total;
}

double Forms::convective_value(const HybridVelocity& w, const HybridVelocity& v) const
{
  if (convection_.nu == 0.0) return 0.0;
  const Mesh& mesh = space_->mesh();
  const int Nk = space_->n_cell_scalar();
  const double s = convection_.s;
  const double s_conj = s / (s - 1.0);
  const double eps_reg = convective_threshold(w);

  double total = 0.0;
  for (int e = 0; e < mesh.n_elements(); ++e) {
    const ElementTables& tab = space_->tables(e);
    const LocalOperators& op = space_->ops(e);
    const Eigen::VectorXd wloc = space_->gather_local(w, e);
    const Eigen::VectorXd vloc = space_->gather_local(v, e);
    const Eigen::VectorXd gw = op.gradient * wloc;
    const Eigen::VectorXd gv = op.gradient * vloc;

    for (int q = 0; q < tab.quad.size(); ++q) {
      const Vector2 wq = cell_value_at(wloc, tab.phi, Nk, q);
      const Vector2 vq = cell_value_at(vloc, tab.phi, Nk, q);
      const Vector2 chi = convection_eval(convection_, wq);
      const Matrix2 Gw = tensor_at(gw, tab.phi, Nk, q);
      const Matrix2 Gv = tensor_at(gv, tab.phi, Nk, q);

      const double t1 = (Gw * chi).dot(vq);
      const double t3 = (Gv * chi).dot(wq);
      double t2 = 0.0;
      const double wn = wq.norm();
      if (wn > eps_reg)
        t2 = (vq.dot(wq) / (wn * wn)) * (Gw * chi).dot(wq);

      total += tab.quad.weights[q] * (t1 / s + (s - 2.0) / s * t2 - t3 / s_conj);
    }
  }
  return total;
}

double Forms::coupling_value(const HybridVelocity& v, const BrokenPressure& q) const
{
  double total = 0.0;
  for (int e = 0; e < space_->mesh().n_elements(); ++e) {
    const Eigen::VectorXd vloc = space_->gather_local(v, e);
    total += q.coeffs.segment(space_->pressure_offset(e), space_->pressure_block()).dot(coupling_[e] * vloc);
  }
  return total;
}

double Forms::load_value(const VectorField& f, const HybridVelocity& v) const
{
  const int Nk = space_->n_cell_scalar();
  double total = 0.0;
  for (int e = 0; e < space_->mesh().n_elements(); ++e) {
    const ElementTables& tab = space_->tables(e);
    const int off = space_->cell_offset(e);
    for (int q = 0; q < tab.quad.size(); ++q) {
      Vector2 vq;
      for (int i = 0; i < 2; ++i)
        vq[i] = tab.phi.col(q).dot(v.coeffs.segment(off + i * Nk, Nk));
      total += tab.quad.weights[q] * f(tab.quad.point(q)).dot(vq);
    }
  }
  return total;
}

Eigen::VectorXd Forms::load_local(const VectorField& f, int element_id) const
{
  const ElementTables& tab = space_->tables(element_id);
  const int Nk = space_->n_cell_scalar();
  Eigen::VectorXd out = Eigen::VectorXd::Zero(space_->local_size(element_id));
  for (int q = 0; q < tab.quad.size(); ++q) {
    const Vector2 fq = f(tab.quad.point(q));
    out.segment(0, Nk) += tab.quad.weights[q] * fq[0] * tab.phi.col(q);
    out.segment(Nk, Nk) += tab.quad.weights[q] * fq[1] * tab.phi.col(q);
  }
  return out;
}

LocalSystem Forms::linearized_local_system(const HybridVelocity& hat, int element_id,
                                           Linearization mode, double eps_reg) const
{
  const ElementTables& tab = space_->tables(element_id);
  const LocalOperators& op = space_->ops(element_id);
  const Mesh& mesh = space_->mesh();
  const int Nk = space_->n_cell_scalar();
  const int NF = space_->n_face_scalar();
  const int nloc = space_->local_size(element_id);
  const double h_T = mesh.element(element_id).diameter;

  const Eigen::VectorXd hloc = space_->gather_local(hat, element_id);
  const Eigen::VectorXd gh = op.gradient * hloc;       // frozen gradient coefficients
  const Eigen::VectorXd gsh = op.gradient_sym * hloc;

  // Frozen viscosity at tau = 0 for the Stokes initial system (mu when the
  // power law degenerates there).
  const double nu0 = stress_.delta > 0.0
                         ? capped_viscosity(stress_, Matrix2::Zero())
                         : stress_.mu;

  // ---- viscous block: Gs^T blockdiag(Wnu) Gs
  Eigen::MatrixXd Wnu = Eigen::MatrixXd::Zero(Nk, Nk);
  for (int q = 0; q < tab.quad.size(); ++q) {
    const double nu = mode == Linearization::StokesInitial
                          ? nu0
                          : capped_viscosity(stress_, tensor_at(gsh, tab.phi, Nk, q));
    Wnu.noalias() += tab.quad.weights[q] * nu * tab.phi.col(q) * tab.phi.col(q).transpose();
  }
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(nloc, nloc);
  for (int b = 0; b < 4; ++b) {
    const auto block = op.gradient_sym.block(b * Nk, 0, Nk, nloc);
    A.noalias() += block.transpose() * Wnu * block;
  }

  // ---- stabilization block: h_T R^T blockdiag(Wf) R per face
  const double prefactor = options_.stab_scaling * stress_.mu;
  const double w0 = stress_.delta > 0.0 ? std::pow(stress_.delta, stress_.r - 2.0) : 1.0;
  for (size_t fl = 0; fl < tab.faces.size(); ++fl) {
    const FaceTables& ft = tab.faces[fl];
    const QuadratureRule& fq = space_->face_quad(ft.face_id);
    const Eigen::VectorXd dh = op.residual[fl] * hloc;
    Eigen::MatrixXd Wf = Eigen::MatrixXd::Zero(NF, NF);
    for (int q = 0; q < fq.size(); ++q) {
      double weight = w0;
      if (mode == Linearization::AtState) {
        Vector2 dq;
        for (int i = 0; i < 2; ++i)
          dq[i] = ft.psi.col(q).dot(dh.segment(i * NF, NF));
        weight = stab_weight(stress_.delta, stress_.r, dq.norm());
      }
      Wf.noalias() += fq.weights[q] * weight * ft.psi.col(q) * ft.psi.col(q).transpose();
    }
    Wf *= prefactor * h_T;
    for (int i = 0; i < 2; ++i) {
      const auto rows = op.residual[fl].block(i * NF, 0, NF, nloc);
      A.noalias() += rows.transpose() * Wf * rows;
    }
  }

  // ---- linearized convection: chi and the |w|^-2 weight frozen at `hat`
  if (mode == Linearization::AtState && convection_.nu > 0.0) {
    const double s = convection_.s;
    const double s_conj = s / (s - 1.0);
    for (int q = 0; q < tab.quad.size(); ++q) {
      const double wq = tab.quad.weights[q];
      const Vector2 hq = cell_value_at(hloc, tab.phi, Nk, q);
      const Vector2 chi = convection_eval(convection_, hq);
      if (chi.isZero()) continue;

      // M1: dofs -> (G(.) chi) at the point; V: dofs -> cell values.
      Eigen::Matrix<double, 2, Eigen::Dynamic> M1(2, nloc), V(2, nloc);
      for (int i = 0; i < 2; ++i) {
        M1.row(i) = chi[0] * (tab.phi.col(q).transpose() * op.gradient.block((2 * i) * Nk, 0, Nk, nloc)) +
                    chi[1] * (tab.phi.col(q).transpose() * op.gradient.block((2 * i + 1) * Nk, 0, Nk, nloc));
        V.row(i).setZero();
        V.block(i, i * Nk, 1, Nk) = tab.phi.col(q).transpose();
      }

      A.noalias() += (wq / s) * V.transpose() * M1;
      A.noalias() -= (wq / s_conj) * M1.transpose() * V;

      const double hn = hq.norm();
      if (hn > eps_reg) {
        const Eigen::VectorXd a = V.transpose() * hq;
        const Eigen::VectorXd b = M1.transpose() * hq;
        A.noalias() += (wq * (s - 2.0) / (s * hn * hn)) * a * b.transpose();
      }
    }
  }

  return LocalSystem{std::move(A), coupling_[element_id]};
}

} // namespace hhons
