#include "hhons/hho.hpp"

#include <cmath>

namespace hhons {

VelocitySpace::VelocitySpace(const Mesh& mesh, int k, SpaceOptions options)
    : mesh_(&mesh), k_(k), orthonormalize_(options.orthonormalize)
{
  if (k < 1) throw InvalidParameter("VelocitySpace: polynomial degree k must be >= 1");
  quad_order_ = options.quad_order > 0 ? options.quad_order : 2 * k + 4;

  n_cell_scalar_ = (k + 1) * (k + 2) / 2;
  n_cell_scalar_hi_ = (k + 2) * (k + 3) / 2;
  n_face_scalar_ = k + 1;

  // Operator-defining integrals involve products of P^(k+1) polynomials.
  const int op_order = std::max(quad_order_, 2 * k + 2);

  face_bases_.reserve(mesh.n_faces());
  face_quads_.reserve(mesh.n_faces());
  for (int f = 0; f < mesh.n_faces(); ++f) {
    face_bases_.push_back(ScalarBasis::on_face(mesh, f, k, orthonormalize_));
    face_quads_.push_back(face_quadrature(mesh, f, op_order));
  }

  tables_.resize(mesh.n_elements());
  ops_.resize(mesh.n_elements());
  for (int e = 0; e < mesh.n_elements(); ++e)
    build_element(e);
}

void VelocitySpace::build_element(int element_id)
{
  const Element& T = mesh_->element(element_id);
  const int op_order = std::max(quad_order_, 2 * k_ + 2);
  const int Nk = n_cell_scalar_;
  const int Nk1 = n_cell_scalar_hi_;
  const int NF = n_face_scalar_;
  const int n_faces = static_cast<int>(T.face_ids.size());

  ElementTables& tab = tables_[element_id];
  tab.quad = element_quadrature(*mesh_, element_id, op_order);
  tab.basis_k = ScalarBasis::on_element(*mesh_, element_id, k_, orthonormalize_);
  tab.basis_k1 = ScalarBasis::on_element(*mesh_, element_id, k_ + 1, orthonormalize_);

  const int nq = tab.quad.size();
  tab.phi.resize(Nk, nq);
  tab.dphi_x.resize(Nk, nq);
  tab.dphi_y.resize(Nk, nq);
  tab.phi1.resize(Nk1, nq);
  Eigen::MatrixXd dphi1_x(Nk1, nq), dphi1_y(Nk1, nq);
  for (int q = 0; q < nq; ++q) {
    const Vector2 x = tab.quad.point(q);
    tab.phi.col(q) = tab.basis_k.eval(x);
    const Eigen::Matrix2Xd g = tab.basis_k.eval_gradient(x);
    tab.dphi_x.col(q) = g.row(0);
    tab.dphi_y.col(q) = g.row(1);
    tab.phi1.col(q) = tab.basis_k1.eval(x);
    const Eigen::Matrix2Xd g1 = tab.basis_k1.eval_gradient(x);
    dphi1_x.col(q) = g1.row(0);
    dphi1_y.col(q) = g1.row(1);
  }

  // Cell Gram/mass and mean rows.
  tab.mass_k = Eigen::MatrixXd::Zero(Nk, Nk);
  Eigen::MatrixXd mass_k1 = Eigen::MatrixXd::Zero(Nk1, Nk1);
  Eigen::MatrixXd stiff_k1 = Eigen::MatrixXd::Zero(Nk1, Nk1);
  Eigen::MatrixXd mixed_k_k1 = Eigen::MatrixXd::Zero(Nk, Nk1);  // int phi^k phi^(k+1)
  tab.mean_row_k = Eigen::VectorXd::Zero(Nk);
  tab.mean_row_k1 = Eigen::VectorXd::Zero(Nk1);
  for (int q = 0; q < nq; ++q) {
    const double w = tab.quad.weights[q];
    tab.mass_k.noalias() += w * tab.phi.col(q) * tab.phi.col(q).transpose();
    mass_k1.noalias() += w * tab.phi1.col(q) * tab.phi1.col(q).transpose();
    stiff_k1.noalias() += w * (dphi1_x.col(q) * dphi1_x.col(q).transpose() +
                               dphi1_y.col(q) * dphi1_y.col(q).transpose());
    mixed_k_k1.noalias() += w * tab.phi.col(q) * tab.phi1.col(q).transpose();
    tab.mean_row_k += w * tab.phi.col(q);
    tab.mean_row_k1 += w * tab.phi1.col(q);
  }

  tab.faces.resize(n_faces);
  for (int fl = 0; fl < n_faces; ++fl) {
    const int fid = T.face_ids[fl];
    const Face& F = mesh_->face(fid);
    const QuadratureRule& fq = face_quads_[fid];
    FaceTables& ft = tab.faces[fl];
    ft.face_id = fid;
    ft.h_F = F.diameter;
    ft.normal = F.normal_from(element_id);
    const int nqf = fq.size();
    ft.psi.resize(NF, nqf);
    ft.phi_k.resize(Nk, nqf);
    ft.phi_k1.resize(Nk1, nqf);
    ft.dphi_k1_n.resize(Nk1, nqf);
    for (int q = 0; q < nqf; ++q) {
      const Vector2 x = fq.point(q);
      ft.psi.col(q) = face_bases_[fid].eval(x);
      ft.phi_k.col(q) = tab.basis_k.eval(x);
      ft.phi_k1.col(q) = tab.basis_k1.eval(x);
      ft.dphi_k1_n.col(q) = tab.basis_k1.eval_gradient(x).transpose() * ft.normal;
    }
  }

  // ----- scalar-valued operators on the scalar local layout (cell, then faces)
  const int nloc_s = Nk + n_faces * NF;

  // Gradient: for each direction j, M_k X_j = B_j.
  std::array<Eigen::MatrixXd, 2> B;
  B[0] = Eigen::MatrixXd::Zero(Nk, nloc_s);
  B[1] = Eigen::MatrixXd::Zero(Nk, nloc_s);
  for (int q = 0; q < nq; ++q) {
    const double w = tab.quad.weights[q];
    B[0].block(0, 0, Nk, Nk).noalias() += w * tab.phi.col(q) * tab.dphi_x.col(q).transpose();
    B[1].block(0, 0, Nk, Nk).noalias() += w * tab.phi.col(q) * tab.dphi_y.col(q).transpose();
  }
  for (int fl = 0; fl < n_faces; ++fl) {
    const FaceTables& ft = tab.faces[fl];
    const QuadratureRule& fq = face_quads_[ft.face_id];
    Eigen::MatrixXd face_cell = Eigen::MatrixXd::Zero(Nk, Nk);   // int_F phi_m phi_c
    Eigen::MatrixXd face_face = Eigen::MatrixXd::Zero(Nk, NF);   // int_F phi_m psi_b
    for (int q = 0; q < fq.size(); ++q) {
      const double w = fq.weights[q];
      face_cell.noalias() += w * ft.phi_k.col(q) * ft.phi_k.col(q).transpose();
      face_face.noalias() += w * ft.phi_k.col(q) * ft.psi.col(q).transpose();
    }
    for (int j = 0; j < 2; ++j) {
      B[j].block(0, 0, Nk, Nk) -= ft.normal[j] * face_cell;
      B[j].block(0, Nk + fl * NF, Nk, NF) += ft.normal[j] * face_face;
    }
  }

  Eigen::LLT<Eigen::MatrixXd> mass_llt(tab.mass_k);
  if (mass_llt.info() != Eigen::Success)
    throw ConditioningError("singular cell Gram matrix in gradient reconstruction", element_id);
  std::array<Eigen::MatrixXd, 2> grad_s;  // scalar gradient components
  grad_s[0] = mass_llt.solve(B[0]);
  grad_s[1] = mass_llt.solve(B[1]);

  // Potential r_T^{k+1} (scalar): stiffness solve with mean-value closure on
  // the constant row (whose stiffness row vanishes identically).
  Eigen::MatrixXd Bp = Eigen::MatrixXd::Zero(Nk1, nloc_s);
  for (int q = 0; q < nq; ++q) {
    const double w = tab.quad.weights[q];
    Bp.block(0, 0, Nk1, Nk).noalias() +=
        w * (dphi1_x.col(q) * tab.dphi_x.col(q).transpose() + dphi1_y.col(q) * tab.dphi_y.col(q).transpose());
  }
  for (int fl = 0; fl < n_faces; ++fl) {
    const FaceTables& ft = tab.faces[fl];
    const QuadratureRule& fq = face_quads_[ft.face_id];
    for (int q = 0; q < fq.size(); ++q) {
      const double w = fq.weights[q];
      Bp.block(0, 0, Nk1, Nk).noalias() -= w * ft.dphi_k1_n.col(q) * ft.phi_k.col(q).transpose();
      Bp.block(0, Nk + fl * NF, Nk1, NF).noalias() += w * ft.dphi_k1_n.col(q) * ft.psi.col(q).transpose();
    }
  }
  Eigen::MatrixXd closed = stiff_k1;
  closed.row(0) = tab.mean_row_k1.transpose();
  Bp.row(0).setZero();
  Bp.block(0, 0, 1, Nk) = tab.mean_row_k.transpose();
  Eigen::PartialPivLU<Eigen::MatrixXd> pot_lu(closed);
  if (std::abs(pot_lu.determinant()) < 1e-300)
    throw ConditioningError("singular stiffness matrix in potential reconstruction", element_id);
  const Eigen::MatrixXd pot_s = pot_lu.solve(Bp);  // N_k1 x nloc_s

  // Boundary residual per face (scalar):
  // delta|_F = h_T^{-1} [ Pi_F(r - v_F) - Pi_T^k(r - v_T)|_F ].
  const Eigen::MatrixXd proj_cell = mass_llt.solve(mixed_k_k1);  // Pi_T^k of P^(k+1), N_k x N_k1
  std::vector<Eigen::MatrixXd> res_s(n_faces);
  for (int fl = 0; fl < n_faces; ++fl) {
    const FaceTables& ft = tab.faces[fl];
    const QuadratureRule& fq = face_quads_[ft.face_id];
    Eigen::MatrixXd face_mass = Eigen::MatrixXd::Zero(NF, NF);
    Eigen::MatrixXd face_k1 = Eigen::MatrixXd::Zero(NF, Nk1);  // int_F psi phi^(k+1)
    Eigen::MatrixXd face_k = Eigen::MatrixXd::Zero(NF, Nk);    // int_F psi phi^k
    for (int q = 0; q < fq.size(); ++q) {
      const double w = fq.weights[q];
      face_mass.noalias() += w * ft.psi.col(q) * ft.psi.col(q).transpose();
      face_k1.noalias() += w * ft.psi.col(q) * ft.phi_k1.col(q).transpose();
      face_k.noalias() += w * ft.psi.col(q) * ft.phi_k.col(q).transpose();
    }
    Eigen::LLT<Eigen::MatrixXd> fm_llt(face_mass);
    if (fm_llt.info() != Eigen::Success)
      throw ConditioningError("singular face Gram matrix in boundary residual", ft.face_id);

    const Eigen::MatrixXd proj_face_k1 = fm_llt.solve(face_k1);  // Pi_F of P^(k+1)
    const Eigen::MatrixXd trace_cell_k = fm_llt.solve(face_k);   // P^k(T)|_F in the face basis

    Eigen::MatrixXd R = Eigen::MatrixXd::Zero(NF, nloc_s);
    R.noalias() += proj_face_k1 * pot_s;                     // Pi_F(r)
    R.block(0, Nk + fl * NF, NF, NF) -= Eigen::MatrixXd::Identity(NF, NF);  // - v_F
    R.noalias() -= trace_cell_k * (proj_cell * pot_s);       // - Pi_T^k(r)|_F
    R.block(0, 0, NF, Nk) += trace_cell_k;                   // + v_T|_F
    res_s[fl] = R / T.diameter;
  }

  // ----- embed the scalar operators into the vector-valued local layout
  const int nloc = 2 * Nk + n_faces * 2 * NF;
  auto vec_col = [&](int comp, int scalar_col) {
    if (scalar_col < Nk) return comp * Nk + scalar_col;
    const int fl = (scalar_col - Nk) / NF;
    const int off = (scalar_col - Nk) % NF;
    return 2 * Nk + fl * 2 * NF + comp * NF + off;
  };

  LocalOperators& op = ops_[element_id];
  op.gradient = Eigen::MatrixXd::Zero(4 * Nk, nloc);
  op.divergence = Eigen::MatrixXd::Zero(Nk, nloc);
  op.potential = Eigen::MatrixXd::Zero(2 * Nk1, nloc);
  op.residual.assign(n_faces, Eigen::MatrixXd::Zero(2 * NF, nloc));

  for (int i = 0; i < 2; ++i) {
    for (int s = 0; s < nloc_s; ++s) {
      const int col = vec_col(i, s);
      for (int j = 0; j < 2; ++j)
        op.gradient.block((2 * i + j) * Nk, col, Nk, 1) = grad_s[j].col(s);
      op.potential.block(i * Nk1, col, Nk1, 1) = pot_s.col(s);
      for (int fl = 0; fl < n_faces; ++fl)
        op.residual[fl].block(i * NF, col, NF, 1) = res_s[fl].col(s);
    }
  }

  // D_T^k = tr(G_T^k), an exact linear identity between the operator rows.
  op.divergence = op.gradient.topRows(Nk) + op.gradient.bottomRows(Nk);

  op.gradient_sym = op.gradient;
  const auto g01 = op.gradient.block(1 * Nk, 0, Nk, nloc);
  const auto g10 = op.gradient.block(2 * Nk, 0, Nk, nloc);
  op.gradient_sym.block(1 * Nk, 0, Nk, nloc) = 0.5 * (g01 + g10);
  op.gradient_sym.block(2 * Nk, 0, Nk, nloc) = op.gradient_sym.block(1 * Nk, 0, Nk, nloc);
}

std::vector<int> VelocitySpace::local_to_global(int element_id) const
{
  const Element& T = mesh_->element(element_id);
  std::vector<int> idx;
  idx.reserve(local_size(element_id));
  for (int c = 0; c < cell_block(); ++c)
    idx.push_back(cell_offset(element_id) + c);
  for (int fid : T.face_ids)
    for (int c = 0; c < face_block(); ++c)
      idx.push_back(face_offset(fid) + c);
  return idx;
}

Eigen::VectorXd VelocitySpace::gather_local(const HybridVelocity& v, int element_id) const
{
  const std::vector<int> idx = local_to_global(element_id);
  Eigen::VectorXd out(static_cast<int>(idx.size()));
  for (int i = 0; i < out.size(); ++i)
    out[i] = v.coeffs[idx[i]];
  return out;
}

Vector2 VelocitySpace::eval_cell(const HybridVelocity& v, int element_id, const Vector2& x) const
{
  const Eigen::VectorXd phi = tables_[element_id].basis_k.eval(x);
  const int off = cell_offset(element_id);
  Vector2 out;
  for (int i = 0; i < 2; ++i)
    out[i] = phi.dot(v.coeffs.segment(off + i * n_cell_scalar_, n_cell_scalar_));
  return out;
}

Vector2 VelocitySpace::eval_face(const HybridVelocity& v, int face_id, const Vector2& x) const
{
  const Eigen::VectorXd psi = face_bases_[face_id].eval(x);
  const int off = face_offset(face_id);
  Vector2 out;
  for (int i = 0; i < 2; ++i)
    out[i] = psi.dot(v.coeffs.segment(off + i * n_face_scalar_, n_face_scalar_));
  return out;
}

double VelocitySpace::eval_pressure(const BrokenPressure& p, int element_id, const Vector2& x) const
{
  const Eigen::VectorXd phi = tables_[element_id].basis_k.eval(x);
  return phi.dot(p.coeffs.segment(pressure_offset(element_id), pressure_block()));
}

HybridVelocity interpolate(const VelocitySpace& space, const VectorField& u)
{
  const Mesh& mesh = space.mesh();
  HybridVelocity out = space.zero_velocity();
  const int Nk = space.n_cell_scalar();
  const int NF = space.n_face_scalar();

  for (int e = 0; e < mesh.n_elements(); ++e) {
    const ElementTables& tab = space.tables(e);
    for (int i = 0; i < 2; ++i) {
      const ScalarField comp = [&u, i](const Vector2& x) { return u(x)[i]; };
      out.coeffs.segment(space.cell_offset(e) + i * Nk, Nk) = l2_project(comp, tab.basis_k, tab.quad);
    }
  }
  for (int f = 0; f < mesh.n_faces(); ++f) {
    for (int i = 0; i < 2; ++i) {
      const ScalarField comp = [&u, i](const Vector2& x) { return u(x)[i]; };
      out.coeffs.segment(space.face_offset(f) + i * NF, NF) =
          l2_project(comp, space.face_basis(f), space.face_quad(f));
    }
  }
  return out;
}

BrokenPressure project_pressure(const VelocitySpace& space, const ScalarField& p, bool enforce_zero_mean)
{
  BrokenPressure out = space.zero_pressure();
  for (int e = 0; e < space.mesh().n_elements(); ++e) {
    const ElementTables& tab = space.tables(e);
    out.coeffs.segment(space.pressure_offset(e), space.pressure_block()) = l2_project(p, tab.basis_k, tab.quad);
  }
  if (enforce_zero_mean) {
    const double mean = pressure_mean(space, out);
    double volume = 0.0;
    for (const Element& e : space.mesh().elements()) volume += e.measure;
    // Shift the projection of the constant back out of each element block.
    for (int e = 0; e < space.mesh().n_elements(); ++e) {
      const ElementTables& tab = space.tables(e);
      const Eigen::VectorXd one = l2_project([](const Vector2&) { return 1.0; }, tab.basis_k, tab.quad);
      out.coeffs.segment(space.pressure_offset(e), space.pressure_block()) -= (mean / volume) * one;
    }
    out.zero_mean = true;
  }
  return out;
}

double pressure_mean(const VelocitySpace& space, const BrokenPressure& p)
{
  double total = 0.0;
  for (int e = 0; e < space.mesh().n_elements(); ++e)
    total += space.tables(e).mean_row_k.dot(p.coeffs.segment(space.pressure_offset(e), space.pressure_block()));
  return total;
}

namespace {

/// Shared core of the (eps,m) and (1,m) seminorms.
double hybrid_norm(const VelocitySpace& space, const HybridVelocity& v, double m, bool symmetric_part)
{
  if (!(m > 1.0) || !std::isfinite(m)) throw InvalidParameter("norm exponent must lie in (1,inf)");
  const Mesh& mesh = space.mesh();
  const int Nk = space.n_cell_scalar();
  const int NF = space.n_face_scalar();

  double total = 0.0;
  for (int e = 0; e < mesh.n_elements(); ++e) {
    const ElementTables& tab = space.tables(e);
    const int off = space.cell_offset(e);
    const Eigen::VectorXd c0 = v.coeffs.segment(off, Nk);
    const Eigen::VectorXd c1 = v.coeffs.segment(off + Nk, Nk);

    for (int q = 0; q < tab.quad.size(); ++q) {
      Matrix2 grad;
      grad(0, 0) = tab.dphi_x.col(q).dot(c0);
      grad(0, 1) = tab.dphi_y.col(q).dot(c0);
      grad(1, 0) = tab.dphi_x.col(q).dot(c1);
      grad(1, 1) = tab.dphi_y.col(q).dot(c1);
      if (symmetric_part) grad = 0.5 * (grad + grad.transpose()).eval();
      total += tab.quad.weights[q] * std::pow(grad.norm(), m);
    }

    for (size_t fl = 0; fl < tab.faces.size(); ++fl) {
      const FaceTables& ft = tab.faces[fl];
      const QuadratureRule& fq = space.face_quad(ft.face_id);
      const int foff = space.face_offset(ft.face_id);
      double face_term = 0.0;
      for (int q = 0; q < fq.size(); ++q) {
        Vector2 diff;
        for (int i = 0; i < 2; ++i) {
          const double vF = ft.psi.col(q).dot(v.coeffs.segment(foff + i * NF, NF));
          const double vT = ft.phi_k.col(q).dot(v.coeffs.segment(off + i * Nk, Nk));
          diff[i] = vF - vT;
        }
        face_term += fq.weights[q] * std::pow(diff.norm(), m);
      }
      total += std::pow(ft.h_F, 1.0 - m) * face_term;
    }
  }
  return std::pow(total, 1.0 / m);
}

} // namespace

double norm_eps(const VelocitySpace& space, const HybridVelocity& v, double m)
{
  return hybrid_norm(space, v, m, true);
}

double norm_1(const VelocitySpace& space, const HybridVelocity& v, double m)
{
  return hybrid_norm(space, v, m, false);
}

double seminorm_residual(const VelocitySpace& space, const HybridVelocity& v, double r)
{
  if (!(r > 1.0) || !std::isfinite(r)) throw InvalidParameter("norm exponent must lie in (1,inf)");
  const Mesh& mesh = space.mesh();
  const int NF = space.n_face_scalar();

  double total = 0.0;
  for (int e = 0; e < mesh.n_elements(); ++e) {
    const ElementTables& tab = space.tables(e);
    const LocalOperators& op = space.ops(e);
    const Eigen::VectorXd vloc = space.gather_local(v, e);

    double boundary = 0.0;
    for (size_t fl = 0; fl < tab.faces.size(); ++fl) {
      const FaceTables& ft = tab.faces[fl];
      const QuadratureRule& fq = space.face_quad(ft.face_id);
      const Eigen::VectorXd delta = op.residual[fl] * vloc;  // 2 N_F coefficients
      for (int q = 0; q < fq.size(); ++q) {
        Vector2 val;
        for (int i = 0; i < 2; ++i)
          val[i] = ft.psi.col(q).dot(delta.segment(i * NF, NF));
        boundary += fq.weights[q] * std::pow(val.norm(), r);
      }
    }
    total += mesh.element(e).diameter * boundary;
  }
  return std::pow(total, 1.0 / r);
}

double max_cell_value(const VelocitySpace& space, const HybridVelocity& v)
{
  const int Nk = space.n_cell_scalar();
  double best = 0.0;
  for (int e = 0; e < space.mesh().n_elements(); ++e) {
    const ElementTables& tab = space.tables(e);
    const int off = space.cell_offset(e);
    for (int q = 0; q < tab.quad.size(); ++q) {
      Vector2 val;
      for (int i = 0; i < 2; ++i)
        val[i] = tab.phi.col(q).dot(v.coeffs.segment(off + i * Nk, Nk));
      best = std::max(best, val.norm());
    }
  }
  return best;
}

void zero_boundary_faces(const VelocitySpace& space, HybridVelocity& v)
{
  for (int fid : space.mesh().boundary_face_ids())
    v.coeffs.segment(space.face_offset(fid), space.face_block()).setZero();
}

} // namespace hhons
