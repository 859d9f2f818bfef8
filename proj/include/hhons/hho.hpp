// The HHO discrete velocity space: hybrid cell/face unknowns, the
// interpolator, the local reconstructions (gradient, symmetric gradient,
// divergence, potential, boundary residual) and the discrete norms.

#ifndef HHONS_HHO_HPP
#define HHONS_HHO_HPP

#include "hhons/basis.hpp"
#include "hhons/common.hpp"
#include "hhons/mesh.hpp"

#include <memory>
#include <vector>

namespace hhons {

struct SpaceOptions {
  int quad_order = -1;          // default 2k+4
  bool orthonormalize = false;  // Gram-Cholesky orthonormal bases behind the same interface
};

/// Per-face tables cached for one element side.
struct FaceTables {
  int face_id;
  double h_F;
  Vector2 normal;            // n_TF
  Eigen::MatrixXd psi;       // face basis values, N_F x nq
  Eigen::MatrixXd phi_k;     // cell P^k values at face points, N_k x nq
  Eigen::MatrixXd phi_k1;    // cell P^(k+1) values at face points
  Eigen::MatrixXd dphi_k1_n; // grad P^(k+1) . n_TF at face points
};

/// Per-element quadrature and basis-value tables.
struct ElementTables {
  QuadratureRule quad;
  ScalarBasis basis_k;   // P^k(T)
  ScalarBasis basis_k1;  // P^(k+1)(T)
  Eigen::MatrixXd phi;       // N_k x nq
  Eigen::MatrixXd dphi_x;    // N_k x nq
  Eigen::MatrixXd dphi_y;
  Eigen::MatrixXd phi1;      // N_k1 x nq
  Eigen::MatrixXd mass_k;    // Gram of P^k(T)
  Eigen::VectorXd mean_row_k;   // integrals of the P^k basis functions
  Eigen::VectorXd mean_row_k1;
  std::vector<FaceTables> faces;
};

/// Element-local matrices acting on the local hybrid vector
/// (cell comp0, cell comp1, face0 comp0, face0 comp1, ...).
/// Tensor-valued results store block (i,j) (with (G)_ij ~ d_j v_i) at row
/// offset (2i+j)*N_k.
struct LocalOperators {
  Eigen::MatrixXd gradient;              // G_T^k,    4 N_k  x nloc
  Eigen::MatrixXd gradient_sym;          // G_{s,T}^k, 4 N_k  x nloc
  Eigen::MatrixXd divergence;            // D_T^k,     N_k   x nloc
  Eigen::MatrixXd potential;             // r_T^{k+1}, 2 N_k1 x nloc
  std::vector<Eigen::MatrixXd> residual; // delta_dT^k per face, 2 N_F x nloc
};

/// Velocity vector of the hybrid space U_h^k: cell blocks first, then face
/// blocks, each blocked per component.
struct HybridVelocity {
  Eigen::VectorXd coeffs;
};

/// Element-wise pressure in P^k(T_h).
struct BrokenPressure {
  Eigen::VectorXd coeffs;
  bool zero_mean = false;
};

/// Discrete space of degree k >= 1 over a mesh; owns all cached tables and
/// local operators. Construction is per-element pure; instances are immutable
/// and safe to share across threads.
class VelocitySpace {
public:
  VelocitySpace(const Mesh& mesh, int k, SpaceOptions options = {});

  const Mesh& mesh() const { return *mesh_; }
  int degree() const { return k_; }
  int quad_order() const { return quad_order_; }

  int n_cell_scalar() const { return n_cell_scalar_; }     // dim P^k(T)
  int n_cell_scalar_hi() const { return n_cell_scalar_hi_; } // dim P^(k+1)(T)
  int n_face_scalar() const { return n_face_scalar_; }     // dim P^k(F)
  int cell_block() const { return 2 * n_cell_scalar_; }
  int face_block() const { return 2 * n_face_scalar_; }

  int n_cell_dofs() const { return mesh_->n_elements() * cell_block(); }
  int n_face_dofs() const { return mesh_->n_faces() * face_block(); }
  int dim() const { return n_cell_dofs() + n_face_dofs(); }

  int cell_offset(int element_id) const { return element_id * cell_block(); }
  int face_offset(int face_id) const { return n_cell_dofs() + face_id * face_block(); }

  int local_size(int element_id) const
  {
    return cell_block() + static_cast<int>(mesh_->element(element_id).face_ids.size()) * face_block();
  }

  /// Global dof indices of the local hybrid layout of element T.
  std::vector<int> local_to_global(int element_id) const;

  const ElementTables& tables(int element_id) const { return tables_[element_id]; }
  const LocalOperators& ops(int element_id) const { return ops_[element_id]; }
  const ScalarBasis& face_basis(int face_id) const { return face_bases_[face_id]; }
  const QuadratureRule& face_quad(int face_id) const { return face_quads_[face_id]; }

  HybridVelocity zero_velocity() const { return {Eigen::VectorXd::Zero(dim())}; }

  Eigen::VectorXd gather_local(const HybridVelocity& v, int element_id) const;

  /// Value of the cell polynomial of element T at x.
  Vector2 eval_cell(const HybridVelocity& v, int element_id, const Vector2& x) const;
  /// Value of the face polynomial of face F at x (x on the face).
  Vector2 eval_face(const HybridVelocity& v, int face_id, const Vector2& x) const;

  // Broken pressure space P^k(T_h).
  int pressure_block() const { return n_cell_scalar_; }
  int pressure_dim() const { return mesh_->n_elements() * pressure_block(); }
  int pressure_offset(int element_id) const { return element_id * pressure_block(); }
  BrokenPressure zero_pressure() const { return {Eigen::VectorXd::Zero(pressure_dim()), false}; }
  double eval_pressure(const BrokenPressure& p, int element_id, const Vector2& x) const;

private:
  const Mesh* mesh_;
  int k_;
  int quad_order_;
  bool orthonormalize_;
  int n_cell_scalar_, n_cell_scalar_hi_, n_face_scalar_;
  std::vector<ScalarBasis> face_bases_;
  std::vector<QuadratureRule> face_quads_;
  std::vector<ElementTables> tables_;
  std::vector<LocalOperators> ops_;

  void build_element(int element_id);
};

/// I_h^k: cell and face blocks are the component-wise L2 projections.
HybridVelocity interpolate(const VelocitySpace& space, const VectorField& u);

/// pi_h^k applied to a scalar pressure field; optionally shifts to zero mean.
BrokenPressure project_pressure(const VelocitySpace& space, const ScalarField& p, bool enforce_zero_mean = false);

double pressure_mean(const VelocitySpace& space, const BrokenPressure& p);

/// || v ||_{eps,m,h}: symmetric cell gradients plus scaled face differences.
double norm_eps(const VelocitySpace& space, const HybridVelocity& v, double m);
/// || v ||_{1,m,h}: same with the full cell gradient.
double norm_1(const VelocitySpace& space, const HybridVelocity& v, double m);
/// | v |_{r,h} = (sum_T h_T || delta_dT v ||^r_{L^r(dT)})^(1/r).
double seminorm_residual(const VelocitySpace& space, const HybridVelocity& v, double r);

/// Largest |v_h| over all element quadrature points (regularization scale).
double max_cell_value(const VelocitySpace& space, const HybridVelocity& v);

/// Sets all boundary-face blocks to zero (membership of U_{h,0}^k).
void zero_boundary_faces(const VelocitySpace& space, HybridVelocity& v);

} // namespace hhons

#endif
