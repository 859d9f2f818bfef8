// Global system layout, Dirichlet handling, static condensation, sparse
// assembly of the Picard-linearized saddle-point system with the zero-mean
// pressure constraint, and the Picard fixed-point loop.

#ifndef HHONS_SOLVER_HPP
#define HHONS_SOLVER_HPP

#include "hhons/forms.hpp"

#include <Eigen/Sparse>
#include <memory>

namespace hhons {

struct SolverError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Global dof layout: interior-face velocity blocks first (boundary faces are
/// eliminated by the Dirichlet data), then cell velocity blocks unless they
/// are statically condensed, then element pressure blocks, then one scalar
/// Lagrange multiplier for the zero-mean pressure constraint.
class SystemLayout {
public:
  SystemLayout(const Mesh& mesh, int k, bool condense);

  bool condensed() const { return condensed_; }
  int k() const { return k_; }
  int face_block() const { return 2 * (k_ + 1); }
  int cell_block() const { return (k_ + 1) * (k_ + 2); }
  int pressure_block() const { return (k_ + 1) * (k_ + 2) / 2; }

  int n_interior_faces() const { return n_interior_faces_; }
  int n_elements() const { return n_elements_; }

  int face_velocity_dofs() const { return n_interior_faces_ * face_block(); }
  int cell_velocity_dofs() const { return condensed_ ? 0 : n_elements_ * cell_block(); }
  int pressure_dofs() const { return n_elements_ * pressure_block(); }
  int size() const { return face_velocity_dofs() + cell_velocity_dofs() + pressure_dofs() + 1; }

  /// Position of the face among interior faces; -1 for boundary faces.
  int interior_index(int face_id) const { return interior_index_[face_id]; }
  int face_base(int face_id) const { return interior_index_[face_id] * face_block(); }
  int cell_base(int element_id) const
  {
    if (condensed_) throw SolverError("cell dofs are condensed out of this layout");
    return face_velocity_dofs() + element_id * cell_block();
  }
  int pressure_base(int element_id) const
  {
    return face_velocity_dofs() + cell_velocity_dofs() + element_id * pressure_block();
  }
  int multiplier_index() const { return size() - 1; }

private:
  bool condensed_;
  int k_;
  int n_elements_;
  int n_interior_faces_;
  std::vector<int> interior_index_;
};

SystemLayout build_layout(const Mesh& mesh, int k, bool condense);

/// Boundary face blocks set to the face-wise L2 projection of g; all other
/// coefficients zero. These values enter assembled right-hand sides as knowns.
HybridVelocity apply_dirichlet(const VelocitySpace& space, const VectorField& g);

/// Sparse direct solver behind an abstract interface.
class LinearSolver {
public:
  virtual ~LinearSolver() = default;
  virtual void factorize(const Eigen::SparseMatrix<double>& A) = 0;
  virtual Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const = 0;
};

std::unique_ptr<LinearSolver> make_sparse_lu();

/// Back-substitution data for one element's condensed cell block:
/// cells = xc - Xf * u_faces - Xp * p_T.
struct CellRecovery {
  std::vector<int> face_cols;  // global system columns of the unknown face dofs
  Eigen::MatrixXd Xf;
  Eigen::MatrixXd Xp;
  Eigen::VectorXd xc;
};

struct AssembledSystem {
  Eigen::SparseMatrix<double> matrix;
  Eigen::VectorXd rhs;
  std::vector<CellRecovery> recovery;  // per element; empty when uncondensed
  /// Nonlinear algebraic residual (absolute l2 norm) of the discrete problem
  /// at the linearization state, over the uncondensed dof set.
  double residual_norm = 0.0;
};

/// Assembles the Picard-linearized system at `state` (whose boundary face
/// blocks carry the Dirichlet values). `loads` holds per-element local load
/// vectors. When `p` is non-null the nonlinear residual at (state, p, lambda)
/// is evaluated from the same local systems.
AssembledSystem assemble(const Forms& forms, const SystemLayout& layout, const HybridVelocity& state,
                         const std::vector<Eigen::VectorXd>& loads,
                         Linearization mode = Linearization::AtState,
                         const BrokenPressure* p = nullptr, double lambda = 0.0);

struct PicardConfig {
  double tolerance = 1e-10;
  int max_iters = 200;
  double relaxation = 1.0;  // halved on residual increase, floor 1/8
  enum class InitialGuess { StokesLinear, Zero, Provided } initial_guess = InitialGuess::StokesLinear;
  bool condense = true;
  bool verbose = false;
};

struct DofCounts {
  int face_velocity = 0;
  int cell_velocity = 0;  // dofs retained in the global system
  int pressure = 0;
  int system = 0;
};

struct SolveReport {
  int iterations = 0;
  std::vector<double> residual_history;  // relative residual per Picard iterate
  bool converged = false;
  DofCounts dof_counts;
  double time_assembly = 0.0;
  double time_solve = 0.0;
  double time_total = 0.0;
};

struct SolveResult {
  HybridVelocity velocity;
  BrokenPressure pressure;
  SolveReport report;
};

/// Picard loop for the discrete problem with source f and Dirichlet datum g.
/// Each iterate solves the system assembled at the previous one; convergence
/// is declared on the relative nonlinear algebraic residual.
SolveResult picard_solve(const Forms& forms, const VectorField& f, const VectorField& g,
                         const PicardConfig& config = {},
                         const HybridVelocity* provided_initial = nullptr);

} // namespace hhons

#endif
