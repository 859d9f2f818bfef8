// Discrete forms of the scheme: the viscous function a_h with its boundary
// stabilization s_h, the convective function c_h, the pressure-velocity
// coupling b_h, the load functional, and the Picard-linearized local systems.

#ifndef HHONS_FORMS_HPP
#define HHONS_FORMS_HPP

#include "hhons/hho.hpp"
#include "hhons/laws.hpp"

namespace hhons {

struct FormsOptions {
  /// Prefactor of the stabilization, in units of the consistency index mu
  /// (the analysis constants it stands in for are not computable).
  double stab_scaling = 1.0;
};

/// Element-local Picard-linearized system: the velocity-velocity block
/// (viscous + stabilization + linearized convection, coefficients frozen at
/// the linearization state) and the pressure coupling rows.
struct LocalSystem {
  Eigen::MatrixXd velocity;  // nloc x nloc
  Eigen::MatrixXd coupling;  // pressure_block x nloc, rows of b_h(., q) on T
};

/// Coefficient freeze for the local linearization.
enum class Linearization {
  AtState,       // nu_eff, chi, and the stabilization weight from the given state
  StokesInitial  // nu_eff at tau = 0 (mu for delta = 0), unit weight, convection off
};

class Forms {
public:
  Forms(const VelocitySpace& space, CarreauYasuda stress, LaplaceConvection convection,
        FormsOptions options = {});

  const VelocitySpace& space() const { return *space_; }
  const CarreauYasuda& stress_law() const { return stress_; }
  const LaplaceConvection& convection_law() const { return convection_; }
  double stab_scaling() const { return options_.stab_scaling; }

  /// a_h(w,v) = int sigma(G_s w) : G_s v + s_h(w,v).
  double viscous_value(const HybridVelocity& w, const HybridVelocity& v) const;

  /// s_h(w,v), the weighted boundary-residual stabilization.
  double stabilization_value(const HybridVelocity& w, const HybridVelocity& v) const;

  /// c_h(w,v), the non-dissipative convective function.
  double convective_value(const HybridVelocity& w, const HybridVelocity& v) const;

  /// b_h(v,q) = -int (D_h v) q.
  double coupling_value(const HybridVelocity& v, const BrokenPressure& q) const;

  /// int f . v_h over the cell unknowns.
  double load_value(const VectorField& f, const HybridVelocity& v) const;

  /// Local linearized system on element T, frozen at state `hat`.
  /// The regularization threshold eps_reg for the singular convective weight
  /// must be 1e-13 * (1 + max |hat_h|) as computed by convective_threshold().
  LocalSystem linearized_local_system(const HybridVelocity& hat, int element_id,
                                      Linearization mode = Linearization::AtState,
                                      double eps_reg = 0.0) const;

  /// Load vector over the local layout of T (cell rows only).
  Eigen::VectorXd load_local(const VectorField& f, int element_id) const;

  /// Pressure coupling rows of element T (state independent).
  const Eigen::MatrixXd& coupling_local(int element_id) const { return coupling_[element_id]; }

  double convective_threshold(const HybridVelocity& w) const
  {
    return 1e-13 * (1.0 + max_cell_value(*space_, w));
  }

private:
  const VelocitySpace* space_;
  CarreauYasuda stress_;
  LaplaceConvection convection_;
  FormsOptions options_;
  std::vector<Eigen::MatrixXd> coupling_;  // per element: -mass_k * divergence
};

} // namespace hhons

#endif
