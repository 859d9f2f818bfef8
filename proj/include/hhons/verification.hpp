// Manufactured exact solution, its source term assembled from the law
// jacobians, error computation in the scheme's norms, and convergence-rate
// fitting over refinement families.

#ifndef HHONS_VERIFICATION_HPP
#define HHONS_VERIFICATION_HPP

#include "hhons/forms.hpp"
#include "hhons/solver.hpp"

#include <optional>

namespace hhons {

/// Closed-form velocity/pressure pair with first and second derivatives.
/// The velocity is divergence-free and the pressure has zero mean on the
/// unit square.
struct ExactSolution {
  VectorField velocity;
  ScalarField pressure;
  std::function<Matrix2(const Vector2&)> velocity_gradient;            // (i,j) -> d_j u_i
  std::function<std::array<Matrix2, 2>(const Vector2&)> velocity_hessian;  // [i](j,l) -> d_j d_l u_i
  VectorField pressure_gradient;
};

/// u(x) = (sin(pi x2/2), sin(pi x1/2)), p(x) = sin(pi x1/2) sin(pi x2/2) - 4/pi^2.
ExactSolution exact_fields(int d = 2);

/// f = -div sigma(grad_s u) + (u . grad) chi(u) + grad p at x, assembled by the
/// chain rule from the law jacobians and the exact derivatives. Points where
/// the convection jacobian is singular (u = 0 with s < 2) are nudged by 1e-12.
Vector2 source_term(const Vector2& x, const CarreauYasuda& stress, const LaplaceConvection& convection,
                    const ExactSolution& exact);

struct ErrorRecord {
  double h = 0.0;
  double err_u = 0.0;      // || u_h - I_h u ||_{eps,r,h}
  double err_p = 0.0;      // || p_h - pi_h p ||_{L^r'}
  double rel_err_u = 0.0;
  double rel_err_p = 0.0;
  int picard_iters = 0;
  bool converged = true;
};

ErrorRecord compute_errors(const VelocitySpace& space, const HybridVelocity& u_h,
                           const BrokenPressure& p_h, const ExactSolution& exact, double r);

struct RateTable {
  std::vector<ErrorRecord> records;   // meshsizes strictly decreasing
  std::vector<double> rates_u;        // between consecutive records
  std::vector<double> rates_p;
};

/// order_i = log(err_i/err_{i+1}) / log(h_i/h_{i+1}); zero errors flag as NaN.
void fit_rates(RateTable& table);

struct ConvergenceConfig {
  int d = 2;  // only 2 is implemented; 3 is rejected with an explicit message
  double r = 2.0;
  double s = 2.0;
  double delta = 1.0;
  double mu = 1.0;
  double nu = 1.0;
  std::optional<double> yasuda_a;  // defaults to r
  int k = 1;
  enum class MeshFamily { Triangular, Cartesian } family = MeshFamily::Triangular;
  double distortion = 0.3;               // triangular family only
  std::vector<int> sizes = {8, 16, 32, 64};
  int quad_order = -1;
  PicardConfig picard;
};

/// Solves the manufactured problem on each refinement level and fits rates.
RateTable run_convergence(const ConvergenceConfig& config);

} // namespace hhons

#endif
