// Exponent calculus, the Carreau-Yasuda viscosity law and the (nu,s)-Laplace
// convection law with closed-form jacobians, and the admissibility /
// rate-prediction condition report.

#ifndef HHONS_LAWS_HPP
#define HHONS_LAWS_HPP

#include "hhons/common.hpp"

#include <limits>

namespace hhons {

/// Conjugate, singular, and Sobolev exponents of m (dimension d).
struct Exponents {
  double r;        // viscous Sobolev exponent, in (1,inf)
  double s;        // convective exponent, in (1,inf)
  int d;           // space dimension

  double r_conj;   // r' = r/(r-1)
  double r_sing;   // r~ = min(r,2)
  double r_sob;    // r* = d r/(d-r) if r < d, else +inf
  double s_conj;
  double s_sing;

  Exponents(double r_, double s_, int d_ = 2);

  static double conjugate(double m);
  static double singular(double m) { return std::min(m, 2.0); }
  static double sobolev(double m, int d);
};

/// (mu, delta, a, r)-Carreau-Yasuda stress: sigma(tau) = mu (delta^a + |tau|^a)^((r-2)/a) tau.
/// delta = 0 gives the pure power law.
struct CarreauYasuda {
  double mu = 1.0;     // consistency index, > 0
  double delta = 1.0;  // degeneracy parameter, >= 0
  double a = 2.0;      // Yasuda exponent, > 0
  double r = 2.0;      // Sobolev exponent, in (1,inf)

  CarreauYasuda(double mu_, double delta_, double a_, double r_);
};

/// sigma(tau) with the sigma(0) = 0 limit handled for the degenerate case.
Matrix2 stress_eval(const CarreauYasuda& law, const Matrix2& tau);

/// nu(tau) = mu (delta^a + |tau|^a)^((r-2)/a); +inf at tau = 0 when delta = 0 and r < 2.
double effective_viscosity(const CarreauYasuda& law, const Matrix2& tau);

/// Fourth-order tensor d sigma / d tau as a 4x4 matrix over the row-major
/// pairs (00,01,10,11): nu(tau) Id + nu'(|tau|)|tau|^{-1} tau (x) tau.
/// For r < 2 the jacobian is singular at tau = 0 with delta = 0 and a
/// SingularityError is thrown; for r >= 2 the degenerate limit is returned.
Eigen::Matrix4d stress_jacobian(const CarreauYasuda& law, const Matrix2& tau);

/// (nu, s)-Laplace convection: chi(w) = nu |w|^{s-2} w, chi(0) = 0.
struct LaplaceConvection {
  double nu = 1.0;  // convection index, >= 0
  double s = 2.0;   // convection behaviour index, in (1,inf)

  LaplaceConvection(double nu_, double s_);
};

Vector2 convection_eval(const LaplaceConvection& law, const Vector2& w);

/// d chi / d w = nu (|w|^{s-2} I + (s-2)|w|^{s-4} w (x) w). At w = 0 this is
/// zero for s >= 2 and singular for s < 2 (SingularityError).
Matrix2 convection_jacobian(const LaplaceConvection& law, const Vector2& w);

/// Closed interval of predicted convergence orders; lo == hi when the theory
/// pins a single rate.
struct RateInterval {
  double lo;
  double hi;
};

/// Computable admissibility conditions and predicted convergence rates for the
/// exponent pair (r,s) at polynomial degree k.
struct ConditionReport {
  double r, s;
  int d, k;

  bool consistency_ok;         // s <= r*/r'
  bool strict_consistency_ok;  // s <  r*/r'
  bool uniqueness_interval_ok; // 2 <= s <= r~*/r~'
  bool error_estimate_ok;      // r <= 2 <= s <= r*/r'

  RateInterval predicted_rate_velocity;
  RateInterval predicted_rate_pressure;
  bool stokes_fallback;  // rates come from the r > 2 generalized-Stokes prediction
};

ConditionReport condition_report(double r, double s, int d, int k);

} // namespace hhons

#endif
