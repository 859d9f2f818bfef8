#include "hhons/laws.hpp"

#include <cmath>

namespace hhons {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

double Exponents::conjugate(double m)
{
  if (m == 1.0) return kInf;
  if (m == kInf) return 1.0;
  return m / (m - 1.0);
}

double Exponents::sobolev(double m, int d)
{
  return m < d ? d * m / (d - m) : kInf;
}

Exponents::Exponents(double r_, double s_, int d_) : r(r_), s(s_), d(d_)
{
  if (!(r > 1.0) || !std::isfinite(r)) throw InvalidParameter("exponent r must lie in (1,inf)");
  if (!(s > 1.0) || !std::isfinite(s)) throw InvalidParameter("exponent s must lie in (1,inf)");
  if (d != 2 && d != 3) throw InvalidParameter("dimension must be 2 or 3");
  r_conj = conjugate(r);
  r_sing = singular(r);
  r_sob = sobolev(r, d);
  s_conj = conjugate(s);
  s_sing = singular(s);
}

CarreauYasuda::CarreauYasuda(double mu_, double delta_, double a_, double r_)
    : mu(mu_), delta(delta_), a(a_), r(r_)
{
  if (!(mu > 0.0)) throw InvalidParameter("Carreau-Yasuda: mu must be > 0");
  if (delta < 0.0) throw InvalidParameter("Carreau-Yasuda: delta must be >= 0");
  if (!(a > 0.0)) throw InvalidParameter("Carreau-Yasuda: a must be > 0");
  if (!(r > 1.0) || !std::isfinite(r)) throw InvalidParameter("Carreau-Yasuda: r must lie in (1,inf)");
}

Matrix2 stress_eval(const CarreauYasuda& law, const Matrix2& tau)
{
  const double norm = tau.norm();
  const double base = std::pow(law.delta, law.a) + std::pow(norm, law.a);
  if (base == 0.0) {
    // Pure power law at tau = 0: sigma(0) = 0 in the limit sense for every r.
    return Matrix2::Zero();
  }
  return law.mu * std::pow(base, (law.r - 2.0) / law.a) * tau;
}

double effective_viscosity(const CarreauYasuda& law, const Matrix2& tau)
{
  const double base = std::pow(law.delta, law.a) + std::pow(tau.norm(), law.a);
  if (base == 0.0)
    return law.r > 2.0 ? 0.0 : (law.r == 2.0 ? law.mu : kInf);
  return law.mu * std::pow(base, (law.r - 2.0) / law.a);
}

Eigen::Matrix4d stress_jacobian(const CarreauYasuda& law, const Matrix2& tau)
{
  const double norm = tau.norm();
  const double base = std::pow(law.delta, law.a) + std::pow(norm, law.a);

  if (norm == 0.0) {
    if (base == 0.0) {
      if (law.r < 2.0)
        throw SingularityError("stress_jacobian is singular at tau = 0 for delta = 0 and r < 2");
      if (law.r == 2.0) return law.mu * Eigen::Matrix4d::Identity();
      return Eigen::Matrix4d::Zero();
    }
    return effective_viscosity(law, tau) * Eigen::Matrix4d::Identity();
  }

  // nu(t) = mu (delta^a + t^a)^((r-2)/a), nu'(t) = mu (r-2) t^(a-1) (delta^a + t^a)^((r-2-a)/a)
  const double nu = law.mu * std::pow(base, (law.r - 2.0) / law.a);
  const double nu_prime = law.mu * (law.r - 2.0) * std::pow(norm, law.a - 1.0) *
                          std::pow(base, (law.r - 2.0 - law.a) / law.a);

  Eigen::Vector4d t;
  t << tau(0, 0), tau(0, 1), tau(1, 0), tau(1, 1);
  return nu * Eigen::Matrix4d::Identity() + (nu_prime / norm) * t * t.transpose();
}

LaplaceConvection::LaplaceConvection(double nu_, double s_) : nu(nu_), s(s_)
{
  if (nu < 0.0) throw InvalidParameter("Laplace convection: nu must be >= 0");
  if (!(s > 1.0) || !std::isfinite(s)) throw InvalidParameter("Laplace convection: s must lie in (1,inf)");
}

Vector2 convection_eval(const LaplaceConvection& law, const Vector2& w)
{
  if (law.nu == 0.0) return Vector2::Zero();
  const double norm = w.norm();
  if (norm == 0.0) return Vector2::Zero();  // chi(0) = 0 limit, valid for every s > 1
  return law.nu * std::pow(norm, law.s - 2.0) * w;
}

Matrix2 convection_jacobian(const LaplaceConvection& law, const Vector2& w)
{
  if (law.nu == 0.0) return Matrix2::Zero();
  const double norm = w.norm();
  if (norm == 0.0) {
    if (law.s < 2.0)
      throw SingularityError("convection_jacobian is singular at w = 0 for s < 2");
    if (law.s == 2.0) return law.nu * Matrix2::Identity();
    return Matrix2::Zero();
  }
  return law.nu * (std::pow(norm, law.s - 2.0) * Matrix2::Identity() +
                   (law.s - 2.0) * std::pow(norm, law.s - 4.0) * w * w.transpose());
}

ConditionReport condition_report(double r, double s, int d, int k)
{
  if (d != 2) throw InvalidParameter("condition_report: only d = 2 is supported");
  if (k < 1) throw InvalidParameter("condition_report: k must be >= 1");
  const Exponents exps(r, s, d);

  ConditionReport rep;
  rep.r = r;
  rep.s = s;
  rep.d = d;
  rep.k = k;

  const double ratio = exps.r_sob / exps.r_conj;  // r*/r'
  rep.consistency_ok = s <= ratio;
  rep.strict_consistency_ok = s < ratio;

  const double sing_ratio = Exponents::sobolev(exps.r_sing, d) / Exponents::conjugate(exps.r_sing);
  rep.uniqueness_interval_ok = (2.0 <= s) && (s <= sing_ratio);

  rep.error_estimate_ok = (r <= 2.0) && (2.0 <= s) && (s <= ratio);

  const double kp1 = static_cast<double>(k + 1);
  if (r <= 2.0) {
    // Shear-thinning (or Newtonian) prediction; outside the admissible s-interval
    // the generalized-Stokes theory predicts the same orders for r <= 2.
    rep.predicted_rate_velocity = {kp1 * (r - 1.0), kp1};
    rep.predicted_rate_pressure = {kp1 * (r - 1.0) * (r - 1.0), kp1 * (r - 1.0)};
    rep.stokes_fallback = !rep.error_estimate_ok;
  } else {
    const double rate = kp1 / (r - 1.0);
    rep.predicted_rate_velocity = {rate, rate};
    rep.predicted_rate_pressure = {rate, rate};
    rep.stokes_fallback = true;
  }
  return rep;
}

} // namespace hhons
