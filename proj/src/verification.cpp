#include "hhons/verification.hpp"

#include <cmath>

namespace hhons {

ExactSolution exact_fields(int d)
{
  if (d != 2) throw InvalidParameter("exact_fields: only d = 2 is supported");
  const double c = std::acos(-1.0) / 2.0;  // pi/2

  ExactSolution sol;
  sol.velocity = [c](const Vector2& x) { return Vector2(std::sin(c * x.y()), std::sin(c * x.x())); };
  sol.pressure = [c](const Vector2& x) {
    return std::sin(c * x.x()) * std::sin(c * x.y()) - 1.0 / (c * c);
  };
  sol.velocity_gradient = [c](const Vector2& x) {
    Matrix2 J;
    J << 0.0, c * std::cos(c * x.y()),
         c * std::cos(c * x.x()), 0.0;
    return J;
  };
  sol.velocity_hessian = [c](const Vector2& x) {
    std::array<Matrix2, 2> H;
    H[0].setZero();
    H[1].setZero();
    H[0](1, 1) = -c * c * std::sin(c * x.y());
    H[1](0, 0) = -c * c * std::sin(c * x.x());
    return H;
  };
  sol.pressure_gradient = [c](const Vector2& x) {
    return Vector2(c * std::cos(c * x.x()) * std::sin(c * x.y()),
                   c * std::sin(c * x.x()) * std::cos(c * x.y()));
  };
  return sol;
}

Vector2 source_term(const Vector2& x, const CarreauYasuda& stress, const LaplaceConvection& convection,
                    const ExactSolution& exact)
{
  Vector2 xs = x;
  if (convection.nu > 0.0 && convection.s < 2.0 && exact.velocity(xs).norm() < 1e-14)
    xs += Vector2::Constant(1e-12);

  const Matrix2 J = exact.velocity_gradient(xs);
  const std::array<Matrix2, 2> H = exact.velocity_hessian(xs);
  const Matrix2 eps = 0.5 * (J + J.transpose());

  // d_j (grad_s u)_kl = (H_k(j,l) + H_l(j,k)) / 2
  const Eigen::Matrix4d dsigma = stress_jacobian(stress, eps);
  Vector2 div_sigma = Vector2::Zero();
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      for (int k = 0; k < 2; ++k)
        for (int l = 0; l < 2; ++l)
          div_sigma[i] += dsigma(2 * i + j, 2 * k + l) * 0.5 * (H[k](j, l) + H[l](j, k));

  Vector2 convective = Vector2::Zero();
  if (convection.nu > 0.0) {
    const Vector2 u = exact.velocity(xs);
    convective = convection_jacobian(convection, u) * (J * u);  // (u . grad) chi(u)
  }

  return -div_sigma + convective + exact.pressure_gradient(xs);
}

ErrorRecord compute_errors(const VelocitySpace& space, const HybridVelocity& u_h,
                           const BrokenPressure& p_h, const ExactSolution& exact, double r)
{
  const double r_conj = Exponents::conjugate(r);

  const HybridVelocity iu = interpolate(space, exact.velocity);
  HybridVelocity diff = u_h;
  diff.coeffs -= iu.coeffs;

  const BrokenPressure pp = project_pressure(space, exact.pressure);
  Eigen::VectorXd pdiff = p_h.coeffs - pp.coeffs;

  ErrorRecord rec;
  rec.h = space.mesh().h();
  rec.err_u = norm_eps(space, diff, r);

  double perr = 0.0, pref = 0.0;
  for (int e = 0; e < space.mesh().n_elements(); ++e) {
    const ElementTables& tab = space.tables(e);
    const auto dseg = pdiff.segment(space.pressure_offset(e), space.pressure_block());
    const auto rseg = pp.coeffs.segment(space.pressure_offset(e), space.pressure_block());
    for (int q = 0; q < tab.quad.size(); ++q) {
      perr += tab.quad.weights[q] * std::pow(std::abs(tab.phi.col(q).dot(dseg)), r_conj);
      pref += tab.quad.weights[q] * std::pow(std::abs(tab.phi.col(q).dot(rseg)), r_conj);
    }
  }
  rec.err_p = std::pow(perr, 1.0 / r_conj);

  const double unorm = norm_eps(space, iu, r);
  rec.rel_err_u = unorm > 0.0 ? rec.err_u / unorm : rec.err_u;
  const double pnorm = std::pow(pref, 1.0 / r_conj);
  rec.rel_err_p = pnorm > 0.0 ? rec.err_p / pnorm : rec.err_p;
  return rec;
}

void fit_rates(RateTable& table)
{
  table.rates_u.clear();
  table.rates_p.clear();
  for (size_t i = 0; i + 1 < table.records.size(); ++i) {
    const ErrorRecord& a = table.records[i];
    const ErrorRecord& b = table.records[i + 1];
    if (!(b.h < a.h)) throw InvalidParameter("fit_rates: meshsizes must be strictly decreasing");
    const double lh = std::log(a.h / b.h);
    auto rate = [lh](double ea, double eb) {
      if (ea == 0.0 || eb == 0.0) return std::numeric_limits<double>::quiet_NaN();
      return std::log(ea / eb) / lh;  // negative when errors grow; never masked
    };
    table.rates_u.push_back(rate(a.err_u, b.err_u));
    table.rates_p.push_back(rate(a.err_p, b.err_p));
  }
}

RateTable run_convergence(const ConvergenceConfig& config)
{
  if (config.d != 2)
    throw InvalidParameter("run_convergence: d = " + std::to_string(config.d) +
                           " is not supported; only the d = 2 manufactured case is implemented");
  if (config.sizes.empty()) throw InvalidParameter("run_convergence: no refinement levels given");

  const double a = config.yasuda_a.value_or(config.r);
  const CarreauYasuda stress(config.mu, config.delta, a, config.r);
  const LaplaceConvection convection(config.nu, config.s);
  const ExactSolution exact = exact_fields(config.d);

  RateTable table;
  for (int n : config.sizes) {
    const Mesh mesh = config.family == ConvergenceConfig::MeshFamily::Triangular
                          ? build_triangular(n, config.distortion)
                          : build_cartesian(n, n);
    SpaceOptions opts;
    opts.quad_order = config.quad_order;
    const VelocitySpace space(mesh, config.k, opts);
    const Forms forms(space, stress, convection);

    const VectorField f = [&](const Vector2& x) { return source_term(x, stress, convection, exact); };
    const SolveResult result = picard_solve(forms, f, exact.velocity, config.picard);

    ErrorRecord rec = compute_errors(space, result.velocity, result.pressure, exact, config.r);
    rec.picard_iters = result.report.iterations;
    rec.converged = result.report.converged;
    table.records.push_back(rec);
  }
  fit_rates(table);
  return table;
}

} // namespace hhons
