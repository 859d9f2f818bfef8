#include "hhons/solver.hpp"

#include <chrono>
#include <cmath>
#include <iostream>

namespace hhons {

SystemLayout::SystemLayout(const Mesh& mesh, int k, bool condense)
    : condensed_(condense), k_(k), n_elements_(mesh.n_elements())
{
  if (k < 1) throw InvalidParameter("SystemLayout: k must be >= 1");
  interior_index_.assign(mesh.n_faces(), -1);
  int next = 0;
  for (int fid : mesh.interior_face_ids())
    interior_index_[fid] = next++;
  n_interior_faces_ = next;
}

SystemLayout build_layout(const Mesh& mesh, int k, bool condense)
{
  return SystemLayout(mesh, k, condense);
}

HybridVelocity apply_dirichlet(const VelocitySpace& space, const VectorField& g)
{
  HybridVelocity out = space.zero_velocity();
  const int NF = space.n_face_scalar();
  for (int fid : space.mesh().boundary_face_ids()) {
    for (int i = 0; i < 2; ++i) {
      const ScalarField comp = [&g, i](const Vector2& x) { return g(x)[i]; };
      out.coeffs.segment(space.face_offset(fid) + i * NF, NF) =
          l2_project(comp, space.face_basis(fid), space.face_quad(fid));
    }
  }
  return out;
}

namespace {

class EigenSparseLU final : public LinearSolver {
public:
  void factorize(const Eigen::SparseMatrix<double>& A) override
  {
    solver_.compute(A);
    if (solver_.info() != Eigen::Success)
      throw SolverError("sparse LU factorization failed");
  }

  Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const override
  {
    Eigen::VectorXd x = solver_.solve(rhs);
    if (solver_.info() != Eigen::Success)
      throw SolverError("sparse LU back-substitution failed");
    return x;
  }

private:
  Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> solver_;
};

/// Global system column of each local dof: >= 0 for unknowns, -1 for known
/// (Dirichlet) face dofs, -2 for condensed cell dofs.
std::vector<int> local_columns(const VelocitySpace& space, const SystemLayout& layout, int element_id)
{
  const Element& T = space.mesh().element(element_id);
  std::vector<int> cols;
  cols.reserve(space.local_size(element_id));
  for (int c = 0; c < space.cell_block(); ++c)
    cols.push_back(layout.condensed() ? -2 : layout.cell_base(element_id) + c);
  for (int fid : T.face_ids) {
    const int base = layout.interior_index(fid) >= 0 ? layout.face_base(fid) : -1;
    for (int c = 0; c < space.face_block(); ++c)
      cols.push_back(base >= 0 ? base + c : -1);
  }
  return cols;
}

} // namespace

std::unique_ptr<LinearSolver> make_sparse_lu()
{
  return std::make_unique<EigenSparseLU>();
}

AssembledSystem assemble(const Forms& forms, const SystemLayout& layout, const HybridVelocity& state,
                         const std::vector<Eigen::VectorXd>& loads, Linearization mode,
                         const BrokenPressure* p, double lambda)
{
  const VelocitySpace& space = forms.space();
  const Mesh& mesh = space.mesh();
  const int Np = space.pressure_block();
  const int n_cell = space.cell_block();
  const double eps_reg =
      mode == Linearization::AtState ? forms.convective_threshold(state) : 0.0;

  AssembledSystem out;
  out.rhs = Eigen::VectorXd::Zero(layout.size());
  std::vector<Eigen::Triplet<double>> trips;
  if (layout.condensed()) out.recovery.resize(mesh.n_elements());

  // Residual bookkeeping over the uncondensed dof set (faces, cells, pressure,
  // multiplier); cells are tracked per element since they never couple across.
  const bool want_residual = p != nullptr;
  Eigen::VectorXd res_faces, res_pressure;
  std::vector<double> res_cells;
  double res_multiplier = 0.0;
  if (want_residual) {
    res_faces = Eigen::VectorXd::Zero(layout.face_velocity_dofs());
    res_pressure = Eigen::VectorXd::Zero(layout.pressure_dofs());
    res_cells.assign(static_cast<size_t>(mesh.n_elements()) * n_cell, 0.0);
  }

  for (int e = 0; e < mesh.n_elements(); ++e) {
    const LocalSystem S = forms.linearized_local_system(state, e, mode, eps_reg);
    const Eigen::VectorXd& load = loads[e];
    const std::vector<int> cols = local_columns(space, layout, e);
    const int nloc = static_cast<int>(cols.size());
    const Eigen::VectorXd uloc = space.gather_local(state, e);
    const int pbase = layout.pressure_base(e);
    const int lam = layout.multiplier_index();
    const Eigen::VectorXd& mean_row = space.tables(e).mean_row_k;

    if (want_residual) {
      const Eigen::VectorXd pT = p->coeffs.segment(space.pressure_offset(e), Np);
      const Eigen::VectorXd rm = S.velocity * uloc + S.coupling.transpose() * pT - load;
      const Eigen::VectorXd rq = S.coupling * uloc + lambda * mean_row;
      for (int i = 0; i < n_cell; ++i)
        res_cells[static_cast<size_t>(e) * n_cell + i] += rm[i];
      // Face rows are indexed through the interior-face numbering regardless
      // of condensation; boundary faces are not in the test space.
      int li = n_cell;
      for (int fid : mesh.element(e).face_ids) {
        const int ii = layout.interior_index(fid);
        for (int c = 0; c < space.face_block(); ++c, ++li)
          if (ii >= 0) res_faces[ii * space.face_block() + c] += rm[li];
      }
      res_pressure.segment(e * Np, Np) += rq;
      res_multiplier += mean_row.dot(pT);
    }

    if (!layout.condensed()) {
      for (int i = 0; i < nloc; ++i) {
        const int gi = cols[i];
        if (gi < 0) continue;
        out.rhs[gi] += load[i];
        for (int j = 0; j < nloc; ++j) {
          const int gj = cols[j];
          if (gj >= 0)
            trips.emplace_back(gi, gj, S.velocity(i, j));
          else
            out.rhs[gi] -= S.velocity(i, j) * uloc[j];
        }
        for (int q = 0; q < Np; ++q)
          trips.emplace_back(gi, pbase + q, S.coupling(q, i));
      }
      for (int q = 0; q < Np; ++q) {
        for (int j = 0; j < nloc; ++j) {
          const int gj = cols[j];
          if (gj >= 0)
            trips.emplace_back(pbase + q, gj, S.coupling(q, j));
          else
            out.rhs[pbase + q] -= S.coupling(q, j) * uloc[j];
        }
        trips.emplace_back(pbase + q, lam, mean_row[q]);
        trips.emplace_back(lam, pbase + q, mean_row[q]);
      }
    } else {
      // Static condensation of the cell block.
      std::vector<int> fu;  // local indices of unknown face dofs
      for (int i = n_cell; i < nloc; ++i)
        if (cols[i] >= 0) fu.push_back(i);
      const int nf = static_cast<int>(fu.size());

      Eigen::MatrixXd A_cc = S.velocity.topLeftCorner(n_cell, n_cell);
      Eigen::MatrixXd A_cf(n_cell, nf), A_fc(nf, n_cell), A_ff(nf, nf);
      Eigen::VectorXd rhs_c = load.head(n_cell);
      Eigen::VectorXd rhs_f(nf);
      Eigen::MatrixXd B_c = S.coupling.leftCols(n_cell);
      Eigen::MatrixXd B_f(Np, nf);
      Eigen::VectorXd rhs_p = Eigen::VectorXd::Zero(Np);

      for (int a = 0; a < nf; ++a) {
        A_cf.col(a) = S.velocity.col(fu[a]).head(n_cell);
        A_fc.row(a) = S.velocity.row(fu[a]).head(n_cell);
        rhs_f[a] = load[fu[a]];
        for (int b = 0; b < nf; ++b) A_ff(a, b) = S.velocity(fu[a], fu[b]);
        B_f.col(a) = S.coupling.col(fu[a]);
      }
      // Move known (Dirichlet) face columns to the right-hand sides.
      for (int j = n_cell; j < nloc; ++j) {
        if (cols[j] != -1) continue;
        rhs_c -= S.velocity.col(j).head(n_cell) * uloc[j];
        for (int a = 0; a < nf; ++a) rhs_f[a] -= S.velocity(fu[a], j) * uloc[j];
        rhs_p -= S.coupling.col(j) * uloc[j];
      }

      Eigen::PartialPivLU<Eigen::MatrixXd> lu(A_cc);
      if (std::abs(lu.determinant()) < 1e-300)
        throw ConditioningError("singular cell block in static condensation", e);
      const Eigen::MatrixXd Xf = lu.solve(A_cf);
      const Eigen::MatrixXd Xp = lu.solve(Eigen::MatrixXd(B_c.transpose()));
      const Eigen::VectorXd xc = lu.solve(rhs_c);

      const Eigen::MatrixXd A_red = A_ff - A_fc * Xf;
      const Eigen::MatrixXd Bt_red = [&] {
        Eigen::MatrixXd M(nf, Np);
        for (int a = 0; a < nf; ++a) M.row(a) = B_f.col(a).transpose();
        return Eigen::MatrixXd(M - A_fc * Xp);
      }();
      const Eigen::VectorXd rf_red = rhs_f - A_fc * xc;
      const Eigen::MatrixXd Bmass_red = B_f - B_c * Xf;
      const Eigen::MatrixXd Pblock = -B_c * Xp;
      const Eigen::VectorXd rp_red = rhs_p - B_c * xc;

      CellRecovery rec;
      rec.Xf = Xf;
      rec.Xp = Xp;
      rec.xc = xc;
      rec.face_cols.reserve(nf);
      for (int a = 0; a < nf; ++a) rec.face_cols.push_back(cols[fu[a]]);

      for (int a = 0; a < nf; ++a) {
        const int ga = rec.face_cols[a];
        out.rhs[ga] += rf_red[a];
        for (int b = 0; b < nf; ++b)
          trips.emplace_back(ga, rec.face_cols[b], A_red(a, b));
        for (int q = 0; q < Np; ++q)
          trips.emplace_back(ga, pbase + q, Bt_red(a, q));
      }
      for (int q = 0; q < Np; ++q) {
        out.rhs[pbase + q] += rp_red[q];
        for (int b = 0; b < nf; ++b)
          trips.emplace_back(pbase + q, rec.face_cols[b], Bmass_red(q, b));
        for (int q2 = 0; q2 < Np; ++q2)
          trips.emplace_back(pbase + q, pbase + q2, Pblock(q, q2));
        trips.emplace_back(pbase + q, lam, mean_row[q]);
        trips.emplace_back(lam, pbase + q, mean_row[q]);
      }

      out.recovery[e] = std::move(rec);
    }
  }

  out.matrix.resize(layout.size(), layout.size());
  out.matrix.setFromTriplets(trips.begin(), trips.end());

  if (want_residual) {
    double sq = res_faces.squaredNorm() + res_pressure.squaredNorm() + res_multiplier * res_multiplier;
    for (double rc : res_cells) sq += rc * rc;
    out.residual_norm = std::sqrt(sq);
  }
  return out;
}

namespace {

/// Writes the solution vector back into hybrid/pressure unknowns; boundary
/// face blocks keep the Dirichlet values carried by `state`.
void scatter_solution(const VelocitySpace& space, const SystemLayout& layout,
                      const Eigen::VectorXd& x, const std::vector<CellRecovery>& recovery,
                      HybridVelocity& state, BrokenPressure& p, double& lambda)
{
  const Mesh& mesh = space.mesh();
  for (int fid : mesh.interior_face_ids())
    state.coeffs.segment(space.face_offset(fid), space.face_block()) =
        x.segment(layout.face_base(fid), layout.face_block());

  for (int e = 0; e < mesh.n_elements(); ++e)
    p.coeffs.segment(space.pressure_offset(e), space.pressure_block()) =
        x.segment(layout.pressure_base(e), layout.pressure_block());

  if (!layout.condensed()) {
    for (int e = 0; e < mesh.n_elements(); ++e)
      state.coeffs.segment(space.cell_offset(e), space.cell_block()) =
          x.segment(layout.cell_base(e), layout.cell_block());
  } else {
    for (int e = 0; e < mesh.n_elements(); ++e) {
      const CellRecovery& rec = recovery[e];
      Eigen::VectorXd uf(static_cast<int>(rec.face_cols.size()));
      for (int a = 0; a < uf.size(); ++a) uf[a] = x[rec.face_cols[a]];
      const Eigen::VectorXd pT = x.segment(layout.pressure_base(e), layout.pressure_block());
      state.coeffs.segment(space.cell_offset(e), space.cell_block()) =
          rec.xc - rec.Xf * uf - rec.Xp * pT;
    }
  }
  lambda = x[layout.multiplier_index()];
}

} // namespace

SolveResult picard_solve(const Forms& forms, const VectorField& f, const VectorField& g,
                         const PicardConfig& config, const HybridVelocity* provided_initial)
{
  using clock = std::chrono::steady_clock;
  const auto t_start = clock::now();
  auto seconds_since = [](clock::time_point t0) {
    return std::chrono::duration<double>(clock::now() - t0).count();
  };

  const VelocitySpace& space = forms.space();
  const Mesh& mesh = space.mesh();
  const SystemLayout layout(mesh, space.degree(), config.condense);

  {
    const ConditionReport rep = condition_report(forms.stress_law().r, forms.convection_law().s, 2, space.degree());
    if (!rep.consistency_ok)
      std::cerr << "[picard] warning: exponent pair (r=" << rep.r << ", s=" << rep.s
                << ") violates the consistency condition s <= r*/r'\n";
  }

  SolveResult result{space.zero_velocity(), space.zero_pressure(), {}};
  SolveReport& report = result.report;
  report.dof_counts.face_velocity = layout.face_velocity_dofs();
  report.dof_counts.cell_velocity = layout.cell_velocity_dofs();
  report.dof_counts.pressure = layout.pressure_dofs();
  report.dof_counts.system = layout.size();

  // Per-element load vectors are fixed across iterations.
  std::vector<Eigen::VectorXd> loads(mesh.n_elements());
  for (int e = 0; e < mesh.n_elements(); ++e)
    loads[e] = forms.load_local(f, e);

  const HybridVelocity lift = apply_dirichlet(space, g);
  HybridVelocity u = lift;  // boundary blocks stay fixed from here on
  BrokenPressure p = space.zero_pressure();
  double lambda = 0.0;

  auto solver = make_sparse_lu();
  double scale = 1.0;

  // Initial guess.
  if (config.initial_guess == PicardConfig::InitialGuess::Provided) {
    if (!provided_initial) throw SolverError("picard_solve: initial guess 'provided' but none given");
    u = *provided_initial;
  } else if (config.initial_guess == PicardConfig::InitialGuess::StokesLinear) {
    const auto t0 = clock::now();
    AssembledSystem sys = assemble(forms, layout, u, loads, Linearization::StokesInitial);
    report.time_assembly += seconds_since(t0);
    scale = std::max(sys.rhs.norm(), 1e-300);
    const auto t1 = clock::now();
    solver->factorize(sys.matrix);
    const Eigen::VectorXd x = solver->solve(sys.rhs);
    report.time_solve += seconds_since(t1);
    scatter_solution(space, layout, x, sys.recovery, u, p, lambda);
  }

  // Each iteration solves the system linearized at the current iterate, then
  // re-linearizes at the new one; that assembly doubles as the nonlinear
  // residual evaluation and as the next iteration's matrix.
  double theta = config.relaxation;
  double best_residual = std::numeric_limits<double>::infinity();
  HybridVelocity best_u = u;
  BrokenPressure best_p = p;

  const auto t_pre = clock::now();
  AssembledSystem sys = assemble(forms, layout, u, loads, Linearization::AtState, &p, lambda);
  report.time_assembly += seconds_since(t_pre);
  if (config.initial_guess != PicardConfig::InitialGuess::StokesLinear)
    scale = std::max(sys.rhs.norm(), 1e-300);

  for (int iter = 1; iter <= config.max_iters; ++iter) {
    const auto t1 = clock::now();
    solver->factorize(sys.matrix);
    const Eigen::VectorXd x = solver->solve(sys.rhs);
    report.time_solve += seconds_since(t1);

    HybridVelocity u_new = u;
    BrokenPressure p_new = p;
    double lambda_new = lambda;
    scatter_solution(space, layout, x, sys.recovery, u_new, p_new, lambda_new);
    if (theta < 1.0) {
      u_new.coeffs = theta * u_new.coeffs + (1.0 - theta) * u.coeffs;
      p_new.coeffs = theta * p_new.coeffs + (1.0 - theta) * p.coeffs;
      lambda_new = theta * lambda_new + (1.0 - theta) * lambda;
    }
    u = std::move(u_new);
    p = std::move(p_new);
    lambda = lambda_new;

    const auto t2 = clock::now();
    sys = assemble(forms, layout, u, loads, Linearization::AtState, &p, lambda);
    report.time_assembly += seconds_since(t2);
    const double rel = sys.residual_norm / scale;
    report.residual_history.push_back(rel);
    report.iterations = iter;
    if (config.verbose)
      std::cerr << "[picard] iter " << iter << "  rel residual " << rel << "  theta " << theta << "\n";

    if (rel < best_residual) {
      best_residual = rel;
      best_u = u;
      best_p = p;
    }
    if (rel <= config.tolerance) {
      report.converged = true;
      break;
    }
    if (report.residual_history.size() >= 2 &&
        rel > report.residual_history[report.residual_history.size() - 2])
      theta = std::max(theta / 2.0, 0.125);
  }

  if (!report.converged) {
    result.velocity = std::move(best_u);
    result.pressure = std::move(best_p);
  } else {
    result.velocity = std::move(u);
    result.pressure = std::move(p);
  }
  result.pressure.zero_mean = true;
  report.time_total = seconds_since(t_start);
  return result;
}

} // namespace hhons
