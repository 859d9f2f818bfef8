#include "hhons/cli.hpp"
#include "hhons/vtk.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

namespace hhons {

namespace {

std::string fmt12(double v)
{
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

std::string interval_str(const RateInterval& iv)
{
  if (iv.lo == iv.hi) return fmt12(iv.lo);
  return "[" + fmt12(iv.lo) + ", " + fmt12(iv.hi) + "]";
}

void apply_config_json(const nlohmann::json& doc, RunConfig& cfg)
{
  static const std::vector<std::string> known = {"command", "r", "s", "delta", "mu", "nu",
                                                 "yasuda_a", "k", "mesh", "quad_order",
                                                 "picard", "output_dir"};
  for (const auto& [key, value] : doc.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end())
      throw InvalidParameter("unknown configuration key '" + key + "'");
    (void)value;
  }

  if (doc.contains("command")) cfg.command = doc["command"].get<std::string>();
  if (doc.contains("r")) cfg.r = doc["r"].get<double>();
  if (doc.contains("s")) cfg.s = doc["s"].get<double>();
  if (doc.contains("delta")) cfg.delta = doc["delta"].get<double>();
  if (doc.contains("mu")) cfg.mu = doc["mu"].get<double>();
  if (doc.contains("nu")) cfg.nu = doc["nu"].get<double>();
  if (doc.contains("yasuda_a")) cfg.yasuda_a = doc["yasuda_a"].get<double>();
  if (doc.contains("k")) cfg.k = doc["k"].get<int>();
  if (doc.contains("quad_order")) cfg.quad_order = doc["quad_order"].get<int>();
  if (doc.contains("output_dir")) cfg.output_dir = doc["output_dir"].get<std::string>();

  if (doc.contains("mesh")) {
    const auto& m = doc["mesh"];
    for (const auto& [key, value] : m.items()) {
      if (key != "type" && key != "n" && key != "path")
        throw InvalidParameter("unknown mesh key '" + key + "'");
      (void)value;
    }
    if (m.contains("type")) cfg.mesh.type = m["type"].get<std::string>();
    if (m.contains("n")) cfg.mesh.n = m["n"].get<int>();
    if (m.contains("path")) cfg.mesh.path = m["path"].get<std::string>();
  }
  if (doc.contains("picard")) {
    const auto& p = doc["picard"];
    for (const auto& [key, value] : p.items()) {
      if (key != "tol" && key != "max_iters" && key != "relaxation")
        throw InvalidParameter("unknown picard key '" + key + "'");
      (void)value;
    }
    if (p.contains("tol")) cfg.picard.tolerance = p["tol"].get<double>();
    if (p.contains("max_iters")) cfg.picard.max_iters = p["max_iters"].get<int>();
    if (p.contains("relaxation")) cfg.picard.relaxation = p["relaxation"].get<double>();
  }
}

void check_config(const RunConfig& cfg)
{
  if (cfg.k < 1) throw InvalidParameter("k must be >= 1");
  if (!(cfg.r > 1.0)) throw InvalidParameter("r must lie in (1,inf)");
  if (!(cfg.s > 1.0)) throw InvalidParameter("s must lie in (1,inf)");
  if (cfg.delta < 0.0) throw InvalidParameter("delta must be >= 0");
  if (!(cfg.mu > 0.0)) throw InvalidParameter("mu must be > 0");
  if (cfg.nu < 0.0) throw InvalidParameter("nu must be >= 0");
  if (!(cfg.picard.tolerance > 0.0)) throw InvalidParameter("picard tol must be > 0");
  if (cfg.mesh.type != "triangular" && cfg.mesh.type != "cartesian" && cfg.mesh.type != "file")
    throw InvalidParameter("mesh type must be triangular, cartesian, or file");
}

} // namespace

RunConfig parse_config(std::istream& in)
{
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidParameter(std::string("malformed JSON configuration: ") + e.what());
  }
  RunConfig cfg;
  apply_config_json(doc, cfg);
  check_config(cfg);
  return cfg;
}

RunConfig load_config(const std::string& path)
{
  std::ifstream in(path);
  if (!in) throw InvalidParameter("cannot open configuration file '" + path + "'");
  return parse_config(in);
}

void write_convergence_csv(std::ostream& out, const RateTable& table)
{
  out << "meshsize,erru,errp,rate_u,rate_p,picard_iters\n";
  for (size_t i = 0; i < table.records.size(); ++i) {
    const ErrorRecord& rec = table.records[i];
    out << fmt12(rec.h) << "," << fmt12(rec.err_u) << "," << fmt12(rec.err_p) << ",";
    if (i > 0) out << fmt12(table.rates_u[i - 1]);
    out << ",";
    if (i > 0) out << fmt12(table.rates_p[i - 1]);
    out << "," << rec.picard_iters << "\n";
  }
}

std::string format_condition_report(const ConditionReport& rep)
{
  const Exponents e(rep.r, rep.s, rep.d);
  const double ratio = e.r_sob / e.r_conj;
  const double sing_ratio = Exponents::sobolev(e.r_sing, rep.d) / Exponents::conjugate(e.r_sing);

  std::string out;
  out += "exponents: r = " + fmt12(rep.r) + ", r' = " + fmt12(e.r_conj) + ", r~ = " + fmt12(e.r_sing) +
         ", r* = " + fmt12(e.r_sob) + ", s = " + fmt12(rep.s) + ", s' = " + fmt12(e.s_conj) + "\n";
  out += "consistency: s = " + fmt12(rep.s) + " <= r*/r' = " + fmt12(ratio) + ": " +
         (rep.consistency_ok ? (rep.strict_consistency_ok ? "ok" : "ok (non-strict only)") : "violated") + "\n";
  out += "uniqueness interval: 2 <= s <= r~*/r~' = " + fmt12(sing_ratio) + ": " +
         (rep.uniqueness_interval_ok ? "ok" : "violated") + "\n";
  out += "error estimate: r <= 2 <= s <= r*/r': " + std::string(rep.error_estimate_ok ? "ok" : "violated") + "\n";
  out += "predicted rates (k = " + std::to_string(rep.k) + "): O_vel = " + interval_str(rep.predicted_rate_velocity) +
         ", O_pre = " + interval_str(rep.predicted_rate_pressure);
  if (rep.stokes_fallback) out += "  [generalized-Stokes prediction]";
  out += "\n";
  return out;
}

CenterlineProfile extract_centerlines(const VelocitySpace& space, const HybridVelocity& u, int n_samples)
{
  CenterlineProfile prof;
  prof.coords.resize(n_samples);
  prof.u1_vertical.resize(n_samples);
  prof.u2_horizontal.resize(n_samples);
  for (int i = 0; i < n_samples; ++i) {
    const double t = static_cast<double>(i) / (n_samples - 1);
    prof.coords[i] = t;
    const Vector2 xv(0.5, t);
    const Vector2 xh(t, 0.5);
    prof.u1_vertical[i] = space.eval_cell(u, space.mesh().locate(xv), xv)[0];
    prof.u2_horizontal[i] = space.eval_cell(u, space.mesh().locate(xh), xh)[1];
  }
  return prof;
}

void write_centerline_csv(std::ostream& out, const Eigen::VectorXd& coords,
                          const Eigen::VectorXd& values, const std::string& coord_name,
                          const std::string& value_name)
{
  out << coord_name << "," << value_name << "\n";
  for (int i = 0; i < coords.size(); ++i)
    out << fmt12(coords[i]) << "," << fmt12(values[i]) << "\n";
}

namespace {

int cmd_check(const RunConfig& cfg)
{
  const ConditionReport rep = condition_report(cfg.r, cfg.s, 2, cfg.k);
  std::cout << format_condition_report(rep);
  return 0;
}

ConvergenceConfig to_convergence_config(const RunConfig& cfg)
{
  ConvergenceConfig c;
  c.r = cfg.r;
  c.s = cfg.s;
  c.delta = cfg.delta;
  c.mu = cfg.mu;
  c.nu = cfg.nu;
  c.yasuda_a = cfg.yasuda_a;
  c.k = cfg.k;
  c.quad_order = cfg.quad_order;
  c.picard = cfg.picard;
  c.distortion = cfg.distortion;
  if (cfg.mesh.type == "cartesian")
    c.family = ConvergenceConfig::MeshFamily::Cartesian;
  else if (cfg.mesh.type == "triangular")
    c.family = ConvergenceConfig::MeshFamily::Triangular;
  else
    throw InvalidParameter("convergence studies need a generated mesh family (triangular or cartesian)");
  c.sizes.clear();
  int n = cfg.mesh.n;
  for (int l = 0; l < cfg.levels; ++l, n *= 2)
    c.sizes.push_back(n);
  return c;
}

int cmd_convergence(const RunConfig& cfg)
{
  const RateTable table = run_convergence(to_convergence_config(cfg));

  std::filesystem::create_directories(cfg.output_dir);
  const std::string path = cfg.output_dir + "/convergence.csv";
  std::ofstream out(path);
  write_convergence_csv(out, table);
  write_convergence_csv(std::cout, table);
  std::cout << "wrote " << path << "\n";

  for (const ErrorRecord& rec : table.records)
    if (!rec.converged) {
      std::cerr << "error: Picard did not converge on level h = " << rec.h << "\n";
      return 1;
    }
  return 0;
}

Mesh make_mesh(const RunConfig& cfg)
{
  if (cfg.mesh.type == "cartesian") return build_cartesian(cfg.mesh.n, cfg.mesh.n);
  if (cfg.mesh.type == "triangular") return build_triangular(cfg.mesh.n, cfg.distortion);
  return read_mesh(cfg.mesh.path);
}

int cmd_cavity(RunConfig cfg)
{
  if (cfg.reynolds) cfg.mu = 2.0 / *cfg.reynolds;
  if (cfg.mesh.type != "cartesian")
    cfg.mesh.type = "cartesian";

  const Mesh mesh = build_cartesian(cfg.mesh.n, cfg.mesh.n);
  SpaceOptions opts;
  opts.quad_order = cfg.quad_order;
  const VelocitySpace space(mesh, cfg.k, opts);
  const CarreauYasuda stress(cfg.mu, cfg.delta, cfg.yasuda_a.value_or(cfg.r), cfg.r);
  const LaplaceConvection convection(cfg.nu, cfg.s);
  const Forms forms(space, stress, convection);

  const VectorField lid = [](const Vector2& x) {
    return x.y() >= 1.0 - 1e-12 ? Vector2(1.0, 0.0) : Vector2(0.0, 0.0);
  };
  const VectorField zero_f = [](const Vector2&) { return Vector2(0.0, 0.0); };

  std::cout << "cavity: " << cfg.mesh.n << "x" << cfg.mesh.n << " Cartesian, k = " << cfg.k
            << ", r = " << cfg.r << ", s = " << cfg.s << ", mu = " << cfg.mu << "\n";
  const SolveResult result = picard_solve(forms, zero_f, lid, cfg.picard);
  std::cout << "face-velocity dofs: " << result.report.dof_counts.face_velocity
            << ", picard iterations: " << result.report.iterations
            << (result.report.converged ? " (converged)" : " (NOT converged)") << "\n";

  std::filesystem::create_directories(cfg.output_dir);
  write_vtk(cfg.output_dir + "/cavity.vtk", space, result.velocity, result.pressure, "lid-driven cavity");
  const CenterlineProfile prof = extract_centerlines(space, result.velocity);
  {
    std::ofstream out(cfg.output_dir + "/centerline_u1.csv");
    write_centerline_csv(out, prof.coords, prof.u1_vertical, "x2", "u1");
  }
  {
    std::ofstream out(cfg.output_dir + "/centerline_u2.csv");
    write_centerline_csv(out, prof.coords, prof.u2_horizontal, "x1", "u2");
  }
  std::cout << "wrote " << cfg.output_dir << "/cavity.vtk and centerline CSVs\n";
  return result.report.converged ? 0 : 1;
}

int cmd_solve(const RunConfig& cfg)
{
  const Mesh mesh = make_mesh(cfg);
  SpaceOptions opts;
  opts.quad_order = cfg.quad_order;
  const VelocitySpace space(mesh, cfg.k, opts);
  const CarreauYasuda stress(cfg.mu, cfg.delta, cfg.yasuda_a.value_or(cfg.r), cfg.r);
  const LaplaceConvection convection(cfg.nu, cfg.s);
  const Forms forms(space, stress, convection);
  const ExactSolution exact = exact_fields(2);

  VectorField f = [](const Vector2&) { return Vector2(0.0, 0.0); };
  if (cfg.load == "manufactured")
    f = [&](const Vector2& x) { return source_term(x, stress, convection, exact); };
  else if (cfg.load != "zero")
    throw InvalidParameter("load must be zero or manufactured");

  VectorField g = [](const Vector2&) { return Vector2(0.0, 0.0); };
  if (cfg.bc == "exact")
    g = exact.velocity;
  else if (cfg.bc == "lid")
    g = [](const Vector2& x) { return x.y() >= 1.0 - 1e-12 ? Vector2(1.0, 0.0) : Vector2(0.0, 0.0); };
  else if (cfg.bc != "zero")
    throw InvalidParameter("bc must be zero, exact, or lid");

  const SolveResult result = picard_solve(forms, f, g, cfg.picard);
  std::cout << "picard iterations: " << result.report.iterations
            << (result.report.converged ? " (converged)" : " (NOT converged)") << "\n";

  if (cfg.bc == "exact" && cfg.load == "manufactured") {
    const ErrorRecord rec = compute_errors(space, result.velocity, result.pressure, exact, cfg.r);
    std::cout << "erru " << fmt12(rec.err_u) << "  errp " << fmt12(rec.err_p) << "\n";
  }

  std::filesystem::create_directories(cfg.output_dir);
  write_vtk(cfg.output_dir + "/solve.vtk", space, result.velocity, result.pressure, "hhons solve");
  std::cout << "wrote " << cfg.output_dir << "/solve.vtk\n";
  return result.report.converged ? 0 : 1;
}

void add_common_options(CLI::App* sub, RunConfig& cfg, std::string& config_path)
{
  sub->add_option("--config", config_path, "JSON configuration file");
  sub->add_option("--r", cfg.r, "viscous Sobolev exponent");
  sub->add_option("--s", cfg.s, "convective exponent");
  sub->add_option("--delta", cfg.delta, "Carreau-Yasuda degeneracy parameter");
  sub->add_option("--mu", cfg.mu, "consistency index");
  sub->add_option("--nu", cfg.nu, "convection index");
  sub->add_option("--yasuda-a", [&cfg](const std::vector<std::string>& v) {
    cfg.yasuda_a = std::stod(v[0]);
    return true;
  }, "Yasuda exponent (defaults to r)");
  sub->add_option("--k", cfg.k, "polynomial degree");
  sub->add_option("--n", cfg.mesh.n, "base mesh size");
  sub->add_option("--mesh-type", cfg.mesh.type, "triangular | cartesian | file");
  sub->add_option("--mesh-file", cfg.mesh.path, "polygonal mesh file (mesh-type file)");
  sub->add_option("--quad-order", cfg.quad_order, "quadrature order (default 2k+4)");
  sub->add_option("--tol", cfg.picard.tolerance, "Picard tolerance");
  sub->add_option("--max-iters", cfg.picard.max_iters, "Picard iteration cap");
  sub->add_option("--relaxation", cfg.picard.relaxation, "initial Picard relaxation");
  sub->add_option("--distortion", cfg.distortion, "triangular mesh distortion in [0,1)");
  sub->add_option("--output-dir", cfg.output_dir, "output directory");
  sub->add_flag_callback("--verbose", [&cfg]() { cfg.picard.verbose = true; }, "per-iteration output");
  sub->add_flag_callback("--no-condense", [&cfg]() { cfg.picard.condense = false; },
                         "keep cell unknowns in the global system");
}

} // namespace

int run_cli(int argc, const char* const* argv)
{
  CLI::App app{"HHO solver for generalized incompressible Navier-Stokes flows"};
  app.require_subcommand(1);

  RunConfig cfg;
  std::string config_path;

  auto* check = app.add_subcommand("check", "exponent admissibility and predicted rates");
  auto* conv = app.add_subcommand("convergence", "manufactured-solution convergence study");
  auto* cavity = app.add_subcommand("cavity", "lid-driven cavity benchmark");
  auto* solve = app.add_subcommand("solve", "single solve on a given mesh");

  add_common_options(check, cfg, config_path);
  add_common_options(conv, cfg, config_path);
  add_common_options(cavity, cfg, config_path);
  add_common_options(solve, cfg, config_path);

  conv->add_option("--levels", cfg.levels, "number of refinement levels");
  cavity->add_option("--re", [&cfg](const std::vector<std::string>& v) {
    cfg.reynolds = std::stod(v[0]);
    return true;
  }, "Reynolds number (sets mu = 2/Re)");
  solve->add_option("--bc", cfg.bc, "boundary datum: zero | exact | lid");
  solve->add_option("--load", cfg.load, "source term: zero | manufactured");

  // Cavity defaults mirror the reference setup.
  cavity->preparse_callback([&cfg](size_t) {
    cfg.mesh.type = "cartesian";
    cfg.mesh.n = 32;
    cfg.k = 3;
    cfg.reynolds = 1000.0;
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    if (!config_path.empty()) {
      RunConfig from_file = load_config(config_path);
      from_file.levels = cfg.levels;
      from_file.distortion = cfg.distortion;
      from_file.reynolds = cfg.reynolds;
      from_file.bc = cfg.bc;
      from_file.load = cfg.load;
      from_file.picard.verbose = cfg.picard.verbose;
      from_file.picard.condense = cfg.picard.condense;
      // Explicit command-line options take precedence over the file.
      CLI::App* sub = app.get_subcommands().front();
      auto keep = [&](const std::string& name) { return sub->count(name) > 0; };
      if (!keep("--r")) cfg.r = from_file.r;
      if (!keep("--s")) cfg.s = from_file.s;
      if (!keep("--delta")) cfg.delta = from_file.delta;
      if (!keep("--mu")) cfg.mu = from_file.mu;
      if (!keep("--nu")) cfg.nu = from_file.nu;
      if (!keep("--yasuda-a")) cfg.yasuda_a = from_file.yasuda_a;
      if (!keep("--k")) cfg.k = from_file.k;
      if (!keep("--n")) cfg.mesh.n = from_file.mesh.n;
      if (!keep("--mesh-type")) cfg.mesh.type = from_file.mesh.type;
      if (!keep("--mesh-file")) cfg.mesh.path = from_file.mesh.path;
      if (!keep("--quad-order")) cfg.quad_order = from_file.quad_order;
      if (!keep("--tol")) cfg.picard.tolerance = from_file.picard.tolerance;
      if (!keep("--max-iters")) cfg.picard.max_iters = from_file.picard.max_iters;
      if (!keep("--relaxation")) cfg.picard.relaxation = from_file.picard.relaxation;
      if (!keep("--output-dir")) cfg.output_dir = from_file.output_dir;
    }
    check_config(cfg);

    if (app.got_subcommand("check")) return cmd_check(cfg);
    if (app.got_subcommand("convergence")) return cmd_convergence(cfg);
    if (app.got_subcommand("cavity")) return cmd_cavity(cfg);
    if (app.got_subcommand("solve")) return cmd_solve(cfg);
    return 2;
  } catch (const InvalidParameter& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

} // namespace hhons
