// Command-line front end: JSON configuration, the check / convergence /
// cavity / solve subcommands, CSV output, and centerline extraction.

#ifndef HHONS_CLI_HPP
#define HHONS_CLI_HPP

#include "hhons/verification.hpp"

#include <iosfwd>
#include <optional>
#include <string>

namespace hhons {

struct MeshSpec {
  std::string type = "triangular";  // triangular | cartesian | file
  int n = 8;
  std::string path;
};

struct RunConfig {
  std::string command;
  double r = 2.0;
  double s = 2.0;
  double delta = 1.0;
  double mu = 1.0;
  double nu = 1.0;
  std::optional<double> yasuda_a;  // defaults to r
  int k = 1;
  MeshSpec mesh;
  int quad_order = -1;  // defaults to 2k+4
  PicardConfig picard;
  std::string output_dir = ".";

  // knobs not part of the config document (command-line only)
  int levels = 4;
  double distortion = 0.3;
  std::optional<double> reynolds;  // cavity: mu = 2/Re
  std::string bc = "exact";        // solve: zero | exact | lid
  std::string load = "manufactured";  // solve: zero | manufactured
};

/// Parses the JSON configuration document. Throws InvalidParameter on unknown
/// keys or out-of-range values.
RunConfig parse_config(std::istream& in);
RunConfig load_config(const std::string& path);

/// CSV with header `meshsize,erru,errp,rate_u,rate_p,picard_iters`; the first
/// row has empty rate columns. Values print at 12 significant digits.
void write_convergence_csv(std::ostream& out, const RateTable& table);

std::string format_condition_report(const ConditionReport& report);

/// Velocity traces along the two centerlines of the unit square: u1 along
/// x1 = 1/2 sampled in x2, and u2 along x2 = 1/2 sampled in x1, at n uniform
/// points. Cell polynomials are evaluated (ties at element interfaces resolve
/// to the lowest element id).
struct CenterlineProfile {
  Eigen::VectorXd coords;
  Eigen::VectorXd u1_vertical;
  Eigen::VectorXd u2_horizontal;
};

CenterlineProfile extract_centerlines(const VelocitySpace& space, const HybridVelocity& u,
                                      int n_samples = 129);

void write_centerline_csv(std::ostream& out, const Eigen::VectorXd& coords,
                          const Eigen::VectorXd& values, const std::string& coord_name,
                          const std::string& value_name);

/// Entry point of the `hhons` binary. Exit codes: 0 success, 1 solver
/// non-convergence, 2 invalid configuration.
int run_cli(int argc, const char* const* argv);

} // namespace hhons

#endif
