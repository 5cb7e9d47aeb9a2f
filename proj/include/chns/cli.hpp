#pragma once

#include <string>
#include <vector>

#include "chns/control.hpp"
#include "chns/forward.hpp"

namespace chns {

// Initial phase profile. width/center/radius <= 0 pick grid-derived defaults
// (width 4*max(h), center at the domain midpoint, radius min(lx,ly)/4).
struct Phi0Spec {
  std::string type = "tanh_interface";  // zero | constant | tanh_interface | tanh_disk
  double value = 0.0;                   // constant profile level
  double width = 0.0;
  double center_x = 0.0;
  double center_y = 0.0;
  double radius = 0.0;
};

struct U0Spec {
  std::string type = "zero";  // zero | vortex
  double amplitude = 1.0;
};

// Flat key-value run configuration; see parse_config for the key list.
struct RunConfig {
  int nx = 48, ny = 48;
  double lx = 1.0, ly = 1.0;

  double nu = 0.1;
  double kernel_sigma = 0.0;   // <= 0: 4 * max(hx, hy)
  double kernel_beta = -1.0;   // < 0: scaled so min_x a(x) hits the stability target
  std::string potential_type = "double_well";

  double dt = 1.0 / 128.0;
  double t_final = 0.25;
  double stabilization = 2.0;
  double projection_tol = 1e-13;
  double linear_tol = 1e-10;
  double max_iter_factor = 10.0;  // linear solvers cap at ceil(factor * nx * ny) iterations

  Phi0Spec phi0;
  U0Spec u0;

  double alpha_u = 1.0;
  double alpha_phi = 0.1;
  double lambda_u = 0.01;

  double box_min = -10.0;
  double box_max = 10.0;

  int opt_max_iters = 50;
  double opt_tol = 1e-5;
  double armijo_c = 1e-4;
  double armijo_backtrack = 0.5;

  std::string out_dir = "out";
  int dump_every = 0;  // 0: no field dumps; k > 0: every k steps plus the final one
};

// Parses `section.key = value` lines with `#` comments. Unknown keys and
// malformed values raise ValidationError naming the key.
RunConfig parse_config_text(const std::string& text);
RunConfig parse_config_file(const std::string& path);

// Builders from a parsed config.
Grid2D config_grid(const RunConfig& cfg);
PhysicsParams config_physics(const RunConfig& cfg, const Grid2D& grid);
TimeScheme config_scheme(const RunConfig& cfg);
CostSpec config_cost(const RunConfig& cfg);
ScalarField build_phi0(const RunConfig& cfg, const Grid2D& grid);
VectorField build_u0(const RunConfig& cfg, const Grid2D& grid);
int config_nsteps(const RunConfig& cfg);  // t_final must be an integer multiple of dt

// 17-significant-digit decimal, the lossless round-trip format for doubles.
std::string format_g17(double x);

struct DiagnosticsRow {
  double t = 0.0;
  double energy = 0.0;
  double mass = 0.0;
  double grad_u_sq = 0.0;
  double grad_mu_sq = 0.0;
  double cost = 0.0;  // running cost accumulated through this time
};

std::vector<DiagnosticsRow> diagnostics_rows(const StateTrajectory& traj,
                                             const ControlTrajectory& controls,
                                             const CostSpec& cost);

// header `t,energy,mass,grad_u_sq,grad_mu_sq,cost`, one row per entry
void write_diagnostics_csv(const std::vector<DiagnosticsRow>& rows, const std::string& path);

// Legacy VTK ASCII, STRUCTURED_POINTS, POINT_DATA; vectors get a zero third
// component. Values stream x-fastest to match the grid layout.
void write_field_vtk(const ScalarField& f, const std::string& name, const std::string& path);
void write_field_vtk(const VectorField& v, const std::string& name, const std::string& path);

// subcommands: simulate | optimize | grad-check | taylor-test | adjoint-duality
//              | second-order | assumptions-check
// flags: --config <path> [--out <dir>] [--seed <u64>]
// exit codes: 0 ok, 1 validation failure, 2 solver failure, 64 usage
int run_cli(int argc, const char* const* argv);

} // namespace chns
