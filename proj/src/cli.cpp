#include "chns/cli.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "chns/errors.hpp"
#include "chns/kernel.hpp"
#include "chns/ops.hpp"
#include "chns/rng.hpp"
#include "chns/sensitivity.hpp"

namespace chns {

std::string format_g17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

namespace {

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

double parse_num(const std::string& key, const std::string& val) {
  const char* c = val.c_str();
  char* end = nullptr;
  double x = std::strtod(c, &end);
  if (end == c || *end != '\0')
    throw ValidationError("config key " + key + ": expected a number, got '" + val + "'");
  return x;
}

int parse_int(const std::string& key, const std::string& val) {
  double x = parse_num(key, val);
  if (x != std::floor(x) || std::fabs(x) > 1e9)
    throw ValidationError("config key " + key + ": expected an integer, got '" + val + "'");
  return static_cast<int>(x);
}

void apply_key(RunConfig& cfg, const std::string& key, const std::string& val) {
  if (key == "grid.nx") cfg.nx = parse_int(key, val);
  else if (key == "grid.ny") cfg.ny = parse_int(key, val);
  else if (key == "grid.lx") cfg.lx = parse_num(key, val);
  else if (key == "grid.ly") cfg.ly = parse_num(key, val);
  else if (key == "physics.nu") cfg.nu = parse_num(key, val);
  else if (key == "physics.kernel.sigma") cfg.kernel_sigma = (val == "auto") ? 0.0 : parse_num(key, val);
  else if (key == "physics.kernel.beta") cfg.kernel_beta = (val == "auto") ? -1.0 : parse_num(key, val);
  else if (key == "physics.potential.type") cfg.potential_type = val;
  else if (key == "time.dt") cfg.dt = parse_num(key, val);
  else if (key == "time.t_final") cfg.t_final = parse_num(key, val);
  else if (key == "time.stabilization") cfg.stabilization = parse_num(key, val);
  else if (key == "time.projection_tol") cfg.projection_tol = parse_num(key, val);
  else if (key == "time.linear_tol") cfg.linear_tol = parse_num(key, val);
  else if (key == "time.max_iter_factor") cfg.max_iter_factor = parse_num(key, val);
  else if (key == "init.phi0.type") cfg.phi0.type = val;
  else if (key == "init.phi0.value") cfg.phi0.value = parse_num(key, val);
  else if (key == "init.phi0.width") cfg.phi0.width = parse_num(key, val);
  else if (key == "init.phi0.center_x") cfg.phi0.center_x = parse_num(key, val);
  else if (key == "init.phi0.center_y") cfg.phi0.center_y = parse_num(key, val);
  else if (key == "init.phi0.radius") cfg.phi0.radius = parse_num(key, val);
  else if (key == "init.u0.type") cfg.u0.type = val;
  else if (key == "init.u0.amplitude") cfg.u0.amplitude = parse_num(key, val);
  else if (key == "cost.alpha_u") cfg.alpha_u = parse_num(key, val);
  else if (key == "cost.alpha_phi") cfg.alpha_phi = parse_num(key, val);
  else if (key == "cost.lambda_u") cfg.lambda_u = parse_num(key, val);
  else if (key == "control.box_min") cfg.box_min = parse_num(key, val);
  else if (key == "control.box_max") cfg.box_max = parse_num(key, val);
  else if (key == "optimizer.max_iters") cfg.opt_max_iters = parse_int(key, val);
  else if (key == "optimizer.tol") cfg.opt_tol = parse_num(key, val);
  else if (key == "optimizer.armijo_c") cfg.armijo_c = parse_num(key, val);
  else if (key == "optimizer.armijo_backtrack") cfg.armijo_backtrack = parse_num(key, val);
  else if (key == "output.directory") cfg.out_dir = val;
  else if (key == "output.dump_every") cfg.dump_every = parse_int(key, val);
  else throw ValidationError("unknown config key: " + key);
}

void check_config(const RunConfig& cfg) {
  auto req = [](bool ok, const char* msg) {
    if (!ok) throw ValidationError(msg);
  };
  req(cfg.nu > 0.0, "physics.nu must be positive");
  req(cfg.potential_type == "double_well", "physics.potential.type: only double_well is available");
  req(cfg.dt > 0.0, "time.dt must be positive");
  req(cfg.t_final > 0.0 && cfg.dt <= cfg.t_final, "time.t_final must be at least time.dt");
  req(cfg.stabilization >= 0.0, "time.stabilization must be nonnegative");
  req(cfg.projection_tol > 0.0, "time.projection_tol must be positive");
  req(cfg.linear_tol > 0.0, "time.linear_tol must be positive");
  req(cfg.max_iter_factor > 0.0, "time.max_iter_factor must be positive");
  req(cfg.phi0.type == "zero" || cfg.phi0.type == "constant" ||
          cfg.phi0.type == "tanh_interface" || cfg.phi0.type == "tanh_disk",
      "init.phi0.type must be zero, constant, tanh_interface or tanh_disk");
  req(cfg.u0.type == "zero" || cfg.u0.type == "vortex", "init.u0.type must be zero or vortex");
  req(cfg.alpha_u >= 0.0, "cost.alpha_u must be nonnegative");
  req(cfg.alpha_phi >= 0.0, "cost.alpha_phi must be nonnegative");
  req(cfg.lambda_u > 0.0, "cost.lambda_u must be positive");
  req(cfg.box_min <= cfg.box_max, "control.box_min must not exceed control.box_max");
  req(cfg.opt_max_iters >= 0, "optimizer.max_iters must be nonnegative");
  req(cfg.opt_tol > 0.0, "optimizer.tol must be positive");
  req(cfg.armijo_c > 0.0 && cfg.armijo_c < 1.0, "optimizer.armijo_c must lie in (0, 1)");
  req(cfg.armijo_backtrack > 0.0 && cfg.armijo_backtrack < 1.0,
      "optimizer.armijo_backtrack must lie in (0, 1)");
  req(cfg.dump_every >= 0, "output.dump_every must be nonnegative");
}

} // namespace

RunConfig parse_config_text(const std::string& text) {
  RunConfig cfg;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ValidationError("config line " + std::to_string(lineno) + ": expected key = value");
    std::string key = trim(line.substr(0, eq));
    std::string val = trim(line.substr(eq + 1));
    if (key.empty() || val.empty())
      throw ValidationError("config line " + std::to_string(lineno) + ": empty key or value");
    apply_key(cfg, key, val);
  }
  check_config(cfg);
  return cfg;
}

RunConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str());
}

Grid2D config_grid(const RunConfig& cfg) { return make_grid(cfg.nx, cfg.ny, cfg.lx, cfg.ly); }

PhysicsParams config_physics(const RunConfig& cfg, const Grid2D& grid) {
  PhysicsParams p;
  p.nu = cfg.nu;
  p.kernel = make_kernel(grid, cfg.kernel_sigma, cfg.kernel_beta);
  p.potential = double_well_potential();
  return p;
}

TimeScheme config_scheme(const RunConfig& cfg) {
  TimeScheme s;
  s.dt = cfg.dt;
  s.stabilization = cfg.stabilization;
  s.projection_tol = cfg.projection_tol;
  s.linear_tol = cfg.linear_tol;
  s.max_iter_factor = cfg.max_iter_factor;
  validate_scheme(s);
  return s;
}

CostSpec config_cost(const RunConfig& cfg) {
  return quadratic_tracking(cfg.alpha_u, cfg.alpha_phi, cfg.lambda_u);
}

ScalarField build_phi0(const RunConfig& cfg, const Grid2D& grid) {
  ScalarField f(grid, ScalarBc::NeumannZero);
  const Phi0Spec& p = cfg.phi0;
  const double w = p.width > 0.0 ? p.width : 4.0 * std::max(grid.hx(), grid.hy());
  const double cx = p.center_x > 0.0 ? p.center_x : 0.5 * grid.lx;
  const double cy = p.center_y > 0.0 ? p.center_y : 0.5 * grid.ly;
  const double r0 = p.radius > 0.0 ? p.radius : 0.25 * std::min(grid.lx, grid.ly);
  for (int j = 0; j < grid.ny; ++j)
    for (int i = 0; i < grid.nx; ++i) {
      double val = 0.0;
      if (p.type == "constant") {
        val = p.value;
      } else if (p.type == "tanh_interface") {
        val = std::tanh((grid.y(j) - cy) / w);
      } else if (p.type == "tanh_disk") {
        const double dx = grid.x(i) - cx, dy = grid.y(j) - cy;
        val = std::tanh((r0 - std::sqrt(dx * dx + dy * dy)) / w);
      }
      f.v[grid.idx(i, j)] = val;
    }
  return f;
}

VectorField build_u0(const RunConfig& cfg, const Grid2D& grid) {
  VectorField u(grid, VectorBc::NoSlip);
  if (cfg.u0.type == "vortex") {
    // streamfunction A sin^2(pi x/lx) sin^2(pi y/ly): no-slip compatible
    const double A = cfg.u0.amplitude;
    const double kx = M_PI / grid.lx, ky = M_PI / grid.ly;
    for (int j = 0; j < grid.ny; ++j)
      for (int i = 0; i < grid.nx; ++i) {
        const double x = grid.x(i), y = grid.y(j);
        const double sx = std::sin(kx * x), sy = std::sin(ky * y);
        u.x[grid.idx(i, j)] = A * sx * sx * std::sin(2.0 * ky * y) * ky;
        u.y[grid.idx(i, j)] = -A * std::sin(2.0 * kx * x) * kx * sy * sy;
      }
  }
  return u;
}

int config_nsteps(const RunConfig& cfg) {
  const double ratio = cfg.t_final / cfg.dt;
  const long long n = std::llround(ratio);
  if (n < 1 || std::fabs(n * cfg.dt - cfg.t_final) > 1e-8 * std::max(1.0, cfg.t_final))
    throw ValidationError("time.t_final must be an integer multiple of time.dt");
  return static_cast<int>(n);
}

std::vector<DiagnosticsRow> diagnostics_rows(const StateTrajectory& traj,
                                             const ControlTrajectory& controls,
                                             const CostSpec& cost) {
  const int N = traj.nsteps();
  if (static_cast<int>(controls.U.size()) != N)
    throw ValidationError("diagnostics: control count must equal the step count");
  std::vector<DiagnosticsRow> rows(N + 1);
  double acc = 0.0;
  for (int k = 0; k <= N; ++k) {
    const StepDiagnostics& d = traj.diag[k];
    rows[k] = {d.t, d.energy, d.mass, d.grad_u_sq, d.grad_mu_sq, acc};
    if (k < N) {
      const State& s = traj.states[k];
      double term = 0.0;
      if (cost.g) term += cost.g(s.t, s.u);
      if (cost.h) term += cost.h(s.t, s.phi);
      if (cost.l) term += cost.l(controls.U[k]);
      acc += traj.dt * term;
    }
  }
  return rows;
}

void write_diagnostics_csv(const std::vector<DiagnosticsRow>& rows, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write file: " + path);
  out << "t,energy,mass,grad_u_sq,grad_mu_sq,cost\n";
  for (const auto& r : rows)
    out << format_g17(r.t) << ',' << format_g17(r.energy) << ',' << format_g17(r.mass) << ','
        << format_g17(r.grad_u_sq) << ',' << format_g17(r.grad_mu_sq) << ','
        << format_g17(r.cost) << '\n';
  if (!out) throw ValidationError("write failed: " + path);
}

namespace {

std::ofstream vtk_open(const Grid2D& g, const std::string& name, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write file: " + path);
  out << "# vtk DataFile Version 3.0\n"
      << name << "\n"
      << "ASCII\n"
      << "DATASET STRUCTURED_POINTS\n"
      << "DIMENSIONS " << g.nx << ' ' << g.ny << " 1\n"
      << "ORIGIN 0 0 0\n"
      << "SPACING " << format_g17(g.hx()) << ' ' << format_g17(g.hy()) << " 1\n"
      << "POINT_DATA " << g.count() << '\n';
  return out;
}

} // namespace

void write_field_vtk(const ScalarField& f, const std::string& name, const std::string& path) {
  std::ofstream out = vtk_open(f.grid, name, path);
  out << "SCALARS " << name << " double 1\nLOOKUP_TABLE default\n";
  for (double v : f.v) out << format_g17(v) << '\n';
  if (!out) throw ValidationError("write failed: " + path);
}

void write_field_vtk(const VectorField& v, const std::string& name, const std::string& path) {
  std::ofstream out = vtk_open(v.grid, name, path);
  out << "VECTORS " << name << " double\n";
  for (std::size_t i = 0; i < v.x.size(); ++i)
    out << format_g17(v.x[i]) << ' ' << format_g17(v.y[i]) << " 0\n";
  if (!out) throw ValidationError("write failed: " + path);
}

namespace {

struct Problem {
  RunConfig cfg;
  Grid2D grid;
  PhysicsParams params;
  TimeScheme scheme;
  CostSpec cost;
  State s0;
  int nsteps = 0;
};

Problem setup(const RunConfig& cfg) {
  Problem pb;
  pb.cfg = cfg;
  pb.grid = config_grid(cfg);
  pb.params = config_physics(cfg, pb.grid);
  pb.scheme = config_scheme(cfg);
  pb.cost = config_cost(cfg);
  pb.nsteps = config_nsteps(cfg);
  VectorField u0 = build_u0(cfg, pb.grid);
  if (cfg.u0.type != "zero")
    u0 = project_divfree(u0, cfg.projection_tol, solver_iteration_cap(pb.scheme, pb.grid));
  pb.s0 = make_state(pb.params, u0, build_phi0(cfg, pb.grid));
  return pb;
}

ControlTrajectory boxed_zero_controls(const Problem& pb) {
  ControlTrajectory U = zero_controls(pb.grid, pb.nsteps);
  U.box_min = pb.cfg.box_min;
  U.box_max = pb.cfg.box_max;
  return U;
}

std::string out_path(const Problem& pb, const std::string& file) {
  std::filesystem::create_directories(pb.cfg.out_dir);
  return (std::filesystem::path(pb.cfg.out_dir) / file).string();
}

void dump_states(const Problem& pb, const StateTrajectory& traj) {
  if (pb.cfg.dump_every <= 0) return;
  const int N = traj.nsteps();
  char name[64];
  for (int n = 0; n <= N; n += pb.cfg.dump_every) {
    std::snprintf(name, sizeof name, "phi_%06d.vtk", n);
    write_field_vtk(traj.states[n].phi, "phi", out_path(pb, name));
    std::snprintf(name, sizeof name, "u_%06d.vtk", n);
    write_field_vtk(traj.states[n].u, "u", out_path(pb, name));
  }
  if (N % pb.cfg.dump_every != 0) {
    std::snprintf(name, sizeof name, "phi_%06d.vtk", N);
    write_field_vtk(traj.states[N].phi, "phi", out_path(pb, name));
    std::snprintf(name, sizeof name, "u_%06d.vtk", N);
    write_field_vtk(traj.states[N].u, "u", out_path(pb, name));
  }
}

std::vector<VectorField> random_directions(Rng& rng, const Grid2D& grid, int nsteps) {
  std::vector<VectorField> d;
  d.reserve(nsteps);
  for (int k = 0; k < nsteps; ++k) {
    VectorField v(grid, VectorBc::None);
    random_fill(rng, v, -1.0, 1.0);
    d.push_back(std::move(v));
  }
  return d;
}

double fit_slope(const std::vector<double>& eps, const std::vector<double>& err) {
  // least-squares slope of log err against log eps, skipping exact zeros
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int m = 0;
  for (std::size_t i = 0; i < eps.size(); ++i) {
    if (err[i] <= 0.0) continue;
    const double x = std::log(eps[i]), y = std::log(err[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++m;
  }
  if (m < 2) return 0.0;
  return (m * sxy - sx * sy) / (m * sxx - sx * sx);
}

int cmd_simulate(const Problem& pb) {
  ControlTrajectory U = boxed_zero_controls(pb);
  StateTrajectory traj = simulate(pb.s0, U, pb.params, pb.scheme);
  auto rows = diagnostics_rows(traj, U, pb.cost);
  write_diagnostics_csv(rows, out_path(pb, "diagnostics.csv"));
  dump_states(pb, traj);

  double mass0 = rows.front().mass, drift = 0.0;
  for (const auto& r : rows) drift = std::max(drift, std::fabs(r.mass - mass0));
  const double denom = std::max(std::fabs(mass0), 1e-30);
  std::printf("steps            %d\n", traj.nsteps());
  std::printf("final time       %s\n", format_g17(rows.back().t).c_str());
  std::printf("final energy     %s\n", format_g17(rows.back().energy).c_str());
  std::printf("mass drift (rel) %.3e\n", drift / denom);
  std::printf("max cfl          %.3f%s\n", traj.max_cfl, traj.cfl_warning ? "  (above 0.5)" : "");
  std::printf("running cost     %s\n", format_g17(rows.back().cost).c_str());
  std::printf("wrote %s\n", out_path(pb, "diagnostics.csv").c_str());
  return 0;
}

int cmd_optimize(const Problem& pb) {
  ControlTrajectory U0 = boxed_zero_controls(pb);
  OptimizerConfig oc;
  oc.max_iters = pb.cfg.opt_max_iters;
  oc.tol = pb.cfg.opt_tol;
  oc.armijo_c = pb.cfg.armijo_c;
  oc.backtrack = pb.cfg.armijo_backtrack;
  OptimizeResult res = optimize(pb.s0, U0, pb.params, pb.scheme, pb.cost, oc);

  auto rows = diagnostics_rows(res.trajectory, res.controls, pb.cost);
  write_diagnostics_csv(rows, out_path(pb, "diagnostics.csv"));
  {
    std::ofstream hist(out_path(pb, "history.csv"));
    if (!hist) throw ValidationError("cannot write file: " + out_path(pb, "history.csv"));
    hist << "iter,cost\n";
    for (std::size_t i = 0; i < res.cost_history.size(); ++i)
      hist << i << ',' << format_g17(res.cost_history[i]) << '\n';
  }
  dump_states(pb, res.trajectory);
  if (pb.cfg.dump_every > 0) {
    char name[64];
    for (int n = 0; n < pb.nsteps; n += pb.cfg.dump_every) {
      std::snprintf(name, sizeof name, "control_%06d.vtk", n);
      write_field_vtk(res.controls.U[n], "control", out_path(pb, name));
    }
  }

  const double pres = pontryagin_residual(res.controls, res.adjoint, pb.cost);
  std::printf("iterations          %d%s\n", res.iterations, res.converged ? "  (converged)" : "");
  std::printf("baseline cost       %s\n", format_g17(res.cost_history.front()).c_str());
  std::printf("final cost          %s\n", format_g17(res.cost_history.back()).c_str());
  std::printf("cost ratio          %.6f\n", res.cost_history.back() / res.cost_history.front());
  std::printf("stopping residual   %.6e\n", res.residual);
  std::printf("pontryagin residual %.6e\n", pres);
  std::printf("wrote %s\n", out_path(pb, "diagnostics.csv").c_str());
  return 0;
}

int cmd_grad_check(const Problem& pb, std::uint64_t seed) {
  ControlTrajectory U = boxed_zero_controls(pb);
  StateTrajectory traj = simulate(pb.s0, U, pb.params, pb.scheme);
  AdjointTrajectory adj = solve_adjoint(traj, adjoint_sources(pb.cost), pb.params, pb.scheme);
  std::vector<VectorField> G = reduced_gradient(U, adj, pb.cost);

  const std::vector<double> ladder = {1e-1, 5e-2, 2.5e-2, 1.25e-2};
  Rng rng(seed);
  const double dt = pb.scheme.dt;
  for (int d = 0; d < 3; ++d) {
    std::vector<VectorField> delta = random_directions(rng, pb.grid, pb.nsteps);
    double gdot = 0.0;
    for (int k = 0; k < pb.nsteps; ++k) gdot += dt * inner(G[k], delta[k]);

    std::vector<double> errs;
    std::printf("direction %d: adjoint directional derivative %s\n", d, format_g17(gdot).c_str());
    for (double eps : ladder) {
      ControlTrajectory Up = U, Um = U;
      for (int k = 0; k < pb.nsteps; ++k) {
        axpy(Up.U[k], eps, delta[k]);
        axpy(Um.U[k], -eps, delta[k]);
      }
      const double Jp = evaluate_cost(simulate(pb.s0, Up, pb.params, pb.scheme), Up, pb.cost);
      const double Jm = evaluate_cost(simulate(pb.s0, Um, pb.params, pb.scheme), Um, pb.cost);
      const double fd = (Jp - Jm) / (2.0 * eps);
      const double rel = std::fabs(fd - gdot) / std::max(std::fabs(gdot), 1e-30);
      errs.push_back(std::fabs(fd - gdot));
      std::printf("  eps %-10.4g fd %-24.17g rel err %.3e\n", eps, fd, rel);
    }
    std::printf("  fd-gap slope %.3f\n", fit_slope(ladder, errs));
  }
  return 0;
}

int cmd_taylor(const Problem& pb, std::uint64_t seed) {
  ControlTrajectory U = boxed_zero_controls(pb);
  StateTrajectory base = simulate(pb.s0, U, pb.params, pb.scheme);
  const std::vector<double> ladder = {1e-1, 5e-2, 2.5e-2, 1.25e-2};
  Rng rng(seed);
  const double dt = pb.scheme.dt;

  for (int d = 0; d < 5; ++d) {
    std::vector<VectorField> delta = random_directions(rng, pb.grid, pb.nsteps);
    LinearizedTrajectory lin = solve_linearized(base, delta, pb.params, pb.scheme);
    std::vector<double> rems;
    for (double eps : ladder) {
      ControlTrajectory Up = U;
      for (int k = 0; k < pb.nsteps; ++k) axpy(Up.U[k], eps, delta[k]);
      StateTrajectory pert = simulate(pb.s0, Up, pb.params, pb.scheme);
      double acc = 0.0;
      for (int n = 0; n <= pb.nsteps; ++n) {
        VectorField du = pert.states[n].u;
        axpy(du, -1.0, base.states[n].u);
        axpy(du, -eps, lin.w[n]);
        ScalarField dphi = pert.states[n].phi;
        axpy(dphi, -1.0, base.states[n].phi);
        axpy(dphi, -eps, lin.psi[n]);
        acc += dt * (inner(du, du) + inner(dphi, dphi));
      }
      rems.push_back(std::sqrt(acc));
    }
    std::printf("direction %d: remainders", d);
    for (double r : rems) std::printf(" %.6e", r);
    std::printf("  slope %.3f\n", fit_slope(ladder, rems));
  }
  return 0;
}

int cmd_adjoint_duality(const Problem& pb, std::uint64_t seed) {
  ControlTrajectory U = boxed_zero_controls(pb);
  StateTrajectory traj = simulate(pb.s0, U, pb.params, pb.scheme);

  Rng rng(seed);
  std::vector<VectorField> delta = random_directions(rng, pb.grid, pb.nsteps);
  VectorField gu(pb.grid, VectorBc::None);
  ScalarField hphi(pb.grid, ScalarBc::None);
  random_fill(rng, gu, -1.0, 1.0);
  random_fill(rng, hphi, -1.0, 1.0);

  AdjointSources src;
  src.g_u = [&gu](double, const VectorField&) { return gu; };
  src.h_phi = [&hphi](double, const ScalarField&) { return hphi; };
  AdjointTrajectory adj = solve_adjoint(traj, src, pb.params, pb.scheme);
  LinearizedTrajectory lin = solve_linearized(traj, delta, pb.params, pb.scheme);

  const double dt = pb.scheme.dt;
  double lhs = 0.0, rhs = 0.0;
  for (int n = 0; n < pb.nsteps; ++n) {
    lhs += dt * (inner(gu, lin.w[n]) + inner(hphi, lin.psi[n]));
    rhs += dt * inner(adj.p[n], delta[n]);
  }
  const double gap = std::fabs(lhs - rhs) / std::max({std::fabs(lhs), std::fabs(rhs), 1e-30});
  std::printf("linearized pairing  %s\n", format_g17(lhs).c_str());
  std::printf("adjoint pairing     %s\n", format_g17(rhs).c_str());
  std::printf("relative gap        %.6e\n", gap);
  return 0;
}

int cmd_second_order(const Problem& pb, std::uint64_t seed) {
  ControlTrajectory U0 = boxed_zero_controls(pb);
  OptimizerConfig oc;
  oc.max_iters = pb.cfg.opt_max_iters;
  oc.tol = pb.cfg.opt_tol;
  oc.armijo_c = pb.cfg.armijo_c;
  oc.backtrack = pb.cfg.armijo_backtrack;
  OptimizeResult res = optimize(pb.s0, U0, pb.params, pb.scheme, pb.cost, oc);
  std::printf("candidate: %d iterations, cost %s, residual %.3e\n", res.iterations,
              format_g17(res.cost_history.back()).c_str(), res.residual);

  Rng rng(seed);
  std::vector<SecondOrderProbe> probes;
  for (int d = 0; d < 10; ++d)
    probes.push_back(
        make_probe(res.trajectory, random_directions(rng, pb.grid, pb.nsteps), pb.params, pb.scheme));

  SecondOrderReport rep = check_necessary(res.trajectory, res.controls, res.adjoint, probes,
                                          pb.cost, pb.params, {0.0, 0.5, 1.0}, 1e-6);
  std::printf("form evaluations    %zu\n", rep.values.size());
  std::printf("minimum value       %s\n", format_g17(rep.min_value).c_str());
  std::printf("term-magnitude scale %s\n", format_g17(rep.scale).c_str());
  std::printf("coercivity margin   %s\n", format_g17(rep.margin).c_str());
  std::printf("second-order necessary condition: %s\n", rep.necessary_ok ? "satisfied" : "VIOLATED");
  return rep.necessary_ok ? 0 : 1;
}

int cmd_assumptions(const Problem& pb) {
  AssumptionReport rep = validate_assumptions(pb.params);
  std::printf("%s", rep.summary.c_str());
  std::printf("C0 estimate %s over [%g, %g]\n", format_g17(rep.c0_estimate).c_str(), rep.phi_lo,
              rep.phi_hi);
  if (!rep.ok()) {
    std::printf("assumption check FAILED\n");
    return 1;
  }
  std::printf("assumption check passed\n");
  return 0;
}

int usage(const char* argv0) {
  std::fprintf(stderr,
               "usage: %s <simulate|optimize|grad-check|taylor-test|adjoint-duality|"
               "second-order|assumptions-check> [--config <path>] [--out <dir>] [--seed <u64>]\n",
               argv0 ? argv0 : "chns");
  return 64;
}

} // namespace

int run_cli(int argc, const char* const* argv) {
  if (argc < 2) return usage(argc > 0 ? argv[0] : nullptr);
  const std::string cmd = argv[1];
  const bool known = cmd == "simulate" || cmd == "optimize" || cmd == "grad-check" ||
                     cmd == "taylor-test" || cmd == "adjoint-duality" || cmd == "second-order" ||
                     cmd == "assumptions-check";
  if (!known) return usage(argv[0]);

  std::string config_path, out_override;
  std::uint64_t seed = 1;
  for (int i = 2; i < argc; ++i) {
    const std::string flag = argv[i];
    if ((flag == "--config" || flag == "--out" || flag == "--seed") && i + 1 >= argc) {
      std::fprintf(stderr, "missing value for %s\n", flag.c_str());
      return usage(argv[0]);
    }
    if (flag == "--config") config_path = argv[++i];
    else if (flag == "--out") out_override = argv[++i];
    else if (flag == "--seed") seed = std::strtoull(argv[++i], nullptr, 10);
    else {
      std::fprintf(stderr, "unknown flag: %s\n", flag.c_str());
      return usage(argv[0]);
    }
  }

  try {
    RunConfig cfg = config_path.empty() ? RunConfig{} : parse_config_file(config_path);
    if (!out_override.empty()) cfg.out_dir = out_override;
    Problem pb = setup(cfg);

    if (cmd == "simulate") return cmd_simulate(pb);
    if (cmd == "optimize") return cmd_optimize(pb);
    if (cmd == "grad-check") return cmd_grad_check(pb, seed);
    if (cmd == "taylor-test") return cmd_taylor(pb, seed);
    if (cmd == "adjoint-duality") return cmd_adjoint_duality(pb, seed);
    if (cmd == "second-order") return cmd_second_order(pb, seed);
    return cmd_assumptions(pb);
  } catch (const SolverError& e) {
    std::fprintf(stderr, "solver failure: %s\n", e.what());
    return 2;
  } catch (const ValidationError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}

} // namespace chns
