// Linearization and adjoint checks: the tangent solver must be the derivative
// of the nonlinear march (Taylor remainder), the adjoint must pair with it as
// its exact transpose (duality gap at the linear-solver floor, not O(dt)),
// and the reduced gradient must match finite differences of the cost.

#include <cmath>
#include <vector>

#include "chns/cli.hpp"
#include "chns/control.hpp"
#include "chns/ops.hpp"
#include "chns/rng.hpp"
#include "chns/sensitivity.hpp"
#include "harness.hpp"

using namespace chns;
using harness::qoi;
using harness::record;

namespace {

struct Setup {
  RunConfig cfg;
  Grid2D grid;
  PhysicsParams params;
  TimeScheme scheme;
  State s0;
  int nsteps = 0;
  ControlTrajectory U;
  StateTrajectory base;
};

Setup make_setup(int n, double dt, double t_final) {
  Setup s;
  s.cfg.nx = s.cfg.ny = n;
  s.cfg.nu = 0.1;
  s.cfg.dt = dt;
  s.cfg.t_final = t_final;
  s.cfg.linear_tol = 1e-12;  // keep the solver floor far below the signals probed here
  s.cfg.phi0.type = "tanh_disk";
  s.cfg.u0.type = "vortex";
  s.cfg.u0.amplitude = 0.5;
  s.grid = config_grid(s.cfg);
  s.params = config_physics(s.cfg, s.grid);
  s.scheme = config_scheme(s.cfg);
  VectorField u0 = build_u0(s.cfg, s.grid);
  u0 = project_divfree(u0, s.cfg.projection_tol, 10 * n * n);
  s.s0 = make_state(s.params, u0, build_phi0(s.cfg, s.grid));
  s.nsteps = config_nsteps(s.cfg);
  s.U = zero_controls(s.grid, s.nsteps);
  s.base = simulate(s.s0, s.U, s.params, s.scheme);
  return s;
}

// Smooth low-wavenumber probe fields. Cell-white noise is useless as a control
// direction: the viscous solve and the projection damp it almost entirely, so
// the responses it excites sit at the linear-solver noise floor.
void fill_smooth(Rng& rng, const Grid2D& g, double* out, double amp) {
  static const int kx[3] = {1, 2, 1};
  static const int ky[3] = {1, 1, 2};
  const double twopi = 6.283185307179586;
  double c[3], px[3], py[3];
  for (int m = 0; m < 3; ++m) {
    c[m] = rng.uniform(-1.0, 1.0);
    px[m] = rng.uniform(0.0, twopi);
    py[m] = rng.uniform(0.0, twopi);
  }
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      const double x = g.x(i) / g.lx, y = g.y(j) / g.ly;
      double s = 0.0;
      for (int m = 0; m < 3; ++m)
        s += c[m] * std::sin(twopi * kx[m] * x + px[m]) * std::sin(twopi * ky[m] * y + py[m]);
      out[g.idx(i, j)] = amp * s;
    }
}

VectorField smooth_vector(Rng& rng, const Grid2D& g, double amp) {
  VectorField v(g, VectorBc::None);
  fill_smooth(rng, g, v.x.data(), amp);
  fill_smooth(rng, g, v.y.data(), amp);
  return v;
}

ScalarField smooth_scalar(Rng& rng, const Grid2D& g, double amp) {
  ScalarField f(g, ScalarBc::None);
  fill_smooth(rng, g, f.v.data(), amp);
  return f;
}

std::vector<VectorField> random_controls(Rng& rng, const Grid2D& g, int n) {
  std::vector<VectorField> d;
  for (int k = 0; k < n; ++k) d.push_back(smooth_vector(rng, g, 2.0));
  return d;
}

void test_zero_direction() {
  Setup s = make_setup(16, 1.0 / 64.0, 0.125);
  LinearizedTrajectory lin =
      solve_linearized(s.base, zero_controls(s.grid, s.nsteps).U, s.params, s.scheme);
  double worst = 0.0;
  for (int n = 0; n <= s.nsteps; ++n)
    worst = std::max({worst, max_abs(lin.w[n]), max_abs(lin.psi[n])});
  record("zero control direction gives zero tangent", worst == 0.0);
}

void test_linearity() {
  Setup s = make_setup(16, 1.0 / 64.0, 0.125);
  Rng rng(53);
  std::vector<VectorField> d = random_controls(rng, s.grid, s.nsteps);
  std::vector<VectorField> d2 = d;
  for (auto& v : d2) scale(v, 2.0);

  LinearizedTrajectory l1 = solve_linearized(s.base, d, s.params, s.scheme);
  LinearizedTrajectory l2 = solve_linearized(s.base, d2, s.params, s.scheme);
  double worst = 0.0, scl = 1e-30;
  for (int n = 0; n <= s.nsteps; ++n) {
    for (std::size_t i = 0; i < l1.psi[n].v.size(); ++i)
      worst = std::max(worst, std::fabs(l2.psi[n].v[i] - 2.0 * l1.psi[n].v[i]));
    for (std::size_t i = 0; i < l1.w[n].x.size(); ++i) {
      worst = std::max(worst, std::fabs(l2.w[n].x[i] - 2.0 * l1.w[n].x[i]));
      worst = std::max(worst, std::fabs(l2.w[n].y[i] - 2.0 * l1.w[n].y[i]));
    }
    scl = std::max({scl, max_abs(l2.w[n]), max_abs(l2.psi[n])});
  }
  record("tangent solver homogeneous of degree one", worst / scl < 1e-9, qoi(worst / scl, 1e-9));
}

double taylor_slope(const Setup& s, Rng& rng) {
  std::vector<VectorField> d = random_controls(rng, s.grid, s.nsteps);
  LinearizedTrajectory lin = solve_linearized(s.base, d, s.params, s.scheme);
  const std::vector<double> ladder = {1e-1, 5e-2, 2.5e-2, 1.25e-2};
  std::vector<double> rem;
  for (double eps : ladder) {
    ControlTrajectory Up = s.U;
    for (int k = 0; k < s.nsteps; ++k) axpy(Up.U[k], eps, d[k]);
    StateTrajectory pert = simulate(s.s0, Up, s.params, s.scheme);
    double acc = 0.0;
    for (int n = 0; n <= s.nsteps; ++n) {
      VectorField du = pert.states[n].u;
      axpy(du, -1.0, s.base.states[n].u);
      axpy(du, -eps, lin.w[n]);
      ScalarField dphi = pert.states[n].phi;
      axpy(dphi, -1.0, s.base.states[n].phi);
      axpy(dphi, -eps, lin.psi[n]);
      acc += s.scheme.dt * (inner(du, du) + inner(dphi, dphi));
    }
    rem.push_back(std::sqrt(acc));
  }
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < ladder.size(); ++i) {
    const double x = std::log(ladder[i]), y = std::log(std::max(rem[i], 1e-300));
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double m = static_cast<double>(ladder.size());
  return (m * sxy - sx * sy) / (m * sxx - sx * sx);
}

void test_taylor() {
  Setup s = make_setup(32, 1.0 / 128.0, 0.125);
  Rng rng(59);
  double lo = 1e9, hi = -1e9;
  for (int d = 0; d < 2; ++d) {
    const double slope = taylor_slope(s, rng);
    lo = std::min(lo, slope);
    hi = std::max(hi, slope);
  }
  record("taylor remainder second order", lo > 1.9 && hi < 2.1,
         "(slopes in [" + std::to_string(lo) + ", " + std::to_string(hi) + "])");
}

double duality_gap(const Setup& s, Rng& rng) {
  std::vector<VectorField> d = random_controls(rng, s.grid, s.nsteps);
  VectorField gu = smooth_vector(rng, s.grid, 1.0);
  ScalarField hphi = smooth_scalar(rng, s.grid, 1.0);

  AdjointSources src;
  src.g_u = [&gu](double, const VectorField&) { return gu; };
  src.h_phi = [&hphi](double, const ScalarField&) { return hphi; };
  AdjointTrajectory adj = solve_adjoint(s.base, src, s.params, s.scheme);
  LinearizedTrajectory lin = solve_linearized(s.base, d, s.params, s.scheme);

  double lhs = 0.0, rhs = 0.0;
  for (int n = 0; n < s.nsteps; ++n) {
    lhs += s.scheme.dt * (inner(gu, lin.w[n]) + inner(hphi, lin.psi[n]));
    rhs += s.scheme.dt * inner(adj.p[n], d[n]);
  }
  return std::fabs(lhs - rhs) / std::max({std::fabs(lhs), std::fabs(rhs), 1e-30});
}

void test_adjoint_duality() {
  Setup coarse = make_setup(24, 1.0 / 128.0, 0.125);
  Setup fine = make_setup(24, 1.0 / 256.0, 0.125);
  Rng rc(61), rf(61);
  // the backward march is the transpose of the tangent march, so the pairing
  // closes at the linear-solver floor for every dt, not merely as dt -> 0
  const double g1 = duality_gap(coarse, rc);
  const double g2 = duality_gap(fine, rf);
  record("adjoint/tangent pairing gap at solver floor", g1 < 1e-10, qoi(g1, 1e-10));
  record("pairing gap stays at floor when dt halves", g2 < 1e-10, qoi(g2, 1e-10));
}

void test_adjoint_structure() {
  Setup s = make_setup(16, 1.0 / 64.0, 0.125);
  AdjointSources none;
  AdjointTrajectory adj = solve_adjoint(s.base, none, s.params, s.scheme);
  double worst = 0.0;
  for (int n = 0; n <= s.nsteps; ++n)
    worst = std::max({worst, max_abs(adj.p[n]), max_abs(adj.eta[n])});
  record("zero sources give zero adjoint", worst == 0.0);

  Rng rng(67);
  VectorField gu(s.grid, VectorBc::None);
  random_fill(rng, gu, -1.0, 1.0);
  AdjointSources su, sh, both;
  su.g_u = [&gu](double, const VectorField&) { return gu; };
  ScalarField hphi(s.grid, ScalarBc::None);
  random_fill(rng, hphi, -1.0, 1.0);
  sh.h_phi = [&hphi](double, const ScalarField&) { return hphi; };
  both.g_u = su.g_u;
  both.h_phi = sh.h_phi;

  AdjointTrajectory a1 = solve_adjoint(s.base, su, s.params, s.scheme);
  AdjointTrajectory a2 = solve_adjoint(s.base, sh, s.params, s.scheme);
  AdjointTrajectory ab = solve_adjoint(s.base, both, s.params, s.scheme);
  double gap = 0.0, scl = 1e-30;
  for (int n = 0; n <= s.nsteps; ++n) {
    for (std::size_t i = 0; i < ab.eta[n].v.size(); ++i)
      gap = std::max(gap, std::fabs(ab.eta[n].v[i] - a1.eta[n].v[i] - a2.eta[n].v[i]));
    for (std::size_t i = 0; i < ab.p[n].x.size(); ++i) {
      gap = std::max(gap, std::fabs(ab.p[n].x[i] - a1.p[n].x[i] - a2.p[n].x[i]));
      gap = std::max(gap, std::fabs(ab.p[n].y[i] - a1.p[n].y[i] - a2.p[n].y[i]));
    }
    scl = std::max({scl, max_abs(ab.p[n]), max_abs(ab.eta[n])});
  }
  record("adjoint linear in its sources", gap / scl < 1e-9, qoi(gap / scl, 1e-9));

  RegularityReport rep = adjoint_regularity_report(ab);
  record("adjoint regularity report bounded", rep.bounded && std::isfinite(rep.p_linf_l2));
}

double gradient_fd_error(const Setup& s, Rng& rng, const CostSpec& cost) {
  AdjointTrajectory adj = solve_adjoint(s.base, adjoint_sources(cost), s.params, s.scheme);
  std::vector<VectorField> G = reduced_gradient(s.U, adj, cost);
  std::vector<VectorField> d = random_controls(rng, s.grid, s.nsteps);
  double gdot = 0.0;
  for (int k = 0; k < s.nsteps; ++k) gdot += s.scheme.dt * inner(G[k], d[k]);

  const double eps = 1e-2;
  ControlTrajectory Up = s.U, Um = s.U;
  for (int k = 0; k < s.nsteps; ++k) {
    axpy(Up.U[k], eps, d[k]);
    axpy(Um.U[k], -eps, d[k]);
  }
  const double Jp = evaluate_cost(simulate(s.s0, Up, s.params, s.scheme), Up, cost);
  const double Jm = evaluate_cost(simulate(s.s0, Um, s.params, s.scheme), Um, cost);
  const double fd = (Jp - Jm) / (2.0 * eps);
  return std::fabs(fd - gdot) / std::max(std::fabs(fd), 1e-30);
}

void test_gradient_vs_fd() {
  CostSpec cost = quadratic_tracking(1.0, 0.1, 0.01);
  Setup coarse = make_setup(24, 1.0 / 128.0, 0.125);
  Setup fine = make_setup(24, 1.0 / 256.0, 0.125);
  Rng rc(71), rf(71);
  double worst_c = 0.0, worst_f = 0.0;
  for (int d = 0; d < 3; ++d) {
    worst_c = std::max(worst_c, gradient_fd_error(coarse, rc, cost));
    worst_f = std::max(worst_f, gradient_fd_error(fine, rf, cost));
  }
  // with an exact-transpose adjoint the only residual is the fd truncation of
  // the cost itself, so both step sizes must sit far below any O(dt) scale
  record("reduced gradient matches central differences", worst_c < 1e-6, qoi(worst_c, 1e-6));
  record("gradient match stays tight when dt halves", worst_f < 1e-6, qoi(worst_f, 1e-6));
}

} // namespace

int main() {
  test_zero_direction();
  test_linearity();
  test_taylor();
  test_adjoint_duality();
  test_adjoint_structure();
  test_gradient_vs_fd();
  return harness::finish("sensitivity and adjoint");
}
