#include "chns/forward.hpp"

#include <cmath>
#include <string>

#include "chns/ops.hpp"
#include "chns/parallel.hpp"
#include "solve_common.hpp"

namespace chns {

State make_state(const PhysicsParams& params, const VectorField& u0, const ScalarField& phi0) {
  require_same_grid(u0.grid, phi0.grid, "make_state");
  State s;
  s.u = u0;
  s.u.bc = VectorBc::NoSlip;
  s.phi = phi0;
  s.phi.bc = ScalarBc::NeumannZero;
  s.mu = chemical_potential(params, s.phi);
  s.pi = ScalarField(phi0.grid, ScalarBc::NeumannZero);
  s.t = 0.0;
  return s;
}

void validate_scheme(const TimeScheme& scheme) {
  if (!(scheme.dt > 0.0)) throw ValidationError("scheme: dt must be positive");
  if (scheme.stabilization < 0.0) throw ValidationError("scheme: stabilization must be >= 0");
  if (!(scheme.projection_tol > 0.0) || !(scheme.linear_tol > 0.0))
    throw ValidationError("scheme: solver tolerances must be positive");
  if (!(scheme.max_iter_factor > 0.0))
    throw ValidationError("scheme: max_iter_factor must be positive");
}

int solver_iteration_cap(const TimeScheme& scheme, const Grid2D& grid) {
  double raw = std::ceil(scheme.max_iter_factor * grid.nx * grid.ny);
  return std::max(1, static_cast<int>(raw));
}

ControlTrajectory zero_controls(const Grid2D& grid, int nsteps) {
  ControlTrajectory c;
  c.U.assign(nsteps, VectorField(grid, VectorBc::None));
  return c;
}

using internal::phi_helmholtz;
using internal::velocity_helmholtz;

State step(const State& s, const VectorField* Un, const PhysicsParams& params,
           const TimeScheme& scheme, StepStats* stats) {
  validate_scheme(scheme);
  const Grid2D& g = s.phi.grid;
  const std::size_t n = g.count();
  const double dt = scheme.dt;
  const double S = scheme.stabilization;
  const int cap = solver_iteration_cap(scheme, g);
  StepStats st;

  st.cfl = dt * max_abs(s.u) / std::min(g.hx(), g.hy());

  // ---- phase field ----
  ScalarField jphi = convolve(params.kernel, s.phi);
  ScalarField expl(g, ScalarBc::NeumannZero);
  {
    const double* ph = s.phi.v.data();
    const double* jv = jphi.v.data();
    double* e = expl.v.data();
    const auto& dF = params.potential.dF;
    par::parallel_for(n, [&, ph, jv, e](std::size_t i) { e[i] = dF(ph[i]) - jv[i] - S * ph[i]; });
  }
  ScalarField lap_expl = laplacian(expl);
  ScalarField adv = advect_div(s.u, s.phi);

  ScalarField rhs(g, ScalarBc::None);
  {
    const double* ph = s.phi.v.data();
    const double* le = lap_expl.v.data();
    const double* av = adv.v.data();
    double* r = rhs.v.data();
    const double idt = 1.0 / dt;
    par::parallel_for(n, [=](std::size_t i) { r[i] = ph[i] * idt + le[i] - av[i]; });
  }

  ScalarField phi_t =
      phi_helmholtz(rhs, params.kernel, S, dt, scheme.linear_tol, cap, &st.phi_iters);

  // conservative re-evaluation: phi^{n+1} = phi^n + dt (Lap G - div(u phi)),
  // G = (a+S) phi_tilde + F'(phi^n) - J*phi^n - S phi^n
  State out;
  out.phi = ScalarField(g, ScalarBc::NeumannZero);
  {
    ScalarField G(g, ScalarBc::NeumannZero);
    const double* a = params.kernel.a.v.data();
    const double* pt = phi_t.v.data();
    const double* e = expl.v.data();
    double* pg = G.v.data();
    par::parallel_for(n, [=](std::size_t i) { pg[i] = (a[i] + S) * pt[i] + e[i]; });
    ScalarField lapG = laplacian(G);
    const double* lg = lapG.v.data();
    const double* av = adv.v.data();
    const double* ph = s.phi.v.data();
    double* po = out.phi.v.data();
    par::parallel_for(n, [=](std::size_t i) { po[i] = ph[i] + dt * (lg[i] - av[i]); });
  }

  out.mu = chemical_potential(params, out.phi);

  // ---- momentum ----
  VectorField rhs_u = korteweg_force(out.mu, out.phi);
  {
    VectorField conv = convect(s.u, s.u);
    const double* ux = s.u.x.data();
    const double* uy = s.u.y.data();
    const double* cx = conv.x.data();
    const double* cy = conv.y.data();
    double* rx = rhs_u.x.data();
    double* ry = rhs_u.y.data();
    const double idt = 1.0 / dt;
    par::parallel_for(n, [=](std::size_t i) {
      rx[i] += ux[i] * idt - cx[i];
      ry[i] += uy[i] * idt - cy[i];
    });
  }
  if (Un) axpy(rhs_u, 1.0, *Un);
  if (params.has_forcing()) axpy(rhs_u, 1.0, params.forcing);
  rhs_u.bc = VectorBc::NoSlip;

  VectorField ustar =
      velocity_helmholtz(rhs_u, params.nu, dt, scheme.linear_tol, cap, &st.u_iters);

  ScalarField pi_raw;
  LinStats pstat;
  out.u = project_divfree(ustar, scheme.projection_tol, cap, &pi_raw, &pstat);
  st.proj_iters = pstat.iterations;
  out.pi = std::move(pi_raw);
  scale(out.pi, 1.0 / dt);
  out.t = s.t + dt;

  if (stats) *stats = st;
  return out;
}

StateTrajectory simulate(const State& s0, const ControlTrajectory& controls,
                         const PhysicsParams& params, const TimeScheme& scheme) {
  validate_scheme(scheme);
  const int N = static_cast<int>(controls.U.size());
  if (N == 0) throw ValidationError("simulate: empty control trajectory (need one entry per step)");

  StateTrajectory traj;
  traj.dt = scheme.dt;
  traj.states.reserve(N + 1);
  traj.diag.reserve(N + 1);
  traj.states.push_back(s0);

  auto push_diag = [&](const State& s) {
    StepDiagnostics d;
    d.t = s.t;
    d.energy = energy(params, s.u, s.phi);
    d.mass = integral(s.phi);
    d.grad_u_sq = grad_sq_face(s.u);
    d.grad_mu_sq = grad_sq_face(s.mu);
    traj.diag.push_back(d);
  };
  push_diag(s0);

  for (int k = 0; k < N; ++k) {
    StepStats st;
    traj.states.push_back(step(traj.states.back(), &controls.U[k], params, scheme, &st));
    traj.max_cfl = std::max(traj.max_cfl, st.cfl);
    push_diag(traj.states.back());
  }
  traj.cfl_warning = traj.max_cfl > 0.5;
  return traj;
}

FeasibleDifference feasible_difference(const StateTrajectory& a, const ControlTrajectory& Ua,
                                       const StateTrajectory& b, const ControlTrajectory& Ub) {
  if (a.states.size() != b.states.size() || Ua.U.size() != Ub.U.size())
    throw ValidationError("feasible_difference: trajectories have different lengths");
  if (a.states.empty() || Ua.U.size() + 1 != a.states.size())
    throw ValidationError("feasible_difference: control count must equal the step count");
  FeasibleDifference d;
  const std::size_t m = a.states.size();
  d.du.reserve(m);
  d.dphi.reserve(m);
  d.dU.reserve(Ua.U.size());
  for (std::size_t k = 0; k < m; ++k) {
    require_same_grid(a.states[k].u.grid, b.states[k].u.grid, "feasible_difference");
    VectorField du = a.states[k].u;
    axpy(du, -1.0, b.states[k].u);
    ScalarField dphi = a.states[k].phi;
    axpy(dphi, -1.0, b.states[k].phi);
    d.du.push_back(std::move(du));
    d.dphi.push_back(std::move(dphi));
  }
  for (std::size_t k = 0; k < Ua.U.size(); ++k) {
    VectorField dU = Ua.U[k];
    axpy(dU, -1.0, Ub.U[k]);
    d.dU.push_back(std::move(dU));
  }
  return d;
}

} // namespace chns
