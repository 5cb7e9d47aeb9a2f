#include "chns/sensitivity.hpp"

#include <cmath>
#include <sstream>
#include <vector>

#include "chns/ops.hpp"
#include "chns/parallel.hpp"
#include "solve_common.hpp"

namespace chns {

using internal::phi_helmholtz;
using internal::phi_helmholtz_transpose;
using internal::velocity_helmholtz;

LinearizedTrajectory solve_linearized(const StateTrajectory& base,
                                      const std::vector<VectorField>& deltaU,
                                      const PhysicsParams& params, const TimeScheme& scheme,
                                      const VectorField* w0, const ScalarField* psi0) {
  validate_scheme(scheme);
  const int N = base.nsteps();
  if (N < 1) throw ValidationError("solve_linearized: base trajectory has no steps");
  if (!deltaU.empty() && static_cast<int>(deltaU.size()) != N)
    throw ValidationError("solve_linearized: deltaU must have one entry per step");

  const Grid2D& g = base.states[0].phi.grid;
  const std::size_t n = g.count();
  const double dt = scheme.dt;
  const double S = scheme.stabilization;
  const int cap = solver_iteration_cap(scheme, g);
  const double* a = params.kernel.a.v.data();
  const auto& d2F = params.potential.d2F;
  if (!d2F) throw ValidationError("solve_linearized: potential has no F''");

  LinearizedTrajectory out;
  out.dt = dt;
  out.w.reserve(N + 1);
  out.psi.reserve(N + 1);
  out.mu_t.reserve(N + 1);

  VectorField w = w0 ? *w0 : VectorField(g, VectorBc::NoSlip);
  w.bc = VectorBc::NoSlip;
  ScalarField psi = psi0 ? *psi0 : ScalarField(g, ScalarBc::NeumannZero);
  psi.bc = ScalarBc::NeumannZero;

  auto linear_mu = [&](const ScalarField& ps, const ScalarField& phi_hat) {
    ScalarField conv = convolve(params.kernel, ps);
    ScalarField m(g, ScalarBc::NeumannZero);
    const double* pps = ps.v.data();
    const double* pc = conv.v.data();
    const double* ph = phi_hat.v.data();
    double* pm = m.v.data();
    par::parallel_for(n, [&, pps, pc, ph, pm](std::size_t i) {
      pm[i] = a[i] * pps[i] - pc[i] + d2F(ph[i]) * pps[i];
    });
    return m;
  };

  out.w.push_back(w);
  out.psi.push_back(psi);
  out.mu_t.push_back(linear_mu(psi, base.states[0].phi));

  for (int k = 0; k < N; ++k) {
    const State& bn = base.states[k];
    const State& bn1 = base.states[k + 1];

    // ---- phase perturbation ----
    ScalarField jpsi = convolve(params.kernel, psi);
    ScalarField expl(g, ScalarBc::NeumannZero);
    {
      const double* pps = psi.v.data();
      const double* pj = jpsi.v.data();
      const double* ph = bn.phi.v.data();
      double* e = expl.v.data();
      par::parallel_for(n, [&, pps, pj, ph, e](std::size_t i) {
        e[i] = d2F(ph[i]) * pps[i] - pj[i] - S * pps[i];
      });
    }
    ScalarField adv = advect_div(bn.u, psi);
    {
      ScalarField adv_w = advect_div(w, bn.phi);
      axpy(adv, 1.0, adv_w);
    }
    ScalarField lap_expl = laplacian(expl);
    ScalarField rhs(g, ScalarBc::None);
    {
      const double* pps = psi.v.data();
      const double* le = lap_expl.v.data();
      const double* av = adv.v.data();
      double* r = rhs.v.data();
      const double idt = 1.0 / dt;
      par::parallel_for(n, [=](std::size_t i) { r[i] = pps[i] * idt + le[i] - av[i]; });
    }
    ScalarField psi_t = phi_helmholtz(rhs, params.kernel, S, dt, scheme.linear_tol, cap, nullptr);

    ScalarField psi_next(g, ScalarBc::NeumannZero);
    {
      ScalarField G(g, ScalarBc::NeumannZero);
      const double* pt = psi_t.v.data();
      const double* e = expl.v.data();
      double* pg = G.v.data();
      par::parallel_for(n, [=](std::size_t i) { pg[i] = (a[i] + S) * pt[i] + e[i]; });
      ScalarField lapG = laplacian(G);
      const double* lg = lapG.v.data();
      const double* av = adv.v.data();
      const double* pps = psi.v.data();
      double* po = psi_next.v.data();
      par::parallel_for(n, [=](std::size_t i) { po[i] = pps[i] + dt * (lg[i] - av[i]); });
    }

    ScalarField mu_t = linear_mu(psi_next, bn1.phi);

    // ---- velocity perturbation ----
    // derivative of the Korteweg force: mu_t grad phi_hat + mu_hat grad psi
    VectorField rhs_w = korteweg_force(mu_t, bn1.phi);
    {
      VectorField k2 = korteweg_force(bn1.mu, psi_next);
      axpy(rhs_w, 1.0, k2);
    }
    {
      VectorField c1 = convect(w, bn.u);
      VectorField c2 = convect(bn.u, w);
      const double* wx = w.x.data();
      const double* wy = w.y.data();
      const double* c1x = c1.x.data();
      const double* c1y = c1.y.data();
      const double* c2x = c2.x.data();
      const double* c2y = c2.y.data();
      double* rx = rhs_w.x.data();
      double* ry = rhs_w.y.data();
      const double idt = 1.0 / dt;
      par::parallel_for(n, [=](std::size_t i) {
        rx[i] += wx[i] * idt - c1x[i] - c2x[i];
        ry[i] += wy[i] * idt - c1y[i] - c2y[i];
      });
    }
    if (!deltaU.empty()) axpy(rhs_w, 1.0, deltaU[k]);
    rhs_w.bc = VectorBc::NoSlip;

    VectorField wstar = velocity_helmholtz(rhs_w, params.nu, dt, scheme.linear_tol, cap, nullptr);
    w = project_divfree(wstar, scheme.projection_tol, cap, nullptr, nullptr);
    psi = std::move(psi_next);

    out.w.push_back(w);
    out.psi.push_back(psi);
    out.mu_t.push_back(std::move(mu_t));
  }
  return out;
}

AdjointTrajectory solve_adjoint(const StateTrajectory& base, const AdjointSources& sources,
                                const PhysicsParams& params, const TimeScheme& scheme) {
  validate_scheme(scheme);
  const int N = base.nsteps();
  if (N < 1) throw ValidationError("solve_adjoint: base trajectory has no steps");
  const Grid2D& g = base.states[0].phi.grid;
  const std::size_t n = g.count();
  const double dt = scheme.dt;
  const double S = scheme.stabilization;
  const int cap = solver_iteration_cap(scheme, g);
  const double* a = params.kernel.a.v.data();
  const auto& d2F = params.potential.d2F;
  if (!d2F) throw ValidationError("solve_adjoint: potential has no F''");

  AdjointTrajectory adj;
  adj.dt = dt;
  adj.p.assign(N + 1, VectorField(g, VectorBc::NoSlip));
  adj.eta.assign(N + 1, ScalarField(g, ScalarBc::NeumannZero));
  adj.q.assign(N + 1, ScalarField(g, ScalarBc::NeumannZero));

  // Backward march of the exact transpose of the linearized step. prec and
  // erec accumulate what the step-k velocity and phase equations hand back to
  // level k; each turn of the loop consumes them, exposes the level-k
  // multipliers, and rebuilds the accumulators for level k-1. Every operator
  // below is the transpose of one evaluated by the tangent march, taken at
  // the same base level, so the duality sum over steps closes at the linear
  // solver tolerance instead of O(dt).
  VectorField prec(g, VectorBc::NoSlip);
  ScalarField erec(g, ScalarBc::NeumannZero);
  ScalarField xi_warm(g, ScalarBc::NeumannZero);
  bool have_warm = false;

  for (int k = N - 1; k >= 0; --k) {
    const State& bn = base.states[k];
    const State& bn1 = base.states[k + 1];

    // ---- momentum multiplier ----
    // forward order is helmholtz then projection; both are self-adjoint, so
    // the transpose projects first and reuses the same SPD solve.
    ScalarField q_raw;
    VectorField proj = project_divfree(prec, scheme.projection_tol, cap, &q_raw, nullptr);
    VectorField pbar = velocity_helmholtz(proj, params.nu, dt, scheme.linear_tol, cap, nullptr);

    // ---- phase source ----
    // carried accumulator plus the transposed Korteweg couplings; both force
    // terms in the tangent step use level k+1 fields, so their transposes do
    // too. s picks up the mu_t route, div(mu pbar) the mu-hat route.
    ScalarField zeta(g, ScalarBc::NeumannZero);
    {
      VectorField gphi = gradient(bn1.phi);
      ScalarField s(g, ScalarBc::NeumannZero);
      {
        const double* px = pbar.x.data();
        const double* py = pbar.y.data();
        const double* gx = gphi.x.data();
        const double* gy = gphi.y.data();
        double* ps = s.v.data();
        par::parallel_for(n, [=](std::size_t i) { ps[i] = px[i] * gx[i] + py[i] * gy[i]; });
      }
      ScalarField js = convolve(params.kernel, s);
      VectorField mp(g, VectorBc::NoSlip);
      {
        const double* pm = bn1.mu.v.data();
        const double* px = pbar.x.data();
        const double* py = pbar.y.data();
        double* mx = mp.x.data();
        double* my = mp.y.data();
        par::parallel_for(n, [=](std::size_t i) {
          mx[i] = pm[i] * px[i];
          my[i] = pm[i] * py[i];
        });
      }
      ScalarField dmp = divergence(mp);
      const double* pe = erec.v.data();
      const double* ps = s.v.data();
      const double* pj = js.v.data();
      const double* pd = dmp.v.data();
      const double* ph1 = bn1.phi.v.data();
      double* pz = zeta.v.data();
      par::parallel_for(n, [&, pe, ps, pj, pd, ph1, pz](std::size_t i) {
        pz[i] = pe[i] + a[i] * ps[i] - pj[i] + d2F(ph1[i]) * ps[i] - pd[i];
      });
    }

    // chi = dt (zeta + xi) transposes the collapsed phase update, where
    // (I/dt - (a+S) Lap) xi = (a+S) Lap zeta. Neighbouring backward levels
    // give nearby xi, hence the warm start.
    ScalarField xi(g, ScalarBc::NeumannZero);
    {
      ScalarField lz = laplacian(zeta);
      ScalarField rhs_xi(g, ScalarBc::None);
      const double* pl = lz.v.data();
      double* pr = rhs_xi.v.data();
      par::parallel_for(n, [=](std::size_t i) { pr[i] = (a[i] + S) * pl[i]; });
      xi = phi_helmholtz_transpose(rhs_xi, params.kernel, S, dt, scheme.linear_tol, cap, nullptr,
                                   have_warm ? &xi_warm : nullptr);
      xi_warm.v = xi.v;
      have_warm = true;
    }

    // exposed multipliers, scaled by 1/dt so the reduced gradient reads
    // l_U(U^k) + p[k] with no extra time factor
    {
      double* po = adj.eta[k].v.data();
      const double* pz = zeta.v.data();
      const double* px = xi.v.data();
      par::parallel_for(n, [=](std::size_t i) { po[i] = pz[i] + px[i]; });
      adj.p[k] = pbar;
      scale(adj.p[k], 1.0 / dt);
      scale(q_raw, 1.0 / dt);
      adj.q[k] = std::move(q_raw);
    }

    if (k == 0) break;  // level-0 accumulators would pair the fixed initial data

    const ScalarField& e = adj.eta[k];  // chi / dt

    // erec <- chi/dt + B Lap(chi) + u^k . grad(chi) + dt h_phi(t_k, phi^k),
    // with B g = F''(phi^k) g - J*g - S g; the tangent step applied Lap B to
    // psi^k, and both factors are self-adjoint.
    {
      ScalarField lch = laplacian(e);
      ScalarField jl = convolve(params.kernel, lch);
      ScalarField ag = advect_grad(bn.u, e);
      const double* pv = e.v.data();
      const double* pl = lch.v.data();
      const double* pj = jl.v.data();
      const double* pg = ag.v.data();
      const double* ph = bn.phi.v.data();
      double* po = erec.v.data();
      par::parallel_for(n, [&, pv, pl, pj, pg, ph, po](std::size_t i) {
        po[i] = pv[i] + dt * (d2F(ph[i]) * pl[i] - pj[i] - S * pl[i] + pg[i]);
      });
      if (sources.h_phi) {
        ScalarField hsrc = sources.h_phi(bn.t, bn.phi);
        axpy(erec, dt, hsrc);
      }
    }

    // prec <- pbar/dt - (grad u)^T pbar + div(u pbar_c) per component
    //         + phi^k grad(chi) + dt g_u(t_k, u^k).
    // The flux-form divergences transpose the convective (u . grad) w term,
    // mirroring the grad/div duality the operators are built around.
    {
      VectorField ct = convect_transpose(bn.u, pbar);
      ScalarField pc(g, ScalarBc::NeumannZero);
      pc.v = pbar.x;
      ScalarField ax = advect_div(bn.u, pc);
      pc.v = pbar.y;
      ScalarField ay = advect_div(bn.u, pc);
      VectorField ge = gradient(e);
      const double* px = pbar.x.data();
      const double* py = pbar.y.data();
      const double* ctx = ct.x.data();
      const double* cty = ct.y.data();
      const double* pax = ax.v.data();
      const double* pay = ay.v.data();
      const double* gex = ge.x.data();
      const double* gey = ge.y.data();
      const double* ph = bn.phi.v.data();
      double* rx = prec.x.data();
      double* ry = prec.y.data();
      const double idt = 1.0 / dt;
      par::parallel_for(n, [=](std::size_t i) {
        rx[i] = px[i] * idt - ctx[i] + pax[i] + dt * ph[i] * gex[i];
        ry[i] = py[i] * idt - cty[i] + pay[i] + dt * ph[i] * gey[i];
      });
      if (sources.g_u) {
        VectorField gsrc = sources.g_u(bn.t, bn.u);
        axpy(prec, dt, gsrc);
      }
    }
  }
  return adj;
}

RegularityReport adjoint_regularity_report(const AdjointTrajectory& adj) {
  RegularityReport r;
  const double dt = adj.dt;
  double p_h1 = 0.0, eta_h1 = 0.0;
  for (std::size_t k = 0; k < adj.p.size(); ++k) {
    const double pn = norm2(adj.p[k]);
    const double en = norm2(adj.eta[k]);
    r.p_linf_l2 = std::max(r.p_linf_l2, pn);
    r.eta_linf_l2 = std::max(r.eta_linf_l2, en);
    r.p_max = std::max(r.p_max, max_abs(adj.p[k]));
    r.eta_max = std::max(r.eta_max, max_abs(adj.eta[k]));
    p_h1 += dt * (pn * pn + grad_sq_face(adj.p[k]));
    eta_h1 += dt * (en * en + grad_sq_face(adj.eta[k]));
  }
  r.p_l2_h1 = std::sqrt(p_h1);
  r.eta_l2_h1 = std::sqrt(eta_h1);
  r.bounded = std::isfinite(r.p_l2_h1) && std::isfinite(r.eta_l2_h1) &&
              std::isfinite(r.p_linf_l2) && std::isfinite(r.eta_linf_l2);
  std::ostringstream os;
  os << "p: Linf-L2=" << r.p_linf_l2 << " L2-H1=" << r.p_l2_h1 << " sup=" << r.p_max
     << "; eta: Linf-L2=" << r.eta_linf_l2 << " L2-H1=" << r.eta_l2_h1 << " sup=" << r.eta_max
     << (r.bounded ? "" : "; NOT bounded");
  r.summary = os.str();
  return r;
}

} // namespace chns
