#include "chns/control.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "chns/ops.hpp"
#include "chns/parallel.hpp"
#include "chns/rng.hpp"

namespace chns {

CostSpec quadratic_tracking(double alpha_u, double alpha_phi, double lambda) {
  if (alpha_u < 0.0 || alpha_phi < 0.0 || lambda <= 0.0)
    throw ValidationError("cost: weights must be nonnegative and lambda positive");
  CostSpec c;
  c.quadratic = true;
  c.alpha_u = alpha_u;
  c.alpha_phi = alpha_phi;
  c.lambda = lambda;
  c.g = [alpha_u](double, const VectorField& u) { return 0.5 * alpha_u * inner(u, u); };
  c.h = [alpha_phi](double, const ScalarField& f) { return 0.5 * alpha_phi * inner(f, f); };
  c.l = [lambda](const VectorField& U) { return 0.5 * lambda * inner(U, U); };
  c.g_u = [alpha_u](double, const VectorField& u) {
    VectorField r = u;
    scale(r, alpha_u);
    return r;
  };
  c.h_phi = [alpha_phi](double, const ScalarField& f) {
    ScalarField r = f;
    scale(r, alpha_phi);
    return r;
  };
  c.l_U = [lambda](const VectorField& U) {
    VectorField r = U;
    scale(r, lambda);
    return r;
  };
  c.g_uu = [alpha_u](double, const VectorField&, const VectorField& d) {
    return alpha_u * inner(d, d);
  };
  c.h_phiphi = [alpha_phi](double, const ScalarField&, const ScalarField& d) {
    return alpha_phi * inner(d, d);
  };
  c.l_UU = [lambda](const VectorField&, const VectorField& d) { return lambda * inner(d, d); };
  return c;
}

double evaluate_cost(const StateTrajectory& traj, const ControlTrajectory& controls,
                     const CostSpec& cost) {
  const int N = traj.nsteps();
  if (static_cast<int>(controls.U.size()) != N)
    throw ValidationError("evaluate_cost: control count must equal the step count");
  double sum = 0.0;
  for (int k = 0; k < N; ++k) {
    const State& s = traj.states[k];
    if (cost.g) sum += cost.g(s.t, s.u);
    if (cost.h) sum += cost.h(s.t, s.phi);
    if (cost.l) sum += cost.l(controls.U[k]);
  }
  return traj.dt * sum;
}

AdjointSources adjoint_sources(const CostSpec& cost) {
  AdjointSources src;
  src.g_u = cost.g_u;
  src.h_phi = cost.h_phi;
  return src;
}

std::vector<VectorField> reduced_gradient(const ControlTrajectory& controls,
                                          const AdjointTrajectory& adj, const CostSpec& cost) {
  const int N = static_cast<int>(controls.U.size());
  if (static_cast<int>(adj.p.size()) != N + 1)
    throw ValidationError("reduced_gradient: adjoint length mismatch");
  std::vector<VectorField> G;
  G.reserve(N);
  for (int k = 0; k < N; ++k) {
    VectorField g = cost.l_U ? cost.l_U(controls.U[k]) : VectorField(controls.U[k].grid, VectorBc::None);
    axpy(g, 1.0, adj.p[k]);
    G.push_back(std::move(g));
  }
  return G;
}

namespace {

void clip_field(VectorField& v, double lo, double hi) {
  double* px = v.x.data();
  double* py = v.y.data();
  par::parallel_for(v.x.size(), [=](std::size_t i) {
    px[i] = std::min(hi, std::max(lo, px[i]));
    py[i] = std::min(hi, std::max(lo, py[i]));
  });
}

double projected_residual(const ControlTrajectory& U, const std::vector<VectorField>& G,
                          double step_scale) {
  double res = 0.0;
  for (std::size_t k = 0; k < U.U.size(); ++k) {
    VectorField trial = U.U[k];
    axpy(trial, -1.0 / step_scale, G[k]);
    clip_field(trial, U.box_min, U.box_max);
    axpy(trial, -1.0, U.U[k]);
    res = std::max(res, max_abs(trial));
  }
  return res;
}

} // namespace

OptimizeResult optimize(const State& s0, const ControlTrajectory& U0,
                        const PhysicsParams& params, const TimeScheme& scheme,
                        const CostSpec& cost, const OptimizerConfig& config) {
  if (config.max_iters < 0 || config.tol <= 0.0 || config.armijo_c <= 0.0 ||
      config.backtrack <= 0.0 || config.backtrack >= 1.0)
    throw ValidationError("optimizer: bad configuration");
  if (!(U0.box_min <= U0.box_max)) throw ValidationError("optimizer: empty control box");

  OptimizeResult out;
  out.controls = U0;
  for (auto& Uk : out.controls.U) clip_field(Uk, U0.box_min, U0.box_max);

  const double step_scale = cost.quadratic ? cost.lambda : 1.0;
  double alpha = config.alpha_init > 0.0 ? config.alpha_init : 1.0 / step_scale;
  const double alpha_max = 1e6 / step_scale;
  const double alpha_min = 1e-6 / step_scale;

  AdjointSources sources = adjoint_sources(cost);
  out.trajectory = simulate(s0, out.controls, params, scheme);
  double J = evaluate_cost(out.trajectory, out.controls, cost);
  out.cost_history.push_back(J);

  // spectral (Barzilai-Borwein) trial step: plain projected gradient with a
  // fixed or doubled step zig-zags once the step saturates at 2/curvature,
  // while the BB quotient adapts to the local Rayleigh curvature and keeps
  // the iteration contracting; armijo backtracking below preserves monotone
  // cost history either way
  ControlTrajectory U_prev;
  std::vector<VectorField> G_prev;
  bool have_prev = false;

  const double dt = scheme.dt;
  for (int it = 0;; ++it) {
    out.adjoint = solve_adjoint(out.trajectory, sources, params, scheme);
    std::vector<VectorField> G = reduced_gradient(out.controls, out.adjoint, cost);
    out.residual = projected_residual(out.controls, G, step_scale);
    out.iterations = it;
    if (out.residual <= config.tol) {
      out.converged = true;
      return out;
    }
    if (it >= config.max_iters) return out;

    if (have_prev) {
      double ss = 0.0, sy = 0.0;
      for (std::size_t k = 0; k < out.controls.U.size(); ++k) {
        VectorField s = out.controls.U[k];
        axpy(s, -1.0, U_prev.U[k]);
        VectorField y = G[k];
        axpy(y, -1.0, G_prev[k]);
        ss += dt * inner(s, s);
        sy += dt * inner(s, y);
      }
      if (sy > 0.0) alpha = std::min(alpha_max, std::max(alpha_min, ss / sy));
    }
    U_prev = out.controls;
    G_prev = G;
    have_prev = true;

    bool accepted = false;
    for (int ls = 0; ls < config.max_line_steps; ++ls) {
      ControlTrajectory trial = out.controls;
      for (std::size_t k = 0; k < trial.U.size(); ++k) {
        axpy(trial.U[k], -alpha, G[k]);
        clip_field(trial.U[k], trial.box_min, trial.box_max);
      }
      double decrement = 0.0;
      for (std::size_t k = 0; k < trial.U.size(); ++k) {
        VectorField d = out.controls.U[k];
        axpy(d, -1.0, trial.U[k]);
        decrement += dt * inner(G[k], d);
      }
      if (decrement <= 0.0) break;  // no feasible descent along this direction

      StateTrajectory traj_trial = simulate(s0, trial, params, scheme);
      const double J_trial = evaluate_cost(traj_trial, trial, cost);
      if (J_trial <= J - config.armijo_c * decrement) {
        out.controls = std::move(trial);
        out.trajectory = std::move(traj_trial);
        J = J_trial;
        out.cost_history.push_back(J);
        accepted = true;
        break;
      }
      alpha *= config.backtrack;
    }
    if (!accepted) return out;  // line search exhausted; residual reported above
  }
}

double pontryagin_residual(const ControlTrajectory& controls, const AdjointTrajectory& adj,
                           const CostSpec& cost) {
  const int N = static_cast<int>(controls.U.size());
  if (static_cast<int>(adj.p.size()) != N + 1)
    throw ValidationError("pontryagin_residual: adjoint length mismatch");

  if (cost.quadratic) {
    double res = 0.0;
    for (int k = 0; k < N; ++k) {
      VectorField best = adj.p[k];
      scale(best, -1.0 / cost.lambda);
      clip_field(best, controls.box_min, controls.box_max);
      axpy(best, -1.0, controls.U[k]);
      res = std::max(res, max_abs(best));
    }
    return res;
  }

  // sampled minimum-principle check: the achieved value l(U) + (p, U) must not
  // exceed the best sampled candidate by more than the returned residual
  if (!cost.l) throw ValidationError("pontryagin_residual: cost has no control term");
  Rng rng(0x504e54ull);
  const Grid2D& g = controls.U.empty() ? adj.p[0].grid : controls.U[0].grid;
  double spread = 1.0;
  for (const auto& Uk : controls.U) spread = std::max(spread, max_abs(Uk));
  const double lo = std::max(controls.box_min, -4.0 * spread);
  const double hi = std::min(controls.box_max, 4.0 * spread);
  double worst = 0.0;
  for (int k = 0; k < N; ++k) {
    const double achieved = cost.l(controls.U[k]) + inner(adj.p[k], controls.U[k]);
    double best = achieved;
    for (int c = 0; c < 12; ++c) {
      VectorField W(g, VectorBc::None);
      if (c < 8) {
        random_fill(rng, W, lo, hi);
      } else {
        // box corners (clipped to a finite window) and the zero control
        const double vals[4][2] = {{lo, lo}, {hi, hi}, {lo, hi}, {0.0, 0.0}};
        std::fill(W.x.begin(), W.x.end(), vals[c - 8][0]);
        std::fill(W.y.begin(), W.y.end(), vals[c - 8][1]);
        clip_field(W, controls.box_min, controls.box_max);
      }
      best = std::min(best, cost.l(W) + inner(adj.p[k], W));
    }
    worst = std::max(worst, achieved - best);
  }
  return worst;
}

double hamiltonian(const State& s, const VectorField& U, const VectorField& p,
                   const ScalarField& eta, const PhysicsParams& params, const CostSpec& cost) {
  auto rhs = n1_n2(params, s.u, s.phi, U, s.pi);
  double val = inner(p, rhs.first) + inner(eta, rhs.second);
  if (cost.g) val += cost.g(s.t, s.u);
  if (cost.h) val += cost.h(s.t, s.phi);
  if (cost.l) val += cost.l(U);
  return val;
}

SecondOrderProbe make_probe(const StateTrajectory& base, const std::vector<VectorField>& dU,
                            const PhysicsParams& params, const TimeScheme& scheme) {
  SecondOrderProbe probe;
  probe.dU = dU;
  probe.lin = solve_linearized(base, dU, params, scheme);
  return probe;
}

namespace {

struct FormTerms {
  double value = 0.0;
  double abs_sum = 0.0;
};

FormTerms form_terms(const StateTrajectory& base, const ControlTrajectory& controls,
                     const AdjointTrajectory& adj, const SecondOrderProbe& probe,
                     const CostSpec& cost, const PhysicsParams& params, const double theta[4]) {
  const int N = base.nsteps();
  if (static_cast<int>(probe.dU.size()) != N)
    throw ValidationError("second_order_form: probe length mismatch");
  if (!params.potential.d3F)
    throw ValidationError("second_order_form: potential has no third derivative evaluator");
  if (!cost.g_uu || !cost.h_phiphi || !cost.l_UU)
    throw ValidationError("second_order_form: cost has no second derivative evaluators");

  const Grid2D& g = base.states[0].phi.grid;
  const std::size_t n = g.count();
  const double dt = base.dt;
  const auto& d3F = params.potential.d3F;
  const double* gax = params.kernel.grad_a.x.data();
  const double* gay = params.kernel.grad_a.y.data();

  double acc = 0.0, acc_abs = 0.0;
  for (int k = 0; k < N; ++k) {
    const State& bs = base.states[k];
    const VectorField& w = probe.lin.w[k];
    const ScalarField& psi = probe.lin.psi[k];
    const VectorField& pk = adj.p[k];
    const ScalarField& ek = adj.eta[k];
    const double t = bs.t;

    double tA, tB, tC;
    {
      VectorField ub = bs.u;
      axpy(ub, theta[0], w);
      tA = cost.g_uu(t, ub, w);
      ScalarField pb = bs.phi;
      axpy(pb, theta[1], psi);
      tB = cost.h_phiphi(t, pb, psi);
      VectorField Ub = controls.U[k];
      axpy(Ub, theta[2], probe.dU[k]);
      tC = cost.l_UU(Ub, probe.dU[k]);
    }

    // -2 ( (w.grad)w + grad a psi^2/2 + (J*psi) grad psi , p )
    VectorField quad = convect(w, w);
    {
      ScalarField jpsi = convolve(params.kernel, psi);
      VectorField gpsi = gradient(psi);
      const double* ps = psi.v.data();
      const double* pj = jpsi.v.data();
      const double* gx = gpsi.x.data();
      const double* gy = gpsi.y.data();
      double* qx = quad.x.data();
      double* qy = quad.y.data();
      par::parallel_for(n, [=](std::size_t i) {
        qx[i] += 0.5 * gax[i] * ps[i] * ps[i] + pj[i] * gx[i];
        qy[i] += 0.5 * gay[i] * ps[i] * ps[i] + pj[i] * gy[i];
      });
    }
    const double tD = -2.0 * inner(quad, pk);
    const double tE = -2.0 * inner(advect_grad(w, psi), ek);

    double tF;
    {
      ScalarField f3(g, ScalarBc::None);
      const double* ph = bs.phi.v.data();
      const double* ps = psi.v.data();
      double* o = f3.v.data();
      const double th4 = theta[3];
      par::parallel_for(n, [&, ph, ps, o, th4](std::size_t i) {
        o[i] = d3F(ph[i] + th4 * ps[i]) * ps[i] * ps[i];
      });
      tF = inner(f3, laplacian(ek));
    }

    acc += tA + tB + tC + tD + tE + tF;
    acc_abs += std::fabs(tA) + std::fabs(tB) + std::fabs(tC) + std::fabs(tD) + std::fabs(tE) +
               std::fabs(tF);
  }
  FormTerms ft;
  ft.value = dt * acc;
  ft.abs_sum = dt * acc_abs;
  return ft;
}

} // namespace

double second_order_form(const StateTrajectory& base, const ControlTrajectory& controls,
                         const AdjointTrajectory& adj, const SecondOrderProbe& probe,
                         const CostSpec& cost, const PhysicsParams& params,
                         const double theta[4]) {
  return form_terms(base, controls, adj, probe, cost, params, theta).value;
}

namespace {

SecondOrderReport evaluate_forms(const StateTrajectory& base, const ControlTrajectory& controls,
                                 const AdjointTrajectory& adj,
                                 const std::vector<SecondOrderProbe>& probes,
                                 const CostSpec& cost, const PhysicsParams& params,
                                 const std::vector<double>& theta_grid) {
  if (probes.empty()) throw ValidationError("second-order check: no probes");
  if (theta_grid.empty()) throw ValidationError("second-order check: empty theta grid");

  SecondOrderReport rep;
  rep.min_value = std::numeric_limits<double>::infinity();
  rep.margin = std::numeric_limits<double>::infinity();
  const double dt = base.dt;

  for (const auto& probe : probes) {
    double du_sq = 0.0;
    for (const auto& d : probe.dU) du_sq += dt * inner(d, d);
    double probe_min = std::numeric_limits<double>::infinity();

    auto eval_theta = [&](const double th[4]) {
      FormTerms ft = form_terms(base, controls, adj, probe, cost, params, th);
      rep.values.push_back(ft.value);
      if (ft.value < rep.min_value) {
        rep.min_value = ft.value;
        rep.scale = std::max(ft.abs_sum, 1e-30);
      }
      probe_min = std::min(probe_min, ft.value);
    };

    if (cost.quadratic) {
      // theta_1..3 enter only through the cost's second derivatives, which are
      // constant for the quadratic form; only theta_4 matters
      for (double t4 : theta_grid) {
        const double th[4] = {0.5, 0.5, 0.5, t4};
        eval_theta(th);
      }
    } else {
      for (double t1 : theta_grid)
        for (double t2 : theta_grid)
          for (double t3 : theta_grid)
            for (double t4 : theta_grid) {
              const double th[4] = {t1, t2, t3, t4};
              eval_theta(th);
            }
    }
    if (du_sq > 0.0) rep.margin = std::min(rep.margin, probe_min / du_sq);
  }
  return rep;
}

} // namespace

SecondOrderReport check_necessary(const StateTrajectory& base, const ControlTrajectory& controls,
                                  const AdjointTrajectory& adj,
                                  const std::vector<SecondOrderProbe>& probes,
                                  const CostSpec& cost, const PhysicsParams& params,
                                  const std::vector<double>& theta_grid, double tol_scale) {
  SecondOrderReport rep = evaluate_forms(base, controls, adj, probes, cost, params, theta_grid);
  rep.necessary_ok = rep.min_value >= -tol_scale * rep.scale;
  return rep;
}

SecondOrderReport check_sufficient(const StateTrajectory& base, const ControlTrajectory& controls,
                                   const AdjointTrajectory& adj,
                                   const std::vector<SecondOrderProbe>& probes,
                                   const CostSpec& cost, const PhysicsParams& params,
                                   const std::vector<double>& theta_grid, double delta) {
  SecondOrderReport rep = evaluate_forms(base, controls, adj, probes, cost, params, theta_grid);
  rep.necessary_ok = rep.min_value >= 0.0;
  rep.sufficient_ok = rep.margin > delta;
  return rep;
}

} // namespace chns
