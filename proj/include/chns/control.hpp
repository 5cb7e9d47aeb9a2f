#pragma once

#include <functional>
#include <vector>

#include "chns/forward.hpp"
#include "chns/sensitivity.hpp"

namespace chns {

// Running cost J(U) = int_0^T [ g(t,u) + h(t,phi) + l(U) ] dt, discretized by
// the left-endpoint rule over the step states. The quadratic tracking form
//   g = alpha_u/2 |u|^2, h = alpha_phi/2 |phi|^2, l = lambda/2 |U|^2
// is built in; custom evaluators may replace any of the pieces. Second
// derivative hooks evaluate the quadratic form at (base, direction).
struct CostSpec {
  bool quadratic = true;
  double alpha_u = 1.0;
  double alpha_phi = 1.0;
  double lambda = 1.0;

  std::function<double(double, const VectorField&)> g;
  std::function<double(double, const ScalarField&)> h;
  std::function<double(const VectorField&)> l;
  std::function<VectorField(double, const VectorField&)> g_u;
  std::function<ScalarField(double, const ScalarField&)> h_phi;
  std::function<VectorField(const VectorField&)> l_U;
  std::function<double(double, const VectorField&, const VectorField&)> g_uu;   // (t, base, dir)
  std::function<double(double, const ScalarField&, const ScalarField&)> h_phiphi;
  std::function<double(const VectorField&, const VectorField&)> l_UU;
};

CostSpec quadratic_tracking(double alpha_u, double alpha_phi, double lambda);

double evaluate_cost(const StateTrajectory& traj, const ControlTrajectory& controls,
                     const CostSpec& cost);

AdjointSources adjoint_sources(const CostSpec& cost);

// G^n = l_U(U^n) + p^n
std::vector<VectorField> reduced_gradient(const ControlTrajectory& controls,
                                          const AdjointTrajectory& adj, const CostSpec& cost);

struct OptimizerConfig {
  int max_iters = 100;
  double tol = 1e-6;          // on the projected-step residual below
  double armijo_c = 1e-4;
  double backtrack = 0.5;
  double alpha_init = 0.0;    // 0 picks 1/lambda for quadratic costs, else 1
  int max_line_steps = 40;
};

struct OptimizeResult {
  ControlTrajectory controls;
  std::vector<double> cost_history;   // accepted iterates, starting with the initial cost
  double residual = 0.0;              // final stopping residual
  int iterations = 0;
  bool converged = false;
  StateTrajectory trajectory;         // at the returned controls
  AdjointTrajectory adjoint;
};

// Projected gradient with Armijo backtracking. The stopping residual is
// max_n || U^n - clip(U^n - G^n / s) ||_inf with s = lambda for the quadratic
// control cost (s = 1 otherwise), which is exactly the fixed-point residual of
// the pointwise minimum principle, so `pontryagin_residual` of a converged run
// is bounded by the stopping tolerance.
OptimizeResult optimize(const State& s0, const ControlTrajectory& U0,
                        const PhysicsParams& params, const TimeScheme& scheme,
                        const CostSpec& cost, const OptimizerConfig& config);

// Max over steps of the pointwise violation of the minimum principle:
// for the quadratic cost || U - clip(-p/lambda) ||_inf; for general l a
// sampled check over candidate controls in the box.
double pontryagin_residual(const ControlTrajectory& controls, const AdjointTrajectory& adj,
                           const CostSpec& cost);

// H = g + h + l + (p, N1) + (eta, N2) with the evolution-law right-hand sides.
double hamiltonian(const State& s, const VectorField& U, const VectorField& p,
                   const ScalarField& eta, const PhysicsParams& params, const CostSpec& cost);

// One probe direction for the second-order forms: a control direction and the
// corresponding linearized state response.
struct SecondOrderProbe {
  std::vector<VectorField> dU;   // N entries
  LinearizedTrajectory lin;
};

SecondOrderProbe make_probe(const StateTrajectory& base, const std::vector<VectorField>& dU,
                            const PhysicsParams& params, const TimeScheme& scheme);

// Quadratic form of the second-order optimality condition at intermediate
// points theta = (t1, t2, t3, t4) in [0,1]^4:
//   int [ g_uu(u+t1 w; w) + h_pp(phi+t2 psi; psi) + l_UU(U+t3 dU; dU) ] dt
//   - 2 int ( (w.grad)w + grad a psi^2/2 + (J*psi) grad psi , p ) dt
//   - 2 int ( w.grad psi , eta ) dt
//   + int ( F'''(phi + t4 psi) psi^2 , Lap eta ) dt
double second_order_form(const StateTrajectory& base, const ControlTrajectory& controls,
                         const AdjointTrajectory& adj, const SecondOrderProbe& probe,
                         const CostSpec& cost, const PhysicsParams& params,
                         const double theta[4]);

struct SecondOrderReport {
  double min_value = 0.0;        // over probes and theta samples
  double scale = 0.0;            // sum of absolute term magnitudes at the minimizer
  double margin = 0.0;           // min over probes of form / ||dU||^2 (sufficiency)
  bool necessary_ok = false;
  bool sufficient_ok = false;
  std::vector<double> values;    // one per (probe, theta) evaluation
};

// Evaluates the form over every probe and a theta grid; necessary_ok requires
// min >= -tol_scale * scale.
SecondOrderReport check_necessary(const StateTrajectory& base, const ControlTrajectory& controls,
                                  const AdjointTrajectory& adj,
                                  const std::vector<SecondOrderProbe>& probes,
                                  const CostSpec& cost, const PhysicsParams& params,
                                  const std::vector<double>& theta_grid, double tol_scale);

// Strengthened form: min over probes of form / ||dU||_L2^2 must exceed delta.
SecondOrderReport check_sufficient(const StateTrajectory& base, const ControlTrajectory& controls,
                                   const AdjointTrajectory& adj,
                                   const std::vector<SecondOrderProbe>& probes,
                                   const CostSpec& cost, const PhysicsParams& params,
                                   const std::vector<double>& theta_grid, double delta);

} // namespace chns
