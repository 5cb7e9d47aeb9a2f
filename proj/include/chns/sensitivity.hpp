#pragma once

#include <functional>
#include <string>
#include <vector>

#include "chns/forward.hpp"

namespace chns {

// Tangent (Gateaux derivative) of the discrete forward march along a control
// perturbation. psi carries the phase perturbation, w the velocity one,
// mu_t the linearized chemical potential a psi - J*psi + F''(phi_hat) psi.
struct LinearizedTrajectory {
  std::vector<VectorField> w;      // N+1
  std::vector<ScalarField> psi;    // N+1
  std::vector<ScalarField> mu_t;   // N+1 (entry 0 from the initial data)
  double dt = 0.0;
};

// deltaU may be empty (pure initial-value perturbation). w0/psi0 may be null
// for zero initial perturbations.
LinearizedTrajectory solve_linearized(const StateTrajectory& base,
                                      const std::vector<VectorField>& deltaU,
                                      const PhysicsParams& params, const TimeScheme& scheme,
                                      const VectorField* w0 = nullptr,
                                      const ScalarField* psi0 = nullptr);

// Source terms of the adjoint system: derivatives of the running cost at the
// base trajectory level.
struct AdjointSources {
  std::function<VectorField(double, const VectorField&)> g_u;
  std::function<ScalarField(double, const ScalarField&)> h_phi;
};

struct AdjointTrajectory {
  std::vector<VectorField> p;    // N+1, p[N] = 0
  std::vector<ScalarField> eta;  // N+1, eta[N] = 0
  std::vector<ScalarField> q;    // N+1, adjoint pressure (q[N] = 0)
  double dt = 0.0;
};

// Backward march for the adjoint pair, built as the exact transpose of the
// tangent step (solver tolerances aside), so trajectory sums of (p, deltaU)
// reproduce the cost sensitivities to rounding rather than to O(dt):
// p[k] and eta[k] are the momentum/phase multipliers pairing the step-k
// equations, and the reduced gradient is l_U(U^k) + p[k] exactly.
AdjointTrajectory solve_adjoint(const StateTrajectory& base, const AdjointSources& sources,
                                const PhysicsParams& params, const TimeScheme& scheme);

struct RegularityReport {
  double p_linf_l2 = 0.0;    // max over time of ||p(t)||_L2
  double p_l2_h1 = 0.0;      // sqrt(integral of ||p||^2 + ||grad p||^2)
  double eta_linf_l2 = 0.0;
  double eta_l2_h1 = 0.0;
  double p_max = 0.0;        // pointwise sup
  double eta_max = 0.0;
  bool bounded = false;
  std::string summary;
};

RegularityReport adjoint_regularity_report(const AdjointTrajectory& adj);

} // namespace chns
