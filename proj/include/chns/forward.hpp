#pragma once

#include <limits>
#include <vector>

#include "chns/grid.hpp"
#include "chns/physics.hpp"

namespace chns {

struct State {
  VectorField u;      // no-slip
  ScalarField phi;    // neumann-zero
  ScalarField mu;     // neumann-zero, consistent with phi
  ScalarField pi;     // zero-mean pressure
  double t = 0.0;
};

// Builds mu from phi and zeroes the pressure.
State make_state(const PhysicsParams& params, const VectorField& u0, const ScalarField& phi0);

struct TimeScheme {
  double dt = 0.0;
  double stabilization = 2.0;     // S in the split F'(phi^n) - S phi^n vs implicit (a+S)
  double projection_tol = 1e-13;
  double linear_tol = 1e-10;
  double max_iter_factor = 10.0;  // iteration cap = ceil(factor * nx * ny), fractions allowed
};

void validate_scheme(const TimeScheme& scheme);

// Linear solver iteration budget for a grid under this scheme, at least 1.
int solver_iteration_cap(const TimeScheme& scheme, const Grid2D& grid);

struct ControlTrajectory {
  std::vector<VectorField> U;  // one per step, left endpoint convention
  double box_min = -std::numeric_limits<double>::infinity();
  double box_max = std::numeric_limits<double>::infinity();
};

ControlTrajectory zero_controls(const Grid2D& grid, int nsteps);

struct StepDiagnostics {
  double t = 0.0;
  double energy = 0.0;
  double mass = 0.0;
  double grad_u_sq = 0.0;
  double grad_mu_sq = 0.0;
};

struct StepStats {
  double cfl = 0.0;        // dt * ||u||_inf / min(h)
  int phi_iters = 0;
  int u_iters = 0;
  int proj_iters = 0;
};

struct StateTrajectory {
  std::vector<State> states;           // N+1 entries
  std::vector<StepDiagnostics> diag;   // N+1 entries, aligned with states
  double dt = 0.0;
  double max_cfl = 0.0;
  bool cfl_warning = false;            // any step had cfl > 0.5

  int nsteps() const { return static_cast<int>(states.size()) - 1; }
};

// One IMEX step: implicit (a+S)-weighted phase diffusion and viscous drag,
// explicit everything else, then pressure projection. The phi update is
// re-evaluated from the Helmholtz solution in conservative flux form, so the
// discrete mass is exact regardless of the linear solver tolerance.
State step(const State& s, const VectorField* Un, const PhysicsParams& params,
           const TimeScheme& scheme, StepStats* stats = nullptr);

StateTrajectory simulate(const State& s0, const ControlTrajectory& controls,
                         const PhysicsParams& params, const TimeScheme& scheme);

// Difference of two feasible control/state pairs (same grid, same step count).
struct FeasibleDifference {
  std::vector<VectorField> du;     // N+1
  std::vector<ScalarField> dphi;   // N+1
  std::vector<VectorField> dU;     // N
};

FeasibleDifference feasible_difference(const StateTrajectory& a, const ControlTrajectory& Ua,
                                       const StateTrajectory& b, const ControlTrajectory& Ub);

} // namespace chns
