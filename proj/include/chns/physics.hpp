#pragma once

#include <functional>
#include <string>
#include <utility>

#include "chns/grid.hpp"
#include "chns/kernel.hpp"

namespace chns {

// Double-well style potential. d3F may be left empty for custom potentials,
// in which case the second-order machinery refuses to run.
struct Potential {
  std::string name;
  std::function<double(double)> F;
  std::function<double(double)> dF;
  std::function<double(double)> d2F;
  std::function<double(double)> d3F;
};

Potential double_well_potential();   // F(s) = (s^2 - 1)^2

struct PhysicsParams {
  double nu = 0.1;
  Kernel kernel;
  Potential potential;
  VectorField forcing;   // steady body force; empty grid means none

  bool has_forcing() const { return forcing.grid.nx > 0; }
};

struct AssumptionReport {
  double a_min = 0.0;
  double kernel_min = 0.0;        // most negative tabulated kernel value
  double d2F_min = 0.0;           // min F'' over the scanned range
  double c0_estimate = 0.0;       // a_min + d2F_min
  double phi_lo = 0.0, phi_hi = 0.0;
  bool kernel_symmetric = false;
  bool kernel_nonnegative = false;
  bool c0_positive = false;
  bool potential_complete = false; // all four evaluators present
  std::string summary;

  bool ok() const { return kernel_symmetric && kernel_nonnegative && c0_positive; }
};

// Scans F'' on [phi_lo, phi_hi] and checks the kernel table. c0_estimate is
// the uniform convexity bound of the local part a(x) + F''(s).
AssumptionReport validate_assumptions(const PhysicsParams& params, double phi_lo = -1.5,
                                      double phi_hi = 1.5);

// mu = a phi - J * phi + F'(phi), neumann-zero tagged
ScalarField chemical_potential(const PhysicsParams& params, const ScalarField& phi);

// mu grad phi with phi's own closure
VectorField korteweg_force(const ScalarField& mu, const ScalarField& phi);

// E = 1/2 ||u||^2 + 1/2 (a phi, phi) - 1/2 (phi, J*phi) + int F(phi).
// The middle pair is the algebraic rewrite of the double-sum
// 1/4 iint J(x-y) (phi(x)-phi(y))^2, exact under the truncated convolution.
double energy(const PhysicsParams& params, const VectorField& u, const ScalarField& phi);

// Right-hand sides of the state system written as evolution laws
//   u_t = N1(u, phi, pi, U),  phi_t = N2(u, phi),
// with pi taken as the argument (no internal re-projection):
//   N1 = nu Lap u - (u.grad)u - grad pi - (J*phi) grad phi - grad a phi^2/2 + U
//   N2 = -u.grad phi + Lap(a phi - J*phi + F'(phi))
std::pair<VectorField, ScalarField> n1_n2(const PhysicsParams& params, const VectorField& u,
                                          const ScalarField& phi, const VectorField& U,
                                          const ScalarField& pi);

} // namespace chns
