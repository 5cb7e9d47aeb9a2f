#pragma once

#include <functional>
#include <string>
#include <vector>

#include "chns/grid.hpp"

// Difference operators on the cell-centered grid, and the few matrix-free
// Krylov solvers the schemes need.
//
// Boundary closures:
//  * bc-tagged scalars (neumann-zero, dirichlet-zero) and no-slip vector
//    components use the closure (f1 - f0)/(2h) for first derivatives. That row
//    is the exact negative transpose of the negate-ghost divergence below, so
//    inner(gradient(f), v) == -inner(f, divergence(v)) holds to roundoff for
//    any tagged f against any no-slip v. Inside the wall cells this halves the
//    derivative of a dirichlet field; all solver uses multiply it by a
//    quantity vanishing at the wall.
//  * bc none uses genuine second-order one-sided rows; these carry the
//    accuracy tests and are the right choice for derived data.
//  * Laplacians are the compact five-point stencil with ghost values from the
//    tag (reflect for neumann-zero, negate for dirichlet-zero / no-slip).
//    A laplacian of an untagged field is a validation error.

namespace chns {

void gradient(const ScalarField& f, VectorField& out);
VectorField gradient(const ScalarField& f);

void divergence(const VectorField& v, ScalarField& out);
ScalarField divergence(const VectorField& v);

void laplacian(const ScalarField& f, ScalarField& out);
ScalarField laplacian(const ScalarField& f);
void laplacian(const VectorField& v, VectorField& out);
VectorField laplacian(const VectorField& v);

// Raw-pointer Laplacian for solver inner loops; bc must be a real tag.
void laplacian_raw(const Grid2D& g, const double* f, double* out, ScalarBc bc);

// Conservative advection div(u f), flux closed with negate ghosts. Requires
// u.bc == NoSlip; the column sums of that divergence vanish identically, so
// the discrete integral of the result is exactly zero.
void advect_div(const VectorField& u, const ScalarField& f, ScalarField& out);
ScalarField advect_div(const VectorField& u, const ScalarField& f);

// Advective form u . grad f with f's own closure.
void advect_grad(const VectorField& u, const ScalarField& f, ScalarField& out);
ScalarField advect_grad(const VectorField& u, const ScalarField& f);

// (u . grad) v, componentwise advective form with v's closure.
void convect(const VectorField& u, const VectorField& v, VectorField& out);
VectorField convect(const VectorField& u, const VectorField& v);

// (grad u)^T p: out_x = p_x dx(u_x) + p_y dx(u_y), out_y likewise with dy.
void convect_transpose(const VectorField& u, const VectorField& p, VectorField& out);
VectorField convect_transpose(const VectorField& u, const VectorField& p);

// Discrete Dirichlet form matching the five-point Laplacian exactly:
// inner(-laplacian(f), f) == grad_sq_face(f) to roundoff. Used for the
// energy-identity diagnostics so they carry no spatial defect.
double grad_sq_face(const ScalarField& f);
double grad_sq_face(const VectorField& v);

// ---- matrix-free Krylov solvers on raw vectors ----

using ApplyFn = std::function<void(const std::vector<double>&, std::vector<double>&)>;

struct LinStats {
  int iterations = 0;
  double residual = 0.0;   // relative to ||b||
  bool converged = false;
};

// Conjugate gradients for SPD operators. x holds the initial guess on entry.
// Throws SolverError when the iteration cap is hit.
LinStats cg(const ApplyFn& apply, const std::vector<double>& b, std::vector<double>& x,
            double tol_rel, int max_iters, const std::string& name);

// BiCGStab for the nonsymmetric adjoint phase-field operator.
LinStats bicgstab(const ApplyFn& apply, const std::vector<double>& b, std::vector<double>& x,
                  double tol_rel, int max_iters, const std::string& name);

double dot(const std::vector<double>& a, const std::vector<double>& b);

// Orthogonal projection onto the discretely divergence-free subspace:
// solves (G^T G) pi' = -div v by CG and returns v - G pi'. The composed
// operator makes the projection idempotent and norm non-increasing by
// construction. pi_out (optional) receives the zero-mean multiplier pi'.
VectorField project_divfree(const VectorField& v, double tol, int max_iters,
                            ScalarField* pi_out = nullptr, LinStats* stats_out = nullptr);

} // namespace chns
