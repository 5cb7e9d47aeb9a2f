#pragma once

// Internal implicit-solve helpers shared by the forward, linearized and
// adjoint marches. Not installed; include only from src/.

#include "chns/grid.hpp"
#include "chns/kernel.hpp"

namespace chns {
namespace internal {

// (I/dt - Lap_neu((a+S) .)) x = rhs via the SPD substitution zeta = (a+S) x.
ScalarField phi_helmholtz(const ScalarField& rhs, const Kernel& kernel, double S, double dt,
                          double tol, int max_iters, int* iters_out);

// Transposed operator (I/dt - (a+S) Lap_neu) x = rhs. Dividing by (a+S) turns
// it into the same SPD system phi_helmholtz solves, with x as the unknown
// directly. warm (optional) seeds the CG iteration.
ScalarField phi_helmholtz_transpose(const ScalarField& rhs, const Kernel& kernel, double S,
                                    double dt, double tol, int max_iters, int* iters_out,
                                    const ScalarField* warm = nullptr);

// (I/dt + nu (-Lap_dir)) x = rhs, both components in one CG.
VectorField velocity_helmholtz(const VectorField& rhs, double nu, double dt, double tol,
                               int max_iters, int* iters_out);

} // namespace internal
} // namespace chns
