#include "chns/physics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "chns/ops.hpp"
#include "chns/parallel.hpp"

namespace chns {

Potential double_well_potential() {
  Potential p;
  p.name = "double_well";
  p.F = [](double s) { return (s * s - 1.0) * (s * s - 1.0); };
  p.dF = [](double s) { return 4.0 * s * s * s - 4.0 * s; };
  p.d2F = [](double s) { return 12.0 * s * s - 4.0; };
  p.d3F = [](double s) { return 24.0 * s; };
  return p;
}

AssumptionReport validate_assumptions(const PhysicsParams& params, double phi_lo, double phi_hi) {
  AssumptionReport r;
  r.phi_lo = phi_lo;
  r.phi_hi = phi_hi;
  const Kernel& k = params.kernel;
  r.a_min = k.a_min;

  r.kernel_min = k.J.empty() ? 0.0 : *std::min_element(k.J.begin(), k.J.end());
  r.kernel_nonnegative = r.kernel_min >= 0.0;

  // J(-z) == J(z) on the tabulated lattice
  const int nx = k.grid.nx, ny = k.grid.ny, tw = 2 * nx - 1;
  r.kernel_symmetric = true;
  for (int oj = -(ny - 1); oj <= ny - 1 && r.kernel_symmetric; ++oj)
    for (int oi = -(nx - 1); oi <= nx - 1; ++oi) {
      const std::size_t t1 = static_cast<std::size_t>(oj + ny - 1) * tw + (oi + nx - 1);
      const std::size_t t2 = static_cast<std::size_t>(-oj + ny - 1) * tw + (-oi + nx - 1);
      if (k.J[t1] != k.J[t2]) {
        r.kernel_symmetric = false;
        break;
      }
    }

  r.potential_complete = static_cast<bool>(params.potential.F) &&
                         static_cast<bool>(params.potential.dF) &&
                         static_cast<bool>(params.potential.d2F) &&
                         static_cast<bool>(params.potential.d3F);

  if (!params.potential.d2F)
    throw ValidationError("validate_assumptions: potential has no second derivative evaluator");
  const int samples = 4001;
  double d2min = params.potential.d2F(phi_lo);
  for (int i = 1; i < samples; ++i) {
    const double s = phi_lo + (phi_hi - phi_lo) * i / (samples - 1);
    d2min = std::min(d2min, params.potential.d2F(s));
  }
  r.d2F_min = d2min;
  r.c0_estimate = r.a_min + d2min;
  r.c0_positive = r.c0_estimate > 0.0;

  std::ostringstream os;
  os << "a_min=" << r.a_min << " min F''=" << r.d2F_min << " c0=" << r.c0_estimate
     << " on [" << phi_lo << "," << phi_hi << "]; kernel "
     << (r.kernel_symmetric ? "symmetric" : "NOT symmetric") << ", "
     << (r.kernel_nonnegative ? "nonnegative" : "NOT nonnegative")
     << (r.potential_complete ? "" : "; potential lacks F''' (second-order checks unavailable)")
     << (r.c0_positive ? "" : "; convexity bound violated: F''(s) + a(x) can reach "
                              "nonpositive values, the phase-field operator may degenerate");
  r.summary = os.str();
  return r;
}

ScalarField chemical_potential(const PhysicsParams& params, const ScalarField& phi) {
  ScalarField conv = convolve(params.kernel, phi);
  ScalarField mu(phi.grid, ScalarBc::NeumannZero);
  const double* a = params.kernel.a.v.data();
  const double* ph = phi.v.data();
  const double* cv = conv.v.data();
  double* m = mu.v.data();
  const auto& dF = params.potential.dF;
  // dF is a std::function, keep the loop serial-friendly but still parallel
  par::parallel_for(phi.grid.count(),
                    [&, a, ph, cv, m](std::size_t i) { m[i] = a[i] * ph[i] - cv[i] + dF(ph[i]); });
  return mu;
}

VectorField korteweg_force(const ScalarField& mu, const ScalarField& phi) {
  require_same_grid(mu.grid, phi.grid, "korteweg_force");
  VectorField g = gradient(phi);
  const double* m = mu.v.data();
  double* gx = g.x.data();
  double* gy = g.y.data();
  par::parallel_for(phi.grid.count(), [=](std::size_t i) {
    gx[i] *= m[i];
    gy[i] *= m[i];
  });
  return g;
}

double energy(const PhysicsParams& params, const VectorField& u, const ScalarField& phi) {
  require_same_grid(u.grid, phi.grid, "energy");
  const double kinetic = 0.5 * inner(u, u);
  ScalarField conv = convolve(params.kernel, phi);
  const double* a = params.kernel.a.v.data();
  const double* ph = phi.v.data();
  const double* cv = conv.v.data();
  const auto& F = params.potential.F;
  const double cellw = phi.grid.cell();
  const double mix = cellw * par::reduce_sum(phi.grid.count(), [=, &F](std::size_t i) {
    return 0.5 * a[i] * ph[i] * ph[i] - 0.5 * ph[i] * cv[i] + F(ph[i]);
  });
  return kinetic + mix;
}

std::pair<VectorField, ScalarField> n1_n2(const PhysicsParams& params, const VectorField& u,
                                          const ScalarField& phi, const VectorField& U,
                                          const ScalarField& pi) {
  require_same_grid(u.grid, phi.grid, "n1_n2");
  const Grid2D& g = phi.grid;
  const std::size_t n = g.count();

  VectorField n1 = laplacian(u);
  scale(n1, params.nu);
  VectorField conv_u = convect(u, u);
  axpy(n1, -1.0, conv_u);
  VectorField gpi = gradient(pi);
  axpy(n1, -1.0, gpi);

  ScalarField jphi = convolve(params.kernel, phi);
  VectorField gphi = gradient(phi);
  const double* pj = jphi.v.data();
  const double* pph = phi.v.data();
  const double* gax = params.kernel.grad_a.x.data();
  const double* gay = params.kernel.grad_a.y.data();
  const double* gpx = gphi.x.data();
  const double* gpy = gphi.y.data();
  double* ox = n1.x.data();
  double* oy = n1.y.data();
  par::parallel_for(n, [=](std::size_t i) {
    ox[i] += -pj[i] * gpx[i] - 0.5 * gax[i] * pph[i] * pph[i];
    oy[i] += -pj[i] * gpy[i] - 0.5 * gay[i] * pph[i] * pph[i];
  });
  axpy(n1, 1.0, U);
  if (params.has_forcing()) axpy(n1, 1.0, params.forcing);

  ScalarField mu = chemical_potential(params, phi);
  ScalarField n2 = laplacian(mu);
  ScalarField adv = advect_grad(u, phi);
  axpy(n2, -1.0, adv);
  return {std::move(n1), std::move(n2)};
}

} // namespace chns
