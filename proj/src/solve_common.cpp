#include "solve_common.hpp"

#include <algorithm>
#include <vector>

#include "chns/ops.hpp"
#include "chns/parallel.hpp"

namespace chns {
namespace internal {

ScalarField phi_helmholtz(const ScalarField& rhs, const Kernel& kernel, double S, double dt,
                          double tol, int max_iters, int* iters_out) {
  const Grid2D& g = rhs.grid;
  const std::size_t n = g.count();
  const double* a = kernel.a.v.data();

  std::vector<double> lap(n);
  ApplyFn apply = [&](const std::vector<double>& in, std::vector<double>& out) {
    out.resize(n);
    laplacian_raw(g, in.data(), lap.data(), ScalarBc::NeumannZero);
    const double* pin = in.data();
    const double* pl = lap.data();
    double* po = out.data();
    const double idt = 1.0 / dt;
    par::parallel_for(n, [=](std::size_t i) { po[i] = pin[i] * idt / (a[i] + S) - pl[i]; });
  };

  std::vector<double> zeta(n, 0.0);
  LinStats st = cg(apply, rhs.v, zeta, tol, max_iters, "phase helmholtz");
  if (iters_out) *iters_out = st.iterations;

  ScalarField out(g, ScalarBc::NeumannZero);
  double* po = out.v.data();
  const double* pz = zeta.data();
  par::parallel_for(n, [=](std::size_t i) { po[i] = pz[i] / (a[i] + S); });
  return out;
}

ScalarField phi_helmholtz_transpose(const ScalarField& rhs, const Kernel& kernel, double S,
                                    double dt, double tol, int max_iters, int* iters_out,
                                    const ScalarField* warm) {
  const Grid2D& g = rhs.grid;
  const std::size_t n = g.count();
  const double* a = kernel.a.v.data();

  std::vector<double> lap(n);
  ApplyFn apply = [&](const std::vector<double>& in, std::vector<double>& out) {
    out.resize(n);
    laplacian_raw(g, in.data(), lap.data(), ScalarBc::NeumannZero);
    const double* pin = in.data();
    const double* pl = lap.data();
    double* po = out.data();
    const double idt = 1.0 / dt;
    par::parallel_for(n, [=](std::size_t i) { po[i] = pin[i] * idt / (a[i] + S) - pl[i]; });
  };

  std::vector<double> b(n);
  {
    const double* pr = rhs.v.data();
    double* pbv = b.data();
    par::parallel_for(n, [=](std::size_t i) { pbv[i] = pr[i] / (a[i] + S); });
  }
  std::vector<double> x = warm ? warm->v : std::vector<double>(n, 0.0);
  LinStats st = cg(apply, b, x, tol, max_iters, "phase helmholtz transpose");
  if (iters_out) *iters_out = st.iterations;

  ScalarField out(g, ScalarBc::NeumannZero);
  out.v = std::move(x);
  return out;
}

VectorField velocity_helmholtz(const VectorField& rhs, double nu, double dt, double tol,
                               int max_iters, int* iters_out) {
  const Grid2D& g = rhs.grid;
  const std::size_t n = g.count();

  std::vector<double> lapx(n), lapy(n);
  ApplyFn apply = [&](const std::vector<double>& in, std::vector<double>& out) {
    out.resize(2 * n);
    laplacian_raw(g, in.data(), lapx.data(), ScalarBc::DirichletZero);
    laplacian_raw(g, in.data() + n, lapy.data(), ScalarBc::DirichletZero);
    const double* pin = in.data();
    const double* plx = lapx.data();
    const double* ply = lapy.data();
    double* po = out.data();
    const double idt = 1.0 / dt;
    par::parallel_for(n, [=](std::size_t i) {
      po[i] = pin[i] * idt - nu * plx[i];
      po[n + i] = pin[n + i] * idt - nu * ply[i];
    });
  };

  std::vector<double> b(2 * n);
  std::copy(rhs.x.begin(), rhs.x.end(), b.begin());
  std::copy(rhs.y.begin(), rhs.y.end(), b.begin() + n);
  std::vector<double> x(2 * n, 0.0);
  LinStats st = cg(apply, b, x, tol, max_iters, "velocity helmholtz");
  if (iters_out) *iters_out = st.iterations;

  VectorField out(g, VectorBc::NoSlip);
  std::copy(x.begin(), x.begin() + n, out.x.begin());
  std::copy(x.begin() + n, x.end(), out.y.begin());
  return out;
}

} // namespace internal
} // namespace chns
