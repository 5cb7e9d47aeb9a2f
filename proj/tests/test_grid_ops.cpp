// Difference-operator invariants: gradient/divergence duality, conservation,
// symmetry, summation-by-parts pairing, projection properties, CG behavior.

#include <cmath>
#include <vector>

#include "chns/grid.hpp"
#include "chns/ops.hpp"
#include "chns/parallel.hpp"
#include "chns/rng.hpp"
#include "harness.hpp"

using namespace chns;
using harness::qoi;
using harness::record;

namespace {

void test_grid_basics() {
  Grid2D g = make_grid(12, 10, 1.3, 0.9);
  record("grid node placement", std::fabs(g.x(0) - 0.5 * g.hx()) < 1e-15 &&
                                    std::fabs(g.y(9) - (0.9 - 0.5 * g.hy())) < 1e-15);
  record("grid index layout x-fastest", g.idx(3, 2) == 2u * 12u + 3u);

  bool threw = false;
  try {
    make_grid(4, 12, 1.0, 1.0);
  } catch (const ValidationError&) {
    threw = true;
  }
  record("grid rejects nx < 8", threw);

  threw = false;
  try {
    make_grid(12, 12, -1.0, 1.0);
  } catch (const ValidationError&) {
    threw = true;
  }
  record("grid rejects negative extent", threw);
}

void test_gradient_exact_on_linear() {
  Grid2D g = make_grid(16, 12, 1.0, 0.75);
  ScalarField f(g, ScalarBc::None);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) f.at(i, j) = 2.0 * g.x(i) - 3.0 * g.y(j) + 0.25;
  VectorField gr = gradient(f);
  double ex = 0.0, ey = 0.0;
  for (std::size_t k = 0; k < g.count(); ++k) {
    ex = std::max(ex, std::fabs(gr.x[k] - 2.0));
    ey = std::max(ey, std::fabs(gr.y[k] + 3.0));
  }
  record("one-sided gradient exact on linear field", ex < 1e-12 && ey < 1e-12,
         qoi(std::max(ex, ey), 1e-12));
}

double gradient_error(int n) {
  Grid2D g = make_grid(n, n, 1.0, 1.0);
  ScalarField f(g, ScalarBc::None);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i)
      f.at(i, j) = std::sin(2.0 * M_PI * g.x(i)) * std::cos(2.0 * M_PI * g.y(j));
  VectorField gr = gradient(f);
  double err = 0.0;
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      const double c = 2.0 * M_PI;
      const double gx = c * std::cos(c * g.x(i)) * std::cos(c * g.y(j));
      const double gy = -c * std::sin(c * g.x(i)) * std::sin(c * g.y(j));
      err = std::max(err, std::fabs(gr.x[g.idx(i, j)] - gx));
      err = std::max(err, std::fabs(gr.y[g.idx(i, j)] - gy));
    }
  return err;
}

void test_gradient_order() {
  const double e32 = gradient_error(32), e64 = gradient_error(64);
  const double order = std::log2(e32 / e64);
  record("gradient second order in max norm", order > 1.9, qoi(order, 1.9));
}

void test_duality() {
  Grid2D g = make_grid(24, 20, 1.1, 0.7);
  Rng rng(7);
  ScalarField f(g, ScalarBc::NeumannZero);
  VectorField v(g, VectorBc::NoSlip);
  random_fill(rng, f, -1.0, 1.0);
  random_fill(rng, v, -1.0, 1.0);

  const double lhs = inner(gradient(f), v);
  const double rhs = -inner(f, divergence(v));
  const double rel = std::fabs(lhs - rhs) / std::max(std::fabs(lhs), 1e-30);
  record("gradient/divergence duality (reflect vs negate closures)", rel < 1e-12,
         qoi(rel, 1e-12));
}

void test_advection_conservation() {
  Grid2D g = make_grid(20, 24, 1.0, 1.4);
  Rng rng(11);
  VectorField u(g, VectorBc::NoSlip);
  ScalarField f(g, ScalarBc::NeumannZero);
  random_fill(rng, u, -2.0, 2.0);
  random_fill(rng, f, -1.0, 1.0);
  const double total = integral(advect_div(u, f));
  record("flux-form advection sums to zero", std::fabs(total) < 1e-12, qoi(std::fabs(total), 1e-12));
}

void test_laplacian_symmetry_and_sbp() {
  Grid2D g = make_grid(18, 14, 0.9, 1.2);
  Rng rng(3);

  for (ScalarBc bc : {ScalarBc::NeumannZero, ScalarBc::DirichletZero}) {
    ScalarField a(g, bc), b(g, bc);
    random_fill(rng, a, -1.0, 1.0);
    random_fill(rng, b, -1.0, 1.0);
    const double lhs = inner(laplacian(a), b);
    const double rhs = inner(a, laplacian(b));
    const double rel = std::fabs(lhs - rhs) / std::max(std::fabs(lhs), 1e-30);
    const char* tag = bc == ScalarBc::NeumannZero ? "neumann" : "dirichlet";
    record(std::string("laplacian symmetric (") + tag + ")", rel < 1e-12, qoi(rel, 1e-12));

    const double quad = inner(laplacian(a), a);
    const double sbp = -grad_sq_face(a);
    const double rel2 = std::fabs(quad - sbp) / std::max(std::fabs(quad), 1e-30);
    record(std::string("laplacian/face-gradient pairing (") + tag + ")", rel2 < 1e-12,
           qoi(rel2, 1e-12));
  }

  ScalarField c(g, ScalarBc::NeumannZero);
  fill(c, 0.7);
  record("neumann laplacian annihilates constants", max_abs(laplacian(c)) < 1e-13);

  ScalarField r(g, ScalarBc::NeumannZero);
  random_fill(rng, r, -1.0, 1.0);
  record("neumann laplacian conserves mass", std::fabs(integral(laplacian(r))) < 1e-12);
}

void test_convect_transpose_pairing() {
  Grid2D g = make_grid(16, 16, 1.0, 1.0);
  Rng rng(5);
  VectorField u(g, VectorBc::NoSlip), p(g, VectorBc::NoSlip), v(g, VectorBc::NoSlip);
  random_fill(rng, u, -1.0, 1.0);
  random_fill(rng, p, -1.0, 1.0);
  random_fill(rng, v, -1.0, 1.0);
  // ((grad u)^T p, v) = (p, (v.grad) u): both sides read the same derivatives of u
  const double lhs = inner(convect_transpose(u, p), v);
  const double rhs = inner(p, convect(v, u));
  const double rel = std::fabs(lhs - rhs) / std::max(std::fabs(lhs), 1e-30);
  record("convective transpose pairing", rel < 1e-12, qoi(rel, 1e-12));
}

void test_cg() {
  Grid2D g = make_grid(16, 12, 1.0, 1.0);
  Rng rng(13);
  ScalarField b(g, ScalarBc::NeumannZero);
  random_fill(rng, b, -1.0, 1.0);

  // (I - Lap) with reflect closure is SPD
  ApplyFn apply = [&](const std::vector<double>& in, std::vector<double>& out) {
    laplacian_raw(g, in.data(), out.data(), ScalarBc::NeumannZero);
    for (std::size_t k = 0; k < in.size(); ++k) out[k] = in[k] - out[k];
  };
  std::vector<double> x(g.count(), 0.0);
  LinStats st = cg(apply, b.v, x, 1e-12, 4000, "test helmholtz");

  std::vector<double> ax(g.count());
  apply(x, ax);
  double rnorm = 0.0, bnorm = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    rnorm += (ax[k] - b.v[k]) * (ax[k] - b.v[k]);
    bnorm += b.v[k] * b.v[k];
  }
  const double rel = std::sqrt(rnorm / bnorm);
  record("cg solves SPD helmholtz", st.converged && rel < 1e-11, qoi(rel, 1e-11));

  std::vector<double> zero(g.count(), 0.0), xz(g.count(), 1.0);
  LinStats st0 = cg(apply, zero, xz, 1e-12, 100, "zero rhs");
  double mx = 0.0;
  for (double t : xz) mx = std::max(mx, std::fabs(t));
  record("cg returns zero for zero rhs", st0.converged && mx == 0.0);
}

void test_projection() {
  Grid2D g = make_grid(24, 18, 1.0, 1.2);
  Rng rng(17);
  VectorField v(g, VectorBc::NoSlip);
  random_fill(rng, v, -1.0, 1.0);
  const int cap = 10 * g.nx * g.ny;

  VectorField pv = project_divfree(v, 1e-13, cap);
  VectorField ppv = project_divfree(pv, 1e-13, cap);

  VectorField diff = ppv;
  axpy(diff, -1.0, pv);
  const double idem = max_abs(diff) / std::max(max_abs(pv), 1e-30);
  record("projection idempotent", idem < 1e-9, qoi(idem, 1e-9));

  record("projection norm non-increasing", norm2(pv) <= norm2(v) * (1.0 + 1e-14));

  const double div_after = max_abs(divergence(pv));
  record("projected field discretely divergence-free", div_after < 1e-9,
         qoi(div_after, 1e-9));

  ScalarField p(g, ScalarBc::NeumannZero);
  random_fill(rng, p, -1.0, 1.0);
  VectorField gp = gradient(p);
  gp.bc = VectorBc::NoSlip;  // gradient parts are what the projection removes
  VectorField pgp = project_divfree(gp, 1e-13, cap);
  const double rel = max_abs(pgp) / std::max(max_abs(gp), 1e-30);
  record("projection annihilates gradient fields", rel < 1e-8, qoi(rel, 1e-8));
}

void test_reduction_determinism() {
  Grid2D g = make_grid(40, 40, 1.0, 1.0);
  Rng rng(23);
  ScalarField f(g, ScalarBc::NeumannZero);
  random_fill(rng, f, -1.0, 1.0);

  par::set_mode(par::Mode::Serial);
  const double serial = inner(f, f);
  par::set_mode(par::Mode::OpenMP);
  const double parallel = inner(f, f);
  par::set_mode(par::Mode::OpenMP);
  record("reduction bitwise identical across modes", serial == parallel);
}

} // namespace

int main() {
  test_grid_basics();
  test_gradient_exact_on_linear();
  test_gradient_order();
  test_duality();
  test_advection_conservation();
  test_laplacian_symmetry_and_sbp();
  test_convect_transpose_pairing();
  test_cg();
  test_projection();
  test_reduction_determinism();
  return harness::finish("grid and operator invariants");
}
