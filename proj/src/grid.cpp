#include "chns/grid.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "chns/parallel.hpp"

namespace chns {

Grid2D make_grid(int nx, int ny, double lx, double ly) {
  if (nx < 8 || ny < 8)
    throw ValidationError("grid: nx and ny must be at least 8 (got " + std::to_string(nx) +
                          " x " + std::to_string(ny) + ")");
  if (!(lx > 0.0) || !(ly > 0.0))
    throw ValidationError("grid: lx and ly must be positive");
  return Grid2D{nx, ny, lx, ly};
}

void require_same_grid(const Grid2D& a, const Grid2D& b, const char* where) {
  if (!a.same_as(b))
    throw ValidationError(std::string(where) + ": fields live on different grids");
}

double inner(const ScalarField& f, const ScalarField& g) {
  require_same_grid(f.grid, g.grid, "inner");
  const double* a = f.v.data();
  const double* b = g.v.data();
  const double w = f.grid.cell();
  return w * par::reduce_sum(f.grid.count(), [=](std::size_t i) { return a[i] * b[i]; });
}

double inner(const VectorField& v, const VectorField& w) {
  require_same_grid(v.grid, w.grid, "inner");
  const double* ax = v.x.data();
  const double* ay = v.y.data();
  const double* bx = w.x.data();
  const double* by = w.y.data();
  const double c = v.grid.cell();
  return c * par::reduce_sum(v.grid.count(),
                             [=](std::size_t i) { return ax[i] * bx[i] + ay[i] * by[i]; });
}

double norm2(const ScalarField& f) { return std::sqrt(inner(f, f)); }
double norm2(const VectorField& v) { return std::sqrt(inner(v, v)); }

double max_abs(const ScalarField& f) {
  // max is order-independent, a plain serial scan keeps it simple and exact
  double m = 0.0;
  for (double x : f.v) m = std::max(m, std::fabs(x));
  return m;
}

double max_abs(const VectorField& v) {
  double m = 0.0;
  for (std::size_t i = 0; i < v.x.size(); ++i)
    m = std::max(m, std::max(std::fabs(v.x[i]), std::fabs(v.y[i])));
  return m;
}

double integral(const ScalarField& f) {
  const double* a = f.v.data();
  return f.grid.cell() * par::reduce_sum(f.grid.count(), [=](std::size_t i) { return a[i]; });
}

double mean(const ScalarField& f) { return integral(f) / (f.grid.lx * f.grid.ly); }

void fill(ScalarField& f, double value) { std::fill(f.v.begin(), f.v.end(), value); }

void axpy(ScalarField& y, double a, const ScalarField& x) {
  require_same_grid(y.grid, x.grid, "axpy");
  double* py = y.v.data();
  const double* px = x.v.data();
  par::parallel_for(y.grid.count(), [=](std::size_t i) { py[i] += a * px[i]; });
}

void axpy(VectorField& y, double a, const VectorField& x) {
  require_same_grid(y.grid, x.grid, "axpy");
  double* pyx = y.x.data();
  double* pyy = y.y.data();
  const double* pxx = x.x.data();
  const double* pxy = x.y.data();
  par::parallel_for(y.grid.count(), [=](std::size_t i) {
    pyx[i] += a * pxx[i];
    pyy[i] += a * pxy[i];
  });
}

void scale(ScalarField& f, double a) {
  double* p = f.v.data();
  par::parallel_for(f.grid.count(), [=](std::size_t i) { p[i] *= a; });
}

void scale(VectorField& v, double a) {
  double* px = v.x.data();
  double* py = v.y.data();
  par::parallel_for(v.grid.count(), [=](std::size_t i) {
    px[i] *= a;
    py[i] *= a;
  });
}

} // namespace chns
