#pragma once

#include <cstddef>
#include <vector>

#include "chns/errors.hpp"

namespace chns {

// Uniform cell-centered grid on [0,lx] x [0,ly]: node (i,j) sits at
// ((i+1/2)hx, (j+1/2)hy), i fastest in memory (idx = j*nx + i).
struct Grid2D {
  int nx = 0;
  int ny = 0;
  double lx = 0.0;
  double ly = 0.0;

  double hx() const { return lx / nx; }
  double hy() const { return ly / ny; }
  double cell() const { return hx() * hy(); }
  std::size_t count() const { return static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny); }
  std::size_t idx(int i, int j) const { return static_cast<std::size_t>(j) * nx + i; }
  double x(int i) const { return (i + 0.5) * hx(); }
  double y(int j) const { return (j + 0.5) * hy(); }

  bool same_as(const Grid2D& o) const {
    return nx == o.nx && ny == o.ny && lx == o.lx && ly == o.ly;
  }
};

Grid2D make_grid(int nx, int ny, double lx, double ly);

// Boundary tag of a scalar grid function. The tag selects the ghost-value rule
// used by the difference operators:
//   NeumannZero   reflect   (g = f adjacent)   for phi, mu and friends
//   DirichletZero negate    (g = -f adjacent)  for the adjoint eta
//   None          no ghost info; one-sided stencils, Laplacian unavailable
enum class ScalarBc { NeumannZero, DirichletZero, None };

// VectorBc::NoSlip marks both components dirichlet-zero at the walls.
enum class VectorBc { NoSlip, None };

struct ScalarField {
  Grid2D grid;
  ScalarBc bc = ScalarBc::None;
  std::vector<double> v;

  ScalarField() = default;
  ScalarField(const Grid2D& g, ScalarBc b) : grid(g), bc(b), v(g.count(), 0.0) {}
  double& at(int i, int j) { return v[grid.idx(i, j)]; }
  double at(int i, int j) const { return v[grid.idx(i, j)]; }
};

struct VectorField {
  Grid2D grid;
  VectorBc bc = VectorBc::None;
  std::vector<double> x, y;

  VectorField() = default;
  VectorField(const Grid2D& g, VectorBc b)
      : grid(g), bc(b), x(g.count(), 0.0), y(g.count(), 0.0) {}
};

// ---- reductions (deterministic, see parallel.hpp) ----

double inner(const ScalarField& f, const ScalarField& g);   // h^2 sum f g
double inner(const VectorField& v, const VectorField& w);
double norm2(const ScalarField& f);                          // sqrt(inner(f,f))
double norm2(const VectorField& v);
double max_abs(const ScalarField& f);
double max_abs(const VectorField& v);
double integral(const ScalarField& f);                       // h^2 sum f
double mean(const ScalarField& f);

// ---- pointwise helpers ----

void fill(ScalarField& f, double value);
void axpy(ScalarField& y, double a, const ScalarField& x);   // y += a*x
void axpy(VectorField& y, double a, const VectorField& x);
void scale(ScalarField& f, double a);
void scale(VectorField& v, double a);

void require_same_grid(const Grid2D& a, const Grid2D& b, const char* where);

} // namespace chns
