#pragma once

#include <memory>
#include <vector>

#include "chns/grid.hpp"

// Truncated interaction kernel J on the offset lattice, its analytic gradient,
// and the induced coefficient a = J * 1 (convolution truncated at the domain
// boundary, no wrap). Convolutions come in two routes:
//   * convolve* : zero-padded FFT (FFTW, deterministic ESTIMATE plans)
//   * convolve*_direct : the O(N^2) double sum, the defining formula
// Both are kept; the tests pin them against each other.

namespace chns {

namespace detail {
struct FftPack;
}

struct Kernel {
  Grid2D grid;
  double sigma = 0.0;
  double beta = 0.0;
  // tables on the (2nx-1) x (2ny-1) offset lattice, index
  // (oj + ny - 1) * (2nx - 1) + (oi + nx - 1)
  std::vector<double> J, dJx, dJy;
  ScalarField a;        // a = J * 1, neumann-zero tagged
  VectorField grad_a;   // tabulated (grad J) * 1
  double a_min = 0.0;

  std::shared_ptr<const detail::FftPack> fft;  // shared so Kernel copies are cheap

  double table_at(int oi, int oj) const {
    return J[static_cast<std::size_t>(oj + grid.ny - 1) * (2 * grid.nx - 1) + (oi + grid.nx - 1)];
  }
};

// sigma <= 0 selects the default 4 * max(hx, hy). beta < 0 selects the
// auto-scaling that fixes min_x a(x) = 8 (the implicit part of the phase-field
// split must dominate the explicit kernel terms even in the corner cells,
// where the truncated mass dips to roughly a quarter of its interior value;
// 8 leaves that margin while keeping the convexity estimate well above 1).
// beta >= 0 is taken literally, including beta = 0.
Kernel make_kernel(const Grid2D& grid, double sigma, double beta);

ScalarField convolve(const Kernel& k, const ScalarField& f);
ScalarField convolve_direct(const Kernel& k, const ScalarField& f);

// sum_y grad J(x - y) . w(y) h^2
ScalarField convolve_vector_reduce(const Kernel& k, const VectorField& w);
ScalarField convolve_vector_reduce_direct(const Kernel& k, const VectorField& w);

// ((dJx * f), (dJy * f)) = grad (J * f) computed from the analytic kernel gradient
VectorField convolve_grad(const Kernel& k, const ScalarField& f);
VectorField convolve_grad_direct(const Kernel& k, const ScalarField& f);

} // namespace chns
