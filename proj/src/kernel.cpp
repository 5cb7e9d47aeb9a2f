#include "chns/kernel.hpp"

#include <fftw3.h>

#include <cmath>
#include <complex>
#include <cstring>
#include <mutex>

#include "chns/parallel.hpp"

namespace chns {

namespace detail {

namespace {

// smallest 5-smooth integer >= n, keeps the FFT sizes fast for any grid
int smooth_size(int n) {
  for (int p = n;; ++p) {
    int m = p;
    while (m % 2 == 0) m /= 2;
    while (m % 3 == 0) m /= 3;
    while (m % 5 == 0) m /= 5;
    if (m == 1) return p;
  }
}

std::mutex& plan_mutex() {
  static std::mutex m;
  return m;
}

} // namespace

struct FftPack {
  int nx = 0, ny = 0;      // grid sizes
  int px = 0, py = 0;      // padded transform sizes
  std::size_t nreal = 0, ncplx = 0;
  double* rbuf = nullptr;
  fftw_complex* cbuf = nullptr;
  fftw_complex* cacc = nullptr;
  fftw_plan fwd = nullptr;
  fftw_plan inv = nullptr;
  // kernel spectra, scaled by the transform normalization 1/(px*py)
  std::vector<std::complex<double>> specJ, specDJx, specDJy;
  mutable std::mutex exec_mutex;

  FftPack(int nx_, int ny_) : nx(nx_), ny(ny_) {
    px = smooth_size(2 * nx - 1);
    py = smooth_size(2 * ny - 1);
    nreal = static_cast<std::size_t>(px) * py;
    ncplx = static_cast<std::size_t>(px / 2 + 1) * py;
    std::lock_guard<std::mutex> lock(plan_mutex());
    rbuf = fftw_alloc_real(nreal);
    cbuf = fftw_alloc_complex(ncplx);
    cacc = fftw_alloc_complex(ncplx);
    fwd = fftw_plan_dft_r2c_2d(py, px, rbuf, cbuf, FFTW_ESTIMATE);
    inv = fftw_plan_dft_c2r_2d(py, px, cbuf, rbuf, FFTW_ESTIMATE);
  }

  ~FftPack() {
    std::lock_guard<std::mutex> lock(plan_mutex());
    fftw_destroy_plan(fwd);
    fftw_destroy_plan(inv);
    fftw_free(rbuf);
    fftw_free(cbuf);
    fftw_free(cacc);
  }

  FftPack(const FftPack&) = delete;
  FftPack& operator=(const FftPack&) = delete;

  // spectrum of a table indexed by offsets (oi, oj) in [-(nx-1), nx-1] etc.
  std::vector<std::complex<double>> table_spectrum(const std::vector<double>& table) const {
    std::memset(rbuf, 0, nreal * sizeof(double));
    const int tw = 2 * nx - 1;
    for (int oj = -(ny - 1); oj <= ny - 1; ++oj) {
      const int pj = (oj + py) % py;
      for (int oi = -(nx - 1); oi <= nx - 1; ++oi) {
        const int pi = (oi + px) % px;
        rbuf[static_cast<std::size_t>(pj) * px + pi] =
            table[static_cast<std::size_t>(oj + ny - 1) * tw + (oi + nx - 1)];
      }
    }
    fftw_execute(fwd);
    std::vector<std::complex<double>> spec(ncplx);
    const double norm = 1.0 / (static_cast<double>(px) * py);
    for (std::size_t k = 0; k < ncplx; ++k)
      spec[k] = std::complex<double>(cbuf[k][0], cbuf[k][1]) * norm;
    return spec;
  }

  void load_field(const double* f) const {
    std::memset(rbuf, 0, nreal * sizeof(double));
    for (int j = 0; j < ny; ++j)
      std::memcpy(rbuf + static_cast<std::size_t>(j) * px, f + static_cast<std::size_t>(j) * nx,
                  static_cast<std::size_t>(nx) * sizeof(double));
  }

  void store_field(double* out) const {
    for (int j = 0; j < ny; ++j)
      std::memcpy(out + static_cast<std::size_t>(j) * nx, rbuf + static_cast<std::size_t>(j) * px,
                  static_cast<std::size_t>(nx) * sizeof(double));
  }

  void mul_into_cbuf(const std::vector<std::complex<double>>& spec) const {
    for (std::size_t k = 0; k < ncplx; ++k) {
      const std::complex<double> v(cbuf[k][0], cbuf[k][1]);
      const std::complex<double> r = v * spec[k];
      cbuf[k][0] = r.real();
      cbuf[k][1] = r.imag();
    }
  }
};

} // namespace detail

namespace {

// h^2 factor: the convolution is a quadrature over the domain
double quad_weight(const Grid2D& g) { return g.cell(); }

ScalarField fft_convolve_scalar(const Kernel& k, const ScalarField& f,
                                const std::vector<std::complex<double>>& spec) {
  const detail::FftPack& p = *k.fft;
  ScalarField out(f.grid, ScalarBc::None);
  std::lock_guard<std::mutex> lock(p.exec_mutex);
  p.load_field(f.v.data());
  fftw_execute(p.fwd);
  p.mul_into_cbuf(spec);
  fftw_execute(p.inv);
  p.store_field(out.v.data());
  const double w = quad_weight(f.grid);
  for (double& x : out.v) x *= w;
  return out;
}

} // namespace

Kernel make_kernel(const Grid2D& grid, double sigma, double beta) {
  Kernel k;
  k.grid = grid;
  const double hx = grid.hx(), hy = grid.hy();
  k.sigma = sigma > 0.0 ? sigma : 4.0 * std::max(hx, hy);

  const int nx = grid.nx, ny = grid.ny;
  const int tw = 2 * nx - 1, th = 2 * ny - 1;
  k.J.assign(static_cast<std::size_t>(tw) * th, 0.0);
  k.dJx.assign(static_cast<std::size_t>(tw) * th, 0.0);
  k.dJy.assign(static_cast<std::size_t>(tw) * th, 0.0);

  const double is2 = 1.0 / (k.sigma * k.sigma);
  for (int oj = -(ny - 1); oj <= ny - 1; ++oj) {
    for (int oi = -(nx - 1); oi <= nx - 1; ++oi) {
      const double zx = oi * hx, zy = oj * hy;
      const double val = std::exp(-0.5 * (zx * zx + zy * zy) * is2);
      const std::size_t t = static_cast<std::size_t>(oj + ny - 1) * tw + (oi + nx - 1);
      k.J[t] = val;
      k.dJx[t] = -zx * is2 * val;
      k.dJy[t] = -zy * is2 * val;
    }
  }

  auto pack = std::make_shared<detail::FftPack>(nx, ny);
  pack->specJ = pack->table_spectrum(k.J);
  pack->specDJx = pack->table_spectrum(k.dJx);
  pack->specDJy = pack->table_spectrum(k.dJy);
  k.fft = pack;

  // a = J * 1 at unit amplitude, then fix the amplitude
  ScalarField ones(grid, ScalarBc::None);
  fill(ones, 1.0);
  ScalarField a1 = fft_convolve_scalar(k, ones, pack->specJ);
  double amin1 = a1.v[0];
  for (double v : a1.v) amin1 = std::min(amin1, v);

  double b = beta;
  if (beta < 0.0) {
    const double target = 8.0;
    b = target / amin1;
  }
  k.beta = b;

  for (auto& v : k.J) v *= b;
  for (auto& v : k.dJx) v *= b;
  for (auto& v : k.dJy) v *= b;
  for (auto& s : pack->specJ) s *= b;
  for (auto& s : pack->specDJx) s *= b;
  for (auto& s : pack->specDJy) s *= b;

  k.a = ScalarField(grid, ScalarBc::NeumannZero);
  for (std::size_t i = 0; i < k.a.v.size(); ++i) k.a.v[i] = b * a1.v[i];
  k.a_min = b * amin1;

  VectorField ga = convolve_grad(k, ones);
  ga.bc = VectorBc::None;
  k.grad_a = std::move(ga);
  return k;
}

ScalarField convolve(const Kernel& k, const ScalarField& f) {
  require_same_grid(k.grid, f.grid, "convolve");
  return fft_convolve_scalar(k, f, k.fft->specJ);
}

ScalarField convolve_direct(const Kernel& k, const ScalarField& f) {
  require_same_grid(k.grid, f.grid, "convolve_direct");
  const Grid2D& g = f.grid;
  const int nx = g.nx, ny = g.ny, tw = 2 * nx - 1;
  ScalarField out(g, ScalarBc::None);
  const double* fv = f.v.data();
  const double* J = k.J.data();
  double* o = out.v.data();
  const double w = quad_weight(g);
  par::parallel_for(g.count(), [=](std::size_t idx) {
    const int j = static_cast<int>(idx) / nx;
    const int i = static_cast<int>(idx) % nx;
    double s = 0.0;
    for (int jj = 0; jj < ny; ++jj) {
      const double* Jrow = J + static_cast<std::size_t>(j - jj + ny - 1) * tw + (i + nx - 1);
      const double* frow = fv + static_cast<std::size_t>(jj) * nx;
      for (int ii = 0; ii < nx; ++ii) s += Jrow[-ii] * frow[ii];
    }
    o[idx] = w * s;
  });
  return out;
}

ScalarField convolve_vector_reduce(const Kernel& k, const VectorField& w) {
  require_same_grid(k.grid, w.grid, "convolve_vector_reduce");
  const detail::FftPack& p = *k.fft;
  ScalarField out(w.grid, ScalarBc::None);
  std::lock_guard<std::mutex> lock(p.exec_mutex);
  p.load_field(w.x.data());
  fftw_execute(p.fwd);
  for (std::size_t kk = 0; kk < p.ncplx; ++kk) {
    const std::complex<double> v(p.cbuf[kk][0], p.cbuf[kk][1]);
    const std::complex<double> r = v * p.specDJx[kk];
    p.cacc[kk][0] = r.real();
    p.cacc[kk][1] = r.imag();
  }
  p.load_field(w.y.data());
  fftw_execute(p.fwd);
  for (std::size_t kk = 0; kk < p.ncplx; ++kk) {
    const std::complex<double> v(p.cbuf[kk][0], p.cbuf[kk][1]);
    const std::complex<double> r = v * p.specDJy[kk];
    p.cbuf[kk][0] = p.cacc[kk][0] + r.real();
    p.cbuf[kk][1] = p.cacc[kk][1] + r.imag();
  }
  fftw_execute(p.inv);
  p.store_field(out.v.data());
  const double qw = quad_weight(w.grid);
  for (double& x : out.v) x *= qw;
  return out;
}

ScalarField convolve_vector_reduce_direct(const Kernel& k, const VectorField& w) {
  require_same_grid(k.grid, w.grid, "convolve_vector_reduce_direct");
  const Grid2D& g = w.grid;
  const int nx = g.nx, ny = g.ny, tw = 2 * nx - 1;
  ScalarField out(g, ScalarBc::None);
  const double* wx = w.x.data();
  const double* wy = w.y.data();
  const double* dJx = k.dJx.data();
  const double* dJy = k.dJy.data();
  double* o = out.v.data();
  const double qw = quad_weight(g);
  par::parallel_for(g.count(), [=](std::size_t idx) {
    const int j = static_cast<int>(idx) / nx;
    const int i = static_cast<int>(idx) % nx;
    double s = 0.0;
    for (int jj = 0; jj < ny; ++jj) {
      const std::size_t trow = static_cast<std::size_t>(j - jj + ny - 1) * tw + (i + nx - 1);
      const double* xr = wx + static_cast<std::size_t>(jj) * nx;
      const double* yr = wy + static_cast<std::size_t>(jj) * nx;
      for (int ii = 0; ii < nx; ++ii) s += dJx[trow - ii] * xr[ii] + dJy[trow - ii] * yr[ii];
    }
    o[idx] = qw * s;
  });
  return out;
}

VectorField convolve_grad(const Kernel& k, const ScalarField& f) {
  require_same_grid(k.grid, f.grid, "convolve_grad");
  const detail::FftPack& p = *k.fft;
  VectorField out(f.grid, VectorBc::None);
  std::lock_guard<std::mutex> lock(p.exec_mutex);
  p.load_field(f.v.data());
  fftw_execute(p.fwd);
  for (std::size_t kk = 0; kk < p.ncplx; ++kk) {
    p.cacc[kk][0] = p.cbuf[kk][0];
    p.cacc[kk][1] = p.cbuf[kk][1];
  }
  p.mul_into_cbuf(p.specDJx);
  fftw_execute(p.inv);
  p.store_field(out.x.data());
  for (std::size_t kk = 0; kk < p.ncplx; ++kk) {
    const std::complex<double> v(p.cacc[kk][0], p.cacc[kk][1]);
    const std::complex<double> r = v * p.specDJy[kk];
    p.cbuf[kk][0] = r.real();
    p.cbuf[kk][1] = r.imag();
  }
  fftw_execute(p.inv);
  p.store_field(out.y.data());
  const double qw = quad_weight(f.grid);
  for (double& x : out.x) x *= qw;
  for (double& x : out.y) x *= qw;
  return out;
}

VectorField convolve_grad_direct(const Kernel& k, const ScalarField& f) {
  require_same_grid(k.grid, f.grid, "convolve_grad_direct");
  const Grid2D& g = f.grid;
  const int nx = g.nx, ny = g.ny, tw = 2 * nx - 1;
  VectorField out(g, VectorBc::None);
  const double* fv = f.v.data();
  const double* dJx = k.dJx.data();
  const double* dJy = k.dJy.data();
  double* ox = out.x.data();
  double* oy = out.y.data();
  const double qw = quad_weight(g);
  par::parallel_for(g.count(), [=](std::size_t idx) {
    const int j = static_cast<int>(idx) / nx;
    const int i = static_cast<int>(idx) % nx;
    double sx = 0.0, sy = 0.0;
    for (int jj = 0; jj < ny; ++jj) {
      const std::size_t trow = static_cast<std::size_t>(j - jj + ny - 1) * tw + (i + nx - 1);
      const double* fr = fv + static_cast<std::size_t>(jj) * nx;
      for (int ii = 0; ii < nx; ++ii) {
        sx += dJx[trow - ii] * fr[ii];
        sy += dJy[trow - ii] * fr[ii];
      }
    }
    ox[idx] = qw * sx;
    oy[idx] = qw * sy;
  });
  return out;
}

} // namespace chns
