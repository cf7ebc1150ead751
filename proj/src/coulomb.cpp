#include "tdhf/coulomb.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "tdhf/fft.hpp"

namespace tdhf {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kFwhmPerSigma = 2.3548200450309493;

// Limit of V(k) - 2 pi / k for k -> 0.
double screening_offset(double s) { return -2.0 * std::sqrt(2.0 * kPi) * s; }

}  // namespace

double erfcx(double u) {
  if (u < 0.0) throw std::invalid_argument("erfcx: negative argument");
  if (u < 25.0) return std::exp(u * u) * std::erfc(u);
  // Asymptotic series; the first omitted term is below 1e-12 relative here.
  const double w = 1.0 / (2.0 * u * u);
  const double series = 1.0 - w + 3.0 * w * w - 15.0 * w * w * w + 105.0 * w * w * w * w;
  return series / (u * std::sqrt(kPi));
}

double screened_kernel_k(double k, double s) {
  if (!(k > 0.0)) throw std::invalid_argument("screened_kernel_k: k must be positive");
  if (s == 0.0) return 2.0 * kPi / k;
  return 2.0 * kPi / k * erfcx(k * s / std::numbers::sqrt2);
}

double screened_interaction(double rho, double s) {
  if (s == 0.0) return 1.0 / rho;
  const double x = rho * rho / (4.0 * s * s);
  double scaled_k0 = 0.0;  // exp(x) K0(x)
  if (x < 600.0) {
    scaled_k0 = std::exp(x) * std::cyl_bessel_k(0.0, x);
  } else {
    const double y = 1.0 / (8.0 * x);
    scaled_k0 = std::sqrt(kPi / (2.0 * x)) *
                (1.0 - y + 4.5 * y * y - 37.5 * y * y * y + 459.375 * y * y * y * y);
  }
  return scaled_k0 / (s * std::sqrt(2.0 * kPi));
}

double lattice_zeta_half(double a, double b) {
  if (!(a > 0.0) || !(b > 0.0)) throw std::invalid_argument("lattice_zeta_half: spacings must be positive");
  const double v = a * b;
  const double eta = 1.0 / v;
  const double se = std::sqrt(eta);
  constexpr double kCut = 6.5;  // erfc(6.5) ~ 4e-20

  double recip = 0.0;
  const int na = static_cast<int>(std::ceil(kCut / (se * a))) + 1;
  const int nb = static_cast<int>(std::ceil(kCut / (se * b))) + 1;
  for (int m = -nb; m <= nb; ++m) {
    for (int n = -na; n <= na; ++n) {
      if (n == 0 && m == 0) continue;
      const double k = std::hypot(n * a, m * b);
      recip += std::erfc(se * k) / k;
    }
  }

  // Direct lattice of the k lattice: periods 2 pi / a and 2 pi / b.
  const double la = 2.0 * kPi / a;
  const double lb = 2.0 * kPi / b;
  double direct = 0.0;
  const int ma = static_cast<int>(std::ceil(2.0 * kCut * se / la)) + 1;
  const int mb = static_cast<int>(std::ceil(2.0 * kCut * se / lb)) + 1;
  for (int m = -mb; m <= mb; ++m) {
    for (int n = -ma; n <= ma; ++n) {
      if (n == 0 && m == 0) continue;
      const double r = std::hypot(n * la, m * lb);
      direct += std::erfc(r / (2.0 * se)) / r;
    }
  }

  return recip - 2.0 * std::sqrt(kPi) / (v * se) + 2.0 * kPi / v * direct - 2.0 * std::sqrt(eta / kPi);
}

double ScreenedKernel::separation_sigma() const {
  return std::numbers::sqrt2 * transverse_width / kFwhmPerSigma;
}

ScreenedKernel build_kernel(const GridSpec& grid, double transverse_width, ZeroMode zero_mode) {
  grid.validate();
  if (!(transverse_width > 0.0)) throw ConfigError("build_kernel: transverse width must be positive");
  ScreenedKernel kern;
  kern.grid = grid;
  kern.transverse_width = transverse_width;
  kern.zero_mode = zero_mode;
  kern.kernel_k = RealField(grid);
  const double s = kern.separation_sigma();

  for (int j = 0; j < grid.ny; ++j) {
    const double ky = grid.ky(j);
    for (int i = 0; i < grid.nx; ++i) {
      if (i == 0 && j == 0) continue;
      kern.kernel_k(i, j) = screened_kernel_k(std::hypot(grid.kx(i), ky), s);
    }
  }

  double v0 = 0.0;
  if (zero_mode == ZeroMode::ImageFree) {
    v0 = -2.0 * kPi * lattice_zeta_half(grid.dkx(), grid.dky());
  } else {
    // Integral of 1/r over the centred cell [-a, a] x [-b, b].
    const double a = 0.5 * grid.lx();
    const double b = 0.5 * grid.ly();
    v0 = 4.0 * (a * std::asinh(b / a) + b * std::asinh(a / b));
  }
  kern.kernel_k(0, 0) = v0 + screening_offset(s);
  return kern;
}

void convolve_in_place(const ScreenedKernel& kernel, cplx* data) {
  const GridSpec& g = kernel.grid;
  fft_forward(data, g.nx, g.ny);
  const double* v = kernel.kernel_k.data();
  const std::size_t n = g.size();
  for (std::size_t k = 0; k < n; ++k) data[k] *= v[k];
  fft_inverse(data, g.nx, g.ny);
}

ComplexField convolve(const ScreenedKernel& kernel, const ComplexField& f) {
  require_same_grid(kernel.grid, f.grid, "convolve");
  ComplexField out = f;
  convolve_in_place(kernel, out.data());
  return out;
}

RealField hartree_potential(const ScreenedKernel& kernel, const RealField& density) {
  require_same_grid(kernel.grid, density.grid, "hartree_potential");
  for (double d : density.values) {
    if (d < 0.0) throw std::invalid_argument("hartree_potential: negative density");
  }
  ComplexField work = convolve(kernel, to_complex(density));
  double max_re = 0.0;
  double max_im = 0.0;
  for (const cplx& v : work.values) {
    max_re = std::max(max_re, std::abs(v.real()));
    max_im = std::max(max_im, std::abs(v.imag()));
  }
  if (max_im > 1e-12 * std::max(max_re, 1e-300) && max_im > 1e-300) {
    throw NumericalError("hartree_potential: imaginary residue above tolerance");
  }
  return real_part(work);
}

ComplexField exchange_kernel(const ScreenedKernel& kernel, const Wavepacket& w_m, const Wavepacket& w_n) {
  require_same_grid(kernel.grid, w_m.grid(), "exchange_kernel");
  require_same_grid(kernel.grid, w_n.grid(), "exchange_kernel");
  if (w_m.spin != w_n.spin) throw std::invalid_argument("exchange_kernel: orbitals have different spins");
  const GridSpec& g = kernel.grid;
  const Vec2 dk = w_m.carrier_k - w_n.carrier_k;
  const bool shifted = !(dk == Vec2{});
  ComplexField out(g);
  for (int j = 0; j < g.ny; ++j) {
    for (int i = 0; i < g.nx; ++i) {
      cplx p = std::conj(w_m.envelope(i, j)) * w_n.envelope(i, j);
      if (shifted) p *= std::polar(1.0, -(dk.x * g.x(i) + dk.y * g.y(j)));
      out(i, j) = p;
    }
  }
  convolve_in_place(kernel, out.data());
  for (int j = 0; j < g.ny; ++j) {
    for (int i = 0; i < g.nx; ++i) {
      cplx ph = shifted ? std::polar(1.0, dk.x * g.x(i) + dk.y * g.y(j)) : cplx(1.0);
      out(i, j) = -ph * out(i, j);
    }
  }
  return out;
}

}  // namespace tdhf
