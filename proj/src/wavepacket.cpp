#include "tdhf/wavepacket.hpp"

#include <cmath>
#include <numbers>

#include "tdhf/fft.hpp"

namespace tdhf {

namespace {

constexpr double kFwhmPerSigma = 2.3548200450309493;  // 2 sqrt(2 ln 2)

// exp(i k . r) at grid point (i, j), r absolute.
cplx plane_wave(const GridSpec& g, Vec2 k, int i, int j) {
  const double ph = k.x * g.x(i) + k.y * g.y(j);
  return {std::cos(ph), std::sin(ph)};
}

MomentumField transform_envelope(const ComplexField& env, Vec2 carrier_k) {
  const GridSpec& g = env.grid;
  MomentumField out{env, carrier_k};
  fft_forward(out.amplitude);
  const double scale = g.cell_area() / (2.0 * std::numbers::pi);
  for (int j = 0; j < g.ny; ++j) {
    for (int i = 0; i < g.nx; ++i) {
      // The FFT measures positions from the first grid point; restore absolute r.
      const double ph = -(g.kx(i) * g.x0 + g.ky(j) * g.y0);
      out.amplitude(i, j) *= scale * cplx(std::cos(ph), std::sin(ph));
    }
  }
  return out;
}

}  // namespace

double carrier_frequency(Vec2 k) { return 0.5 * dot(k, k); }

Wavepacket make_gaussian_wavepacket(const GridSpec& grid, Vec2 center, double fwhm_long, double fwhm_trans,
                                    double kinetic_energy, Vec2 direction, Spin spin, std::string label) {
  grid.validate();
  if (!(kinetic_energy > 0.0)) throw ConfigError("wavepacket: kinetic energy must be positive");
  const double dn = norm(direction);
  if (!(dn > 0.0)) throw ConfigError("wavepacket: direction must be nonzero");
  const Vec2 u = (1.0 / dn) * direction;
  const Vec2 t{-u.y, u.x};

  // Grid step seen along each packet axis.
  const double h_long = std::hypot(u.x * grid.dx, u.y * grid.dy);
  const double h_trans = std::hypot(t.x * grid.dx, t.y * grid.dy);
  if (!(fwhm_long >= 4.0 * h_long) || !(fwhm_trans >= 4.0 * h_trans)) {
    throw ConfigError("wavepacket '" + label + "': width resolved by fewer than 4 grid points");
  }

  const double sl = fwhm_long / kFwhmPerSigma;
  const double st = fwhm_trans / kFwhmPerSigma;
  const double ext_x = 5.0 * std::hypot(sl * u.x, st * t.x);
  const double ext_y = 5.0 * std::hypot(sl * u.y, st * t.y);
  const double xmax = grid.x(grid.nx - 1);
  const double ymax = grid.y(grid.ny - 1);
  if (center.x - ext_x < grid.x0 || center.x + ext_x > xmax || center.y - ext_y < grid.y0 ||
      center.y + ext_y > ymax) {
    throw ConfigError("wavepacket '" + label + "': 5-sigma support clipped by the domain boundary");
  }

  Wavepacket w;
  w.envelope = ComplexField(grid);
  w.carrier_k = std::sqrt(2.0 * kinetic_energy) * u;
  w.carrier_omega = carrier_frequency(w.carrier_k);
  w.spin = spin;
  w.label = std::move(label);

  // Amplitude sigma is sqrt(2) times the intensity sigma.
  double sum = 0.0;
  for (int j = 0; j < grid.ny; ++j) {
    for (int i = 0; i < grid.nx; ++i) {
      const Vec2 r = Vec2{grid.x(i), grid.y(j)} - center;
      const double a = dot(r, u) / sl;
      const double b = dot(r, t) / st;
      const double v = std::exp(-0.25 * (a * a + b * b));
      w.envelope(i, j) = v;
      sum += v * v;
    }
  }
  const double scale = 1.0 / std::sqrt(sum * grid.cell_area());
  for (auto& v : w.envelope.values) v *= scale;
  return w;
}

cplx inner_product(const Wavepacket& a, const Wavepacket& b) {
  require_same_grid(a.grid(), b.grid(), "inner_product");
  const GridSpec& g = a.grid();
  const Vec2 dk = b.carrier_k - a.carrier_k;
  cplx s = 0.0;
  if (dk == Vec2{}) {
    for (std::size_t k = 0; k < g.size(); ++k) s += std::conj(a.envelope.values[k]) * b.envelope.values[k];
  } else {
    for (int j = 0; j < g.ny; ++j) {
      for (int i = 0; i < g.nx; ++i) {
        s += std::conj(a.envelope(i, j)) * b.envelope(i, j) * plane_wave(g, dk, i, j);
      }
    }
  }
  s *= g.cell_area();
  if (&a == &b) s.imag(0.0);
  return s;
}

double norm_squared(const Wavepacket& w) {
  double s = 0.0;
  for (const cplx& v : w.envelope.values) s += std::norm(v);
  return s * w.grid().cell_area();
}

std::array<Wavepacket, 2> gram_schmidt(const std::array<Wavepacket, 2>& pair) {
  const Wavepacket& w1 = pair[0];
  const Wavepacket& w2 = pair[1];
  require_same_grid(w1.grid(), w2.grid(), "gram_schmidt");
  const double n1 = norm_squared(w1);
  const double n2 = norm_squared(w2);
  if (!(n1 > 0.0) || !(n2 > 0.0)) throw std::invalid_argument("gram_schmidt: zero-norm orbital");
  const cplx s = inner_product(w1, w2);
  if (std::abs(s) / std::sqrt(n1 * n2) > 1.0 - 1e-9) {
    throw std::invalid_argument("gram_schmidt: orbitals are (nearly) parallel");
  }

  std::array<Wavepacket, 2> out = pair;
  if (s == 0.0) return out;
  const GridSpec& g = w1.grid();
  const cplx c = s / n1;
  const Vec2 dk = w1.carrier_k - w2.carrier_k;
  ComplexField& e2 = out[1].envelope;
  for (int j = 0; j < g.ny; ++j) {
    for (int i = 0; i < g.nx; ++i) {
      e2(i, j) -= c * w1.envelope(i, j) * plane_wave(g, dk, i, j);
    }
  }
  const double scale = 1.0 / std::sqrt(norm_squared(out[1]));
  for (auto& v : e2.values) v *= scale;
  return out;
}

MomentumField to_momentum_space(const Wavepacket& w) { return transform_envelope(w.envelope, w.carrier_k); }

MomentumField to_momentum_space(const ComplexField& envelope, Vec2 carrier_k) {
  return transform_envelope(envelope, carrier_k);
}

MomentumField to_momentum_space_padded(const Wavepacket& w, int pad_x, int pad_y) {
  if (pad_x < 1 || pad_y < 1) throw std::invalid_argument("momentum padding must be >= 1");
  const GridSpec& g = w.grid();
  GridSpec pg = g;
  pg.nx = g.nx * pad_x;
  pg.ny = g.ny * pad_y;
  ComplexField padded(pg);
  for (int j = 0; j < g.ny; ++j) {
    for (int i = 0; i < g.nx; ++i) padded(i, j) = w.envelope(i, j);
  }
  return transform_envelope(padded, w.carrier_k);
}

}  // namespace tdhf
