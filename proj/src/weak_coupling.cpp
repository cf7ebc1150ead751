#include "tdhf/weak_coupling.hpp"

#include <cmath>

#include "tdhf/errors.hpp"
#include "tdhf/observables.hpp"

namespace tdhf {

namespace {

bool same_spin(const Wavepacket& a, const Wavepacket& b) { return a.spin == b.spin; }

ComplexField conj_field(const ComplexField& f) {
  ComplexField out = f;
  for (auto& v : out.values) v = std::conj(v);
  return out;
}

/// Im[C (W * conj C)]
RealField exchange_imag(const Wavepacket& w1, const Wavepacket& w2, const ScreenedKernel& kernel) {
  const ComplexField c = mutual_correlation(w1, w2, true);
  const ComplexField wc = convolve(kernel, conj_field(c));
  RealField out(c.grid);
  for (std::size_t k = 0; k < out.size(); ++k) out.values[k] = std::imag(c.values[k] * wc.values[k]);
  return out;
}

/// d psi2~/dt for fixed psi1~, without the uniform-field phase.
ComplexField reduced_rhs(const Wavepacket& w1, const ComplexField& u2, const Wavepacket& shape2,
                         const ScreenedKernel& kernel, double scale) {
  const GridSpec& g = u2.grid;
  const RealField vh = hartree_potential(kernel, abs_squared(w1.envelope));
  ComplexField out(g);
  for (std::size_t k = 0; k < out.size(); ++k) out.values[k] = cplx(0.0, -scale) * vh.values[k] * u2.values[k];
  if (!same_spin(w1, shape2)) return out;
  // -exp(i dk.r) [W * (conj psi1~ psi2~ exp(-i dk.r'))] psi1~,  dk = k1 - k2.
  Wavepacket w2 = shape2;
  w2.envelope = u2;
  const ComplexField vx = exchange_kernel(kernel, w1, w2);
  for (std::size_t k = 0; k < out.size(); ++k) {
    out.values[k] += cplx(0.0, -scale) * vx.values[k] * w1.envelope.values[k];
  }
  return out;
}

}  // namespace

RealField density_rate(const Wavepacket& w1, const Wavepacket& w2, const ScreenedKernel& kernel, double scale) {
  require_same_grid(w1.grid(), w2.grid(), "density_rate");
  if (!same_spin(w1, w2)) return RealField(w1.grid());
  RealField r = exchange_imag(w1, w2, kernel);
  for (auto& v : r.values) v *= 2.0 * scale;
  return r;
}

ComplexField correlation_rate(const Wavepacket& w1, const Wavepacket& w2, const ScreenedKernel& kernel,
                              double scale) {
  require_same_grid(w1.grid(), w2.grid(), "correlation_rate");
  const ComplexField c = mutual_correlation(w1, w2, true);
  const RealField delta = density_difference(w1, w2);
  const ComplexField wd = convolve(kernel, to_complex(delta));
  ComplexField out(c.grid);
  const ComplexField wc = same_spin(w1, w2) ? convolve(kernel, c) : ComplexField(c.grid);
  for (std::size_t k = 0; k < out.size(); ++k) {
    out.values[k] = cplx(0.0, -scale) * (c.values[k] * wd.values[k].real() - delta.values[k] * wc.values[k]);
  }
  return out;
}

RealField delta_rate(const Wavepacket& w1, const Wavepacket& w2, const ScreenedKernel& kernel, double scale) {
  require_same_grid(w1.grid(), w2.grid(), "delta_rate");
  if (!same_spin(w1, w2)) return RealField(w1.grid());
  RealField r = exchange_imag(w1, w2, kernel);
  for (auto& v : r.values) v *= -4.0 * scale;
  return r;
}

double reduced_stability_bound(const ReducedPairState& state, const ScreenedKernel& kernel, double scale) {
  double s = 0.0;
  for (double v : kernel.kernel_k.values) s += std::abs(v);
  const double w1 = norm_squared(state.psi1);
  // Hartree plus exchange, each bounded by |psi1|^2 sum |V| / area.
  const double wmax = std::abs(scale) * 2.0 * w1 * s / (kernel.grid.lx() * kernel.grid.ly());
  return wmax > 0.0 ? 1.0 / wmax : INFINITY;
}

void volkov_reduced_step(ReducedPairState& state, const LaserPulse& pulse, const ScreenedKernel& kernel, double dt,
                         double scale) {
  require_same_grid(state.psi1.grid(), state.psi2.grid(), "volkov_reduced_step");
  require_same_grid(state.psi1.grid(), kernel.grid, "volkov_reduced_step");
  if (!(dt > 0.0)) throw std::invalid_argument("volkov_reduced_step: dt must be positive");
  const double bound = reduced_stability_bound(state, kernel, scale);
  if (dt > bound) {
    throw ConfigError("volkov_reduced_step: dt = " + std::to_string(dt) + " exceeds the stability bound " +
                      std::to_string(bound));
  }
  // The Volkov phase of psi1 cancels in the exchange term and the Hartree
  // potential only sees |psi1|^2, so the interaction step is autonomous.
  const ComplexField& u = state.psi2.envelope;
  auto axpy = [](const ComplexField& a, double h, const ComplexField& b) {
    ComplexField r = a;
    for (std::size_t k = 0; k < r.size(); ++k) r.values[k] += h * b.values[k];
    return r;
  };
  const ComplexField k1 = reduced_rhs(state.psi1, u, state.psi2, kernel, scale);
  const ComplexField k2 = reduced_rhs(state.psi1, axpy(u, 0.5 * dt, k1), state.psi2, kernel, scale);
  const ComplexField k3 = reduced_rhs(state.psi1, axpy(u, 0.5 * dt, k2), state.psi2, kernel, scale);
  const ComplexField k4 = reduced_rhs(state.psi1, axpy(u, dt, k3), state.psi2, kernel, scale);
  ComplexField next = u;
  for (std::size_t k = 0; k < next.size(); ++k) {
    next.values[k] += dt / 6.0 * (k1.values[k] + 2.0 * k2.values[k] + 2.0 * k3.values[k] + k4.values[k]);
  }
  require_finite(next, "volkov_reduced_step");

  const Vec2 ia = incident_vector_potential_integral(pulse, state.time, state.time + dt);
  const cplx p1 = std::polar(1.0, -dot(state.psi1.carrier_k, ia));
  const cplx p2 = std::polar(1.0, -dot(state.psi2.carrier_k, ia));
  for (auto& v : state.psi1.envelope.values) v *= p1;
  for (std::size_t k = 0; k < next.size(); ++k) next.values[k] *= p2;
  state.psi2.envelope = std::move(next);
  state.time += dt;
}

}  // namespace tdhf
