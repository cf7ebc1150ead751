#pragma once

#include <array>
#include <string>

#include "tdhf/grid.hpp"

namespace tdhf {

enum class Spin { Up, Down };

/// One orbital in carrier/envelope form:
///   psi(r, t) = envelope(r) * exp(i carrier_k . r - i carrier_omega t).
/// The grid only has to resolve the envelope; the carrier is analytic.
struct Wavepacket {
  ComplexField envelope;
  Vec2 carrier_k;
  double carrier_omega = 0.0;
  Spin spin = Spin::Up;
  std::string label;

  const GridSpec& grid() const { return envelope.grid; }
};

/// Free-particle dispersion hbar k^2 / 2m in atomic units.
double carrier_frequency(Vec2 k);

/// Anisotropic Gaussian whose intensity |psi|^2 has the given FWHMs along
/// `direction` and perpendicular to it. Normalized on the grid.
/// Throws ConfigError if a width is resolved by fewer than four points or the
/// 5-sigma ellipse leaves the domain.
Wavepacket make_gaussian_wavepacket(const GridSpec& grid, Vec2 center, double fwhm_long, double fwhm_trans,
                                    double kinetic_energy, Vec2 direction, Spin spin,
                                    std::string label = {});

/// <a|b> including the carrier mismatch exp(i (k_b - k_a) . r).
cplx inner_product(const Wavepacket& a, const Wavepacket& b);
double norm_squared(const Wavepacket& w);

/// |2'> = (|2> - <1|2>|1>) / sqrt(1 - |<1|2>|^2); orbital 1 is left as is.
/// Throws std::invalid_argument when |<1|2>| > 1 - 1e-9.
std::array<Wavepacket, 2> gram_schmidt(const std::array<Wavepacket, 2>& pair);

/// Full-wavefunction momentum amplitude psi(k) on the FFT lattice shifted by
/// `offset`: bin (i, j) holds k = (offset.x + kx(i), offset.y + ky(j)).
/// Normalized so that sum |amp|^2 dkx dky == sum |psi|^2 dx dy.
struct MomentumField {
  ComplexField amplitude;
  Vec2 offset;

  double kx(int i) const { return offset.x + amplitude.grid.kx(i); }
  double ky(int j) const { return offset.y + amplitude.grid.ky(j); }
  double cell_area() const { return amplitude.grid.dkx() * amplitude.grid.dky(); }
};

MomentumField to_momentum_space(const Wavepacket& w);

/// Same as to_momentum_space for envelope * exp(i extra_k . r), with the result
/// labelled relative to carrier_k + extra_k. Used to put two orbitals on a
/// common momentum reference.
MomentumField to_momentum_space(const ComplexField& envelope, Vec2 carrier_k);

/// Momentum amplitude with the envelope zero-padded by integer factors,
/// giving a finer k lattice (dkx / pad_x, dky / pad_y).
MomentumField to_momentum_space_padded(const Wavepacket& w, int pad_x, int pad_y);

}  // namespace tdhf
