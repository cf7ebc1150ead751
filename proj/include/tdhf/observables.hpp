#pragma once

#include <vector>

#include "tdhf/engine.hpp"
#include "tdhf/wavepacket.hpp"

namespace tdhf {

/// C(r) = conj(psi1~) psi2~. With `full_phase` the carrier mismatch
/// exp(i (k2 - k1) . r) is attached, giving conj(psi1) psi2 of the full
/// wavefunctions (time phase dropped).
ComplexField mutual_correlation(const Wavepacket& w1, const Wavepacket& w2, bool full_phase = false);

/// |psi1|^2 - |psi2|^2.
RealField density_difference(const Wavepacket& w1, const Wavepacket& w2);

/// Sum of orbital densities; integrates to the particle number.
RealField one_particle_density(const SystemState& state);

enum class Space { Real, Momentum };

/// Pair probability density of a two-orbital determinant, integrated over
/// both transverse coordinates (y or k_y). Matrices are n x n, row-major,
/// entry [a * n + b] at (coords[a], coords[b]); coords ascend.
///   uncorrelated = rho1(x1) rho1(x2)
///   total        = uncorrelated + exchange
///   exchange     = -P1(x1) P1(x2) - P2(x1) P2(x2) [- 2 Re M(x1) conj M(x2), same spin]
/// with P_n the projected orbital densities and M the projected conj(psi1) psi2.
/// exchange_phase is the last, phase-sensitive term (zero for opposite spins
/// or an unpolarized state). Assumes orthonormal orbitals for the N(N-1)
/// normalization; the decomposition itself holds for any pair.
struct PairDensitySlice {
  Space axis = Space::Real;
  int n = 0;
  std::vector<double> coords;
  std::vector<double> total;
  std::vector<double> uncorrelated;
  std::vector<double> exchange_phase;

  double spacing() const { return coords.size() > 1 ? coords[1] - coords[0] : 0.0; }
  double at(const std::vector<double>& m, int a, int b) const { return m[static_cast<std::size_t>(a) * n + b]; }
};

/// Momentum space uses orbital 0's carrier as the common reference; the
/// other orbital's carrier offset is folded into its envelope first.
PairDensitySlice pair_density_slice(const SystemState& state, Space space);

/// Full-coordinate pair density at grid points (i1, j1) and (i2, j2), same
/// decomposition as the slice.
struct PairDensityPoint {
  double total = 0.0;
  double uncorrelated = 0.0;
  double exchange_phase = 0.0;
};
PairDensityPoint pair_density_at(const SystemState& state, int i1, int j1, int i2, int j2);

/// True if exchange acts between orbitals a and b of this state.
bool exchange_active(const SystemState& state, std::size_t a, std::size_t b);

/// Energy and angle binning for PINEM spectra (atomic units, radians).
/// Angles cover [-acceptance, acceptance] with angle_bins bins.
struct SpectrumBins {
  double e_min = 0.0;
  double e_max = 0.0;
  double de = 0.0;
  int angle_bins = 1;
  double acceptance = 0.0;
  /// Zero-padding factor of the momentum transform along x (finer k lattice).
  int pad = 1;

  void validate() const;
  int energy_bins() const;
};

/// sigma(E, phi) = E |psi(E, phi)|^2 on the bins, with the exact Jacobian
/// dkx dky = dE dphi. Each momentum cell is spread uniformly over the energy
/// interval it covers, so E-weighted probability is conserved exactly.
/// sigma is energy_bins x angle_bins, row-major [e * angle_bins + a].
struct PinemSpectrum {
  SpectrumBins bins;
  std::vector<double> energies;
  std::vector<double> angles;
  std::vector<double> sigma;
  /// Sum over the acceptance window: Sigma(E) = int sigma dphi.
  std::vector<double> Sigma;
  /// Probability that fell outside the window (energy, angle or backward).
  double outside_weight = 0.0;

  double integral() const;
};

PinemSpectrum pinem_spectrum(const Wavepacket& w, const SpectrumBins& bins);
/// Sum of the per-orbital spectra.
PinemSpectrum pinem_total(const SystemState& state, const SpectrumBins& bins);
/// Throws std::invalid_argument if the binnings differ.
PinemSpectrum add_spectra(const PinemSpectrum& a, const PinemSpectrum& b);

/// <|q + k|^2 / 2> evaluated in real space with spectral derivatives.
double kinetic_expectation(const Wavepacket& w);

/// Comb peaks and troughs of a sampled spectrum inside [e_lo, e_hi].
/// Extrema are located on a quadratic Savitzky-Golay smoothing whose window
/// is shorter than half a comb period; their values are read from the raw
/// samples near each location.
struct CombAnalysis {
  std::vector<double> peak_energies;
  std::vector<double> peak_values;
  std::vector<double> trough_energies;
  std::vector<double> trough_values;
  /// (P - T) / (P + T) per peak, T the mean of the neighbouring troughs.
  std::vector<double> peak_visibility;
  /// (max peak - min trough) / (max peak + min trough).
  double visibility = 0.0;
};

CombAnalysis analyze_comb(const std::vector<double>& energies, const std::vector<double>& values, double e_lo,
                          double e_hi, double period);

/// Global visibility of Sigma(E) over the band; 0 for a flat band. Throws
/// ConfigError if the band is shorter than two periods and NumericalError if
/// no peak and trough can be found.
double fringe_visibility(const PinemSpectrum& spectrum, double e_lo, double e_hi, double period);

}  // namespace tdhf
