#pragma once

#include "tdhf/coulomb.hpp"
#include "tdhf/em_sources.hpp"
#include "tdhf/wavepacket.hpp"

namespace tdhf {

/// Rate equations of the potential-only two-electron problem, written
/// directly in terms of C = conj(psi1) psi2 (full carrier phase) and
/// Delta = |psi1|^2 - |psi2|^2. `scale` multiplies the interaction. Exchange
/// terms vanish for opposite spins.

/// d|psi2|^2/dt = 2 scale Im[C (W * conj C)].
RealField density_rate(const Wavepacket& w1, const Wavepacket& w2, const ScreenedKernel& kernel, double scale = 1.0);

/// dC/dt = -i scale [C (W * Delta) - Delta (W * C)].
ComplexField correlation_rate(const Wavepacket& w1, const Wavepacket& w2, const ScreenedKernel& kernel,
                              double scale = 1.0);

/// dDelta/dt = -4 scale Im[C (W * conj C)], i.e.
/// density_rate(w2, w1) - density_rate(w1, w2).
RealField delta_rate(const Wavepacket& w1, const Wavepacket& w2, const ScreenedKernel& kernel, double scale = 1.0);

/// Second electron driven by the Hartree and exchange fields of a first
/// electron that follows a prescribed Volkov solution in the incident pulse.
struct ReducedPairState {
  Wavepacket psi1;
  Wavepacket psi2;
  double time = 0.0;
};

/// Largest stable RK4 step for the reduced equation.
double reduced_stability_bound(const ReducedPairState& state, const ScreenedKernel& kernel, double scale = 1.0);

/// Advances by dt:
///   i d/dt psi2~ = A.k2 psi2~ + v^H_1 psi2~ + v^x_21 psi1~,
///   psi1~(t) = psi1~(t0) exp(-i k1 . int A).
/// The uniform phases are applied exactly, the interaction by RK4.
/// Throws ConfigError if dt exceeds reduced_stability_bound.
void volkov_reduced_step(ReducedPairState& state, const LaserPulse& pulse, const ScreenedKernel& kernel, double dt,
                         double scale = 1.0);

}  // namespace tdhf
