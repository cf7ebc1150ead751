#pragma once

#include "tdhf/grid.hpp"
#include "tdhf/wavepacket.hpp"

namespace tdhf {

/// Choice for the otherwise undefined k = 0 Fourier coefficient.
enum class ZeroMode {
  /// Cancels the mean potential of the periodic images, so the potential of a
  /// compact charge matches the free-space interaction up to O(L^-3).
  ImageFree,
  /// Interaction integrated over one domain cell.
  DomainIntegral,
};

/// Coulomb interaction between two charges whose out-of-plane coordinate is a
/// normalized Gaussian of the given FWHM, stored in Fourier space:
///   V(k) = (2 pi / k) erfcx(k s / sqrt 2),  s = sqrt 2 * FWHM / 2.3548.
struct ScreenedKernel {
  GridSpec grid;
  double transverse_width = 0.0;
  ZeroMode zero_mode = ZeroMode::ImageFree;
  RealField kernel_k;

  /// Standard deviation of the separation z - z' between the two charges.
  double separation_sigma() const;
};

ScreenedKernel build_kernel(const GridSpec& grid, double transverse_width,
                            ZeroMode zero_mode = ZeroMode::ImageFree);

/// exp(u^2) erfc(u) for u >= 0, accurate for large u.
double erfcx(double u);

/// Fourier transform of the screened interaction at |k| > 0.
double screened_kernel_k(double k, double separation_sigma);

/// Real-space screened interaction W(rho) = <1/sqrt(rho^2 + (z - z')^2)>.
double screened_interaction(double rho, double separation_sigma);

/// Epstein zeta Z(1/2) = sum' 1/|k| over the rectangular lattice with
/// spacings (a, b), continued analytically. Square unit lattice: -3.9002649.
double lattice_zeta_half(double a, double b);

/// kernel * f as a periodic convolution (inverse FFT of V(k) F(k)).
ComplexField convolve(const ScreenedKernel& kernel, const ComplexField& f);
/// In-place variant on a raw buffer of kernel.grid.size() entries.
void convolve_in_place(const ScreenedKernel& kernel, cplx* data);

/// Hartree potential of a non-negative density (Coulomb prefactor 1).
RealField hartree_potential(const ScreenedKernel& kernel, const RealField& density);

/// Exchange potential v^x_nm acting on the envelope of orbital m in the
/// equation for orbital n:
///   -exp(i dk.r) [kernel * (conj(psi_m) psi_n exp(-i dk.r'))],  dk = k_m - k_n.
ComplexField exchange_kernel(const ScreenedKernel& kernel, const Wavepacket& w_m, const Wavepacket& w_n);

}  // namespace tdhf
