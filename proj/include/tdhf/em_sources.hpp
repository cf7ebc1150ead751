#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <variant>
#include <vector>

#include "tdhf/grid.hpp"

namespace tdhf {

/// Gaussian-envelope laser pulse described through its vector potential
///   A(t) = -(E0 / w) exp(-s^2 / 2 tau^2) sin(w s) pol,   s = t - t_center,
/// so that E = -dA/dt peaks at exactly E0 at t_center and A vanishes on both
/// sides. tau follows from the intensity FWHM: fwhm = 2 tau sqrt(ln 2).
/// A is set to zero beyond |s| > 10 tau.
struct LaserPulse {
  double wavelength = 0.0;
  double fwhm_duration = 0.0;
  double peak_field = 0.0;
  Vec2 polarization{1.0, 0.0};
  double t_center = 0.0;

  void validate() const;
  double omega() const;
  double tau() const;
  double half_support() const { return 10.0 * tau(); }
};

Vec2 incident_vector_potential(const LaserPulse& pulse, double t);
Vec2 incident_electric_field(const LaserPulse& pulse, double t);
/// Integral of A over [t0, t1]; zero when t1 <= t0.
Vec2 incident_vector_potential_integral(const LaserPulse& pulse, double t0, double t1);

/// Integral of k . A over [t0, t1] (uniform incident field only). The
/// momentum-space amplitude of a free electron at k picks up exp(-i phase).
double volkov_phase(const LaserPulse& pulse, Vec2 k, double t0, double t1);

/// eps(w) = eps_inf - wp^2 / (w (w + i gamma)), exp(-i w t) convention.
struct DrudeMetal {
  double eps_inf = 9.0;
  double omega_p = 0.0;
  double gamma = 0.0;
  void validate() const;
};

/// Frequency-independent dielectric, used for static checks.
struct ConstantPermittivity {
  cplx eps{1.0, 0.0};
};

using Dielectric = std::variant<DrudeMetal, ConstantPermittivity>;

cplx permittivity(const Dielectric& d, double omega);
/// (eps - 1) / (eps + 1), with the perfect-conductor limit 1 at omega = 0 for Drude.
cplx cylinder_response(const Dielectric& d, double omega);
/// Dipole per unit length induced on a cylinder by a uniform field:
/// alpha = 2 pi eps0 R^2 (eps - 1) / (eps + 1).
cplx cylinder_polarizability(const Dielectric& d, double radius, double omega);

struct NanorodGeometry {
  double radius = 0.0;
  Vec2 center;
};

/// Potentials at one instant. The vector potential is spatially uniform;
/// phi is absent when the provider has no scalar potential.
struct FieldSample {
  double time = 0.0;
  Vec2 a;
  std::optional<RealField> phi;
};

struct FieldBounds {
  double a_max = 0.0;
  double phi_max = 0.0;
};

class FieldProvider {
 public:
  virtual ~FieldProvider() = default;

  virtual const GridSpec& grid() const = 0;
  /// Throws ConfigError outside [t_min, t_max].
  virtual FieldSample sample(double t) const = 0;
  virtual Vec2 vector_potential(double t) const = 0;
  /// Integral of A over [t0, t1], exact for the provider's own time dependence.
  virtual Vec2 vector_potential_integral(double t0, double t1) const = 0;
  virtual bool has_scalar_potential() const = 0;
  virtual double t_min() const = 0;
  virtual double t_max() const = 0;
  /// Upper bounds of |A| and |phi| over [t0, t1], for the step-size bound.
  virtual FieldBounds bounds(double t0, double t1) const = 0;
  /// Complex amplitude of E_x(r, t) at angular frequency w, in the
  /// convention E_x = Re[amplitude * exp(-i w t)]. Sampled series use
  /// (2 / T) * integral of E_x exp(i w t) dt over their window; the analytic
  /// provider returns the continuous wave matching the pulse peak.
  virtual ComplexField electric_field_x_phasor(double omega) const = 0;

 protected:
  void check_time(double t) const;
};

/// Everything zero, valid for all times.
class ZeroFieldProvider final : public FieldProvider {
 public:
  explicit ZeroFieldProvider(const GridSpec& grid) : grid_(grid) {}
  const GridSpec& grid() const override { return grid_; }
  FieldSample sample(double t) const override { return {t, {}, std::nullopt}; }
  Vec2 vector_potential(double) const override { return {}; }
  Vec2 vector_potential_integral(double, double) const override { return {}; }
  bool has_scalar_potential() const override { return false; }
  double t_min() const override;
  double t_max() const override;
  FieldBounds bounds(double, double) const override { return {}; }
  ComplexField electric_field_x_phasor(double) const override { return ComplexField(grid_); }

 private:
  GridSpec grid_;
};

/// Incident laser through A(t), and optionally the quasistatic near field of
/// a cylinder through phi = p(t) . r_hat / (2 pi eps0 r). The dipole p(t) is
/// the response alpha(w) applied to the incident field in the frequency
/// domain. Inside the rod phi continues as the uniform-field solution
/// 2 p . r / R^2, which is continuous at the surface.
class AnalyticPlasmonProvider final : public FieldProvider {
 public:
  /// Laser only.
  AnalyticPlasmonProvider(const GridSpec& grid, const LaserPulse& pulse);
  AnalyticPlasmonProvider(const GridSpec& grid, const LaserPulse& pulse, const Dielectric& metal,
                          const NanorodGeometry& rod);

  const GridSpec& grid() const override { return grid_; }
  FieldSample sample(double t) const override;
  Vec2 vector_potential(double t) const override { return incident_vector_potential(pulse_, t); }
  Vec2 vector_potential_integral(double t0, double t1) const override;
  bool has_scalar_potential() const override { return rod_.has_value(); }
  /// Valid for all times: the incident pulse is zero outside its support
  /// and the dipole is causal and decays.
  double t_min() const override;
  double t_max() const override;
  FieldBounds bounds(double t0, double t1) const override;
  ComplexField electric_field_x_phasor(double omega) const override;

  const LaserPulse& pulse() const { return pulse_; }
  /// Induced line dipole p(t); zero without a rod.
  Vec2 dipole(double t) const;
  /// Scalar potential at an arbitrary point.
  double scalar_potential(Vec2 r, double t) const;
  /// Induced near field (incident field not included) at a point.
  Vec2 near_field(Vec2 r, double t) const;

 private:
  void synthesize_dipole();
  Vec2 geometry_phi(Vec2 r) const;  // phi per unit dipole (x and y components)

  GridSpec grid_;
  LaserPulse pulse_;
  std::optional<Dielectric> metal_;
  std::optional<NanorodGeometry> rod_;
  double t_lo_ = 0.0;
  double t_hi_ = 0.0;
  // Dipole samples on a uniform time grid starting at t_lo_.
  double ts_ = 0.0;
  std::vector<Vec2> p_;
  std::vector<Vec2> dp_;
  RealField gx_;
  RealField gy_;
};

/// Field frames loaded from a run container; linear interpolation in time.
class FileSeriesProvider final : public FieldProvider {
 public:
  FileSeriesProvider(const GridSpec& grid, std::vector<double> times, std::vector<Vec2> a,
                     std::vector<RealField> phi);

  const GridSpec& grid() const override { return grid_; }
  FieldSample sample(double t) const override;
  Vec2 vector_potential(double t) const override;
  Vec2 vector_potential_integral(double t0, double t1) const override;
  bool has_scalar_potential() const override { return !phi_.empty(); }
  /// A single frame is constant in time and valid everywhere.
  double t_min() const override;
  double t_max() const override;
  FieldBounds bounds(double t0, double t1) const override;
  ComplexField electric_field_x_phasor(double omega) const override;

  std::size_t frame_count() const { return times_.size(); }

 private:
  GridSpec grid_;
  std::vector<double> times_;
  std::vector<Vec2> a_;
  std::vector<RealField> phi_;
};

/// Reads a field-series container (datasets A_x.NNNN, A_y.NNNN, phi.NNNN).
/// A_x and A_y must be spatially uniform. Throws ConfigError on a grid
/// mismatch or non-increasing times, IoError on a damaged container.
std::unique_ptr<FileSeriesProvider> load_field_series(const std::filesystem::path& path, const GridSpec& grid);

/// Writes provider samples at the given times in the format load_field_series reads.
void write_field_series(const std::filesystem::path& path, const FieldProvider& provider,
                        const std::vector<double>& times);

/// g = (e / 2 hbar w) * integral dk_y E_x(k_x = w / v, k_y; w) exp(i k_y y_e),
/// i.e. the phase-matched Fourier component of the field along the line
/// y = trajectory_y. Throws ConfigError if w / v lies beyond the grid's
/// momentum range. The k_x = 0 part of each row (its x-average) is
/// dropped before the projection.
cplx g_factor(const FieldProvider& provider, double v, double omega, double trajectory_y);

/// Same evaluation from a precomputed E_x phasor field.
cplx g_factor_from_phasor(const ComplexField& ex_phasor, double v, double omega, double trajectory_y);

}  // namespace tdhf
