#include "tdhf/em_sources.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss.hpp>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>

#include "tdhf/container.hpp"
#include "tdhf/errors.hpp"
#include "tdhf/fft.hpp"

namespace tdhf {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kInf = std::numeric_limits<double>::infinity();

// Scalar profile a(t) with A(t) = a(t) * polarization.
double pulse_profile(const LaserPulse& p, double t) {
  const double s = t - p.t_center;
  const double tau = p.tau();
  if (std::abs(s) > 10.0 * tau) return 0.0;
  const double w = p.omega();
  return -(p.peak_field / w) * std::exp(-0.5 * s * s / (tau * tau)) * std::sin(w * s);
}

double pulse_field_profile(const LaserPulse& p, double t) {
  const double s = t - p.t_center;
  const double tau = p.tau();
  if (std::abs(s) > 10.0 * tau) return 0.0;
  const double w = p.omega();
  return p.peak_field * std::exp(-0.5 * s * s / (tau * tau)) * (std::cos(w * s) - s / (w * tau * tau) * std::sin(w * s));
}

// Integral of the scalar profile over [a, b] using 20-point Gauss-Legendre
// panels anchored at fixed points, so that pieces of adjacent intervals share nodes.
double profile_integral(const LaserPulse& p, double a, double b) {
  using GL = boost::math::quadrature::gauss<double, 20>;
  const double lo = p.t_center - p.half_support();
  const double hi = p.t_center + p.half_support();
  a = std::clamp(a, lo, hi);
  b = std::clamp(b, lo, hi);
  if (b <= a) return 0.0;
  const double h = 2.0 * kPi / p.omega() / 8.0;
  auto f = [&](double t) { return pulse_profile(p, t); };
  const long m0 = static_cast<long>(std::floor((a - lo) / h));
  const long m1 = static_cast<long>(std::floor((b - lo) / h));
  double sum = 0.0;
  for (long m = m0; m <= m1; ++m) {
    const double pa = std::max(a, lo + m * h);
    const double pb = std::min(b, lo + (m + 1) * h);
    if (pb > pa) sum += GL::integrate(f, pa, pb);
  }
  return sum;
}

int next_pow2(long n) {
  int p = 1;
  while (p < n) p <<= 1;
  return p;
}

}  // namespace

void LaserPulse::validate() const {
  if (!(wavelength > 0.0)) throw ConfigError("laser: wavelength must be positive");
  if (!(fwhm_duration > 0.0)) throw ConfigError("laser: FWHM duration must be positive");
  if (!(peak_field >= 0.0)) throw ConfigError("laser: peak field must be non-negative");
  if (std::abs(norm(polarization) - 1.0) > 1e-12) throw ConfigError("laser: polarization must be a unit vector");
}

double LaserPulse::omega() const {
  return 2.0 * kPi * 137.035999084 / wavelength;
}

double LaserPulse::tau() const { return fwhm_duration / (2.0 * std::sqrt(std::log(2.0))); }

Vec2 incident_vector_potential(const LaserPulse& pulse, double t) {
  return pulse_profile(pulse, t) * pulse.polarization;
}

Vec2 incident_electric_field(const LaserPulse& pulse, double t) {
  return pulse_field_profile(pulse, t) * pulse.polarization;
}

Vec2 incident_vector_potential_integral(const LaserPulse& pulse, double t0, double t1) {
  if (t1 <= t0) return {};
  return profile_integral(pulse, t0, t1) * pulse.polarization;
}

double volkov_phase(const LaserPulse& pulse, Vec2 k, double t0, double t1) {
  if (t1 < t0) throw std::invalid_argument("volkov_phase: t1 < t0");
  const double kp = dot(k, pulse.polarization);
  if (kp == 0.0 || t1 == t0) return 0.0;
  return kp * profile_integral(pulse, t0, t1);
}

void DrudeMetal::validate() const {
  if (!(omega_p > 0.0)) throw ConfigError("metal: plasma frequency must be positive");
  if (!(gamma >= 0.0)) throw ConfigError("metal: damping must be non-negative");
  if (!(eps_inf >= 1.0)) throw ConfigError("metal: eps_inf must be >= 1");
}

cplx permittivity(const Dielectric& d, double omega) {
  if (const auto* c = std::get_if<ConstantPermittivity>(&d)) return c->eps;
  const auto& m = std::get<DrudeMetal>(d);
  return m.eps_inf - m.omega_p * m.omega_p / (omega * cplx(omega, m.gamma));
}

cplx cylinder_response(const Dielectric& d, double omega) {
  if (std::holds_alternative<DrudeMetal>(d) && omega == 0.0) return 1.0;
  const cplx eps = permittivity(d, omega);
  return (eps - 1.0) / (eps + 1.0);
}

cplx cylinder_polarizability(const Dielectric& d, double radius, double omega) {
  // 2 pi eps0 = 1/2 in atomic units.
  return 0.5 * radius * radius * cylinder_response(d, omega);
}

void FieldProvider::check_time(double t) const {
  if (!(t >= t_min() && t <= t_max())) {
    throw ConfigError("field provider: time " + std::to_string(t) + " outside validity window");
  }
}

double ZeroFieldProvider::t_min() const { return -kInf; }
double ZeroFieldProvider::t_max() const { return kInf; }

AnalyticPlasmonProvider::AnalyticPlasmonProvider(const GridSpec& grid, const LaserPulse& pulse)
    : grid_(grid), pulse_(pulse) {
  grid_.validate();
  pulse_.validate();
  t_lo_ = pulse_.t_center - pulse_.half_support();
  t_hi_ = pulse_.t_center + pulse_.half_support();
}

AnalyticPlasmonProvider::AnalyticPlasmonProvider(const GridSpec& grid, const LaserPulse& pulse,
                                                 const Dielectric& metal, const NanorodGeometry& rod)
    : AnalyticPlasmonProvider(grid, pulse) {
  if (!(rod.radius > 0.0)) throw ConfigError("rod: radius must be positive");
  if (const auto* m = std::get_if<DrudeMetal>(&metal)) {
    m->validate();
    if (!(m->gamma > 0.0)) throw ConfigError("rod: the analytic near field needs a damping gamma > 0");
  }
  metal_ = metal;
  rod_ = rod;
  gx_ = RealField(grid_);
  gy_ = RealField(grid_);
  for (int j = 0; j < grid_.ny; ++j)
    for (int i = 0; i < grid_.nx; ++i) {
      const Vec2 g = geometry_phi({grid_.x(i), grid_.y(j)});
      gx_(i, j) = g.x;
      gy_(i, j) = g.y;
    }
  synthesize_dipole();
}

Vec2 AnalyticPlasmonProvider::vector_potential_integral(double t0, double t1) const {
  return incident_vector_potential_integral(pulse_, t0, t1);
}

double AnalyticPlasmonProvider::t_min() const { return -kInf; }
double AnalyticPlasmonProvider::t_max() const { return kInf; }

Vec2 AnalyticPlasmonProvider::geometry_phi(Vec2 r) const {
  const Vec2 d = r - rod_->center;
  const double R = rod_->radius;
  const double r2 = dot(d, d);
  if (r2 >= R * R) return (2.0 / r2) * d;
  return (2.0 / (R * R)) * d;
}

void AnalyticPlasmonProvider::synthesize_dipole() {
  const double w = pulse_.omega();
  ts_ = 2.0 * kPi / w / 128.0;
  double pad = 2.0 * pulse_.tau();
  if (const auto* m = std::get_if<DrudeMetal>(&*metal_)) pad += 60.0 / m->gamma;
  const long need = static_cast<long>(std::ceil((t_hi_ - t_lo_ + pad) / ts_)) + 1;
  if (need > (1L << 23)) throw ConfigError("rod: damping too small for the dipole synthesis window");
  const int n = next_pow2(need);

  AlignedVector<cplx> ex(n), ey(n);
  for (int k = 0; k < n; ++k) {
    const Vec2 e = incident_electric_field(pulse_, t_lo_ + k * ts_);
    ex[k] = e.x;
    ey[k] = e.y;
  }
  fft_forward_1d(ex.data(), n);
  fft_forward_1d(ey.data(), n);
  AlignedVector<cplx> px(n), py(n), dpx(n), dpy(n);
  const double dw = 2.0 * kPi / (n * ts_);
  for (int m = 0; m < n; ++m) {
    const double wm = dw * (m < n / 2 ? m : m - n);
    // Bin m carries exp(+i wm t), i.e. frequency -wm in the exp(-i w t) convention.
    const cplx a = wm >= 0.0 ? std::conj(cylinder_polarizability(*metal_, rod_->radius, wm))
                             : cylinder_polarizability(*metal_, rod_->radius, -wm);
    const cplx d = (m == n / 2) ? 0.0 : cplx(0.0, wm);
    px[m] = a * ex[m];
    py[m] = a * ey[m];
    dpx[m] = d * px[m];
    dpy[m] = d * py[m];
  }
  fft_inverse_1d(px.data(), n);
  fft_inverse_1d(py.data(), n);
  fft_inverse_1d(dpx.data(), n);
  fft_inverse_1d(dpy.data(), n);
  p_.resize(n);
  dp_.resize(n);
  for (int k = 0; k < n; ++k) {
    p_[k] = {px[k].real(), py[k].real()};
    dp_[k] = {dpx[k].real(), dpy[k].real()};
  }
  t_hi_ = t_lo_ + (n - 1) * ts_;
}

Vec2 AnalyticPlasmonProvider::dipole(double t) const {
  if (!rod_ || t <= t_lo_ || t >= t_hi_) return {};
  const double u = (t - t_lo_) / ts_;
  const auto k = static_cast<std::size_t>(u);
  const double s = u - static_cast<double>(k);
  // Cubic Hermite on [t_k, t_k+1].
  const double h00 = (1 + 2 * s) * (1 - s) * (1 - s);
  const double h10 = s * (1 - s) * (1 - s);
  const double h01 = s * s * (3 - 2 * s);
  const double h11 = s * s * (s - 1);
  return h00 * p_[k] + (h10 * ts_) * dp_[k] + h01 * p_[k + 1] + (h11 * ts_) * dp_[k + 1];
}

double AnalyticPlasmonProvider::scalar_potential(Vec2 r, double t) const {
  if (!rod_) return 0.0;
  return dot(dipole(t), geometry_phi(r));
}

Vec2 AnalyticPlasmonProvider::near_field(Vec2 r, double t) const {
  if (!rod_) return {};
  const Vec2 p = dipole(t);
  const Vec2 d = r - rod_->center;
  const double R = rod_->radius;
  const double r2 = dot(d, d);
  if (r2 < R * R) return (-2.0 / (R * R)) * p;
  const double rr = std::sqrt(r2);
  const Vec2 u = (1.0 / rr) * d;
  return (2.0 / r2) * (2.0 * dot(p, u) * u - p);
}

FieldSample AnalyticPlasmonProvider::sample(double t) const {
  FieldSample s{t, incident_vector_potential(pulse_, t), std::nullopt};
  if (rod_) {
    const Vec2 p = dipole(t);
    RealField phi(grid_);
    for (std::size_t k = 0; k < phi.size(); ++k) phi.values[k] = p.x * gx_.values[k] + p.y * gy_.values[k];
    s.phi = std::move(phi);
  }
  return s;
}

FieldBounds AnalyticPlasmonProvider::bounds(double t0, double t1) const {
  FieldBounds b;
  // |exp(-s^2 / 2 tau^2) sin(w s)| <= 1.
  b.a_max = pulse_.peak_field / pulse_.omega();
  if (rod_ && !p_.empty()) {
    double pmax = 0.0;
    const long k0 = std::max(0L, static_cast<long>(std::floor((t0 - t_lo_) / ts_)) - 1);
    const long k1 = std::min(static_cast<long>(p_.size()) - 1, static_cast<long>(std::ceil((t1 - t_lo_) / ts_)) + 1);
    for (long k = k0; k <= k1; ++k) pmax = std::max(pmax, norm(p_[k]));
    // Hermite overshoot is tiny; leave a margin.
    b.phi_max = 1.05 * 2.0 * pmax / rod_->radius;
  }
  return b;
}

ComplexField AnalyticPlasmonProvider::electric_field_x_phasor(double omega) const {
  // Continuous-wave equivalent at the pulse peak: E_inc = E0 pol exp(-i w (t - tc)).
  const cplx phase = std::polar(1.0, omega * pulse_.t_center);
  const cplx ex_inc = pulse_.peak_field * pulse_.polarization.x * phase;
  ComplexField out(grid_, ex_inc);
  if (!rod_) return out;
  const cplx a = cylinder_polarizability(*metal_, rod_->radius, omega);
  const cplx px = a * pulse_.peak_field * pulse_.polarization.x * phase;
  const cplx py = a * pulse_.peak_field * pulse_.polarization.y * phase;
  const double R = rod_->radius;
  for (int j = 0; j < grid_.ny; ++j)
    for (int i = 0; i < grid_.nx; ++i) {
      const Vec2 d = Vec2{grid_.x(i), grid_.y(j)} - rod_->center;
      const double r2 = dot(d, d);
      if (r2 < R * R) {
        out(i, j) += -2.0 / (R * R) * px;
      } else {
        out(i, j) += 2.0 * (2.0 * d.x * d.x - r2) / (r2 * r2) * px + 4.0 * d.x * d.y / (r2 * r2) * py;
      }
    }
  return out;
}

FileSeriesProvider::FileSeriesProvider(const GridSpec& grid, std::vector<double> times, std::vector<Vec2> a,
                                       std::vector<RealField> phi)
    : grid_(grid), times_(std::move(times)), a_(std::move(a)), phi_(std::move(phi)) {
  if (times_.empty()) throw ConfigError("field series: no frames");
  if (a_.size() != times_.size()) throw ConfigError("field series: A frame count mismatch");
  if (!phi_.empty() && phi_.size() != times_.size()) throw ConfigError("field series: phi frame count mismatch");
  for (std::size_t k = 1; k < times_.size(); ++k) {
    if (!(times_[k] > times_[k - 1])) throw ConfigError("field series: times must be strictly increasing");
  }
  for (const auto& f : phi_) {
    if (!(f.grid == grid_)) throw ConfigError("field series: frame grid does not match the simulation grid");
  }
}

double FileSeriesProvider::t_min() const { return times_.size() == 1 ? -kInf : times_.front(); }
double FileSeriesProvider::t_max() const { return times_.size() == 1 ? kInf : times_.back(); }

Vec2 FileSeriesProvider::vector_potential(double t) const {
  if (times_.size() == 1) return a_.front();
  check_time(t);
  const auto it = std::upper_bound(times_.begin(), times_.end(), t);
  const std::size_t k1 = std::min<std::size_t>(it - times_.begin(), times_.size() - 1);
  const std::size_t k0 = k1 - 1;
  if (t == times_[k0]) return a_[k0];
  if (t == times_[k1]) return a_[k1];
  const double w = (t - times_[k0]) / (times_[k1] - times_[k0]);
  return (1.0 - w) * a_[k0] + w * a_[k1];
}

Vec2 FileSeriesProvider::vector_potential_integral(double t0, double t1) const {
  if (t1 < t0) throw std::invalid_argument("vector_potential_integral: t1 < t0");
  if (times_.size() == 1) return (t1 - t0) * a_.front();
  check_time(t0);
  check_time(t1);
  // Exact for the piecewise-linear interpolant.
  Vec2 acc;
  for (std::size_t k = 0; k + 1 < times_.size(); ++k) {
    const double lo = std::max(t0, times_[k]), hi = std::min(t1, times_[k + 1]);
    if (hi <= lo) continue;
    const Vec2 a_lo = vector_potential(lo), a_hi = vector_potential(hi);
    acc = acc + (0.5 * (hi - lo)) * (a_lo + a_hi);
  }
  return acc;
}

FieldSample FileSeriesProvider::sample(double t) const {
  FieldSample s{t, vector_potential(t), std::nullopt};
  if (phi_.empty()) return s;
  if (times_.size() == 1) {
    s.phi = phi_.front();
    return s;
  }
  const auto it = std::upper_bound(times_.begin(), times_.end(), t);
  const std::size_t k1 = std::min<std::size_t>(it - times_.begin(), times_.size() - 1);
  const std::size_t k0 = k1 - 1;
  if (t == times_[k0]) {
    s.phi = phi_[k0];
  } else if (t == times_[k1]) {
    s.phi = phi_[k1];
  } else {
    const double w = (t - times_[k0]) / (times_[k1] - times_[k0]);
    RealField f(grid_);
    for (std::size_t k = 0; k < f.size(); ++k) f.values[k] = (1.0 - w) * phi_[k0].values[k] + w * phi_[k1].values[k];
    s.phi = std::move(f);
  }
  return s;
}

FieldBounds FileSeriesProvider::bounds(double t0, double t1) const {
  FieldBounds b;
  for (std::size_t k = 0; k < times_.size(); ++k) {
    const bool inside = times_.size() == 1 || (k + 1 < times_.size() && times_[k + 1] >= t0 && times_[k] <= t1) ||
                        (k > 0 && times_[k - 1] <= t1 && times_[k] >= t0);
    if (!inside) continue;
    b.a_max = std::max(b.a_max, norm(a_[k]));
    if (!phi_.empty()) {
      for (double v : phi_[k].values) b.phi_max = std::max(b.phi_max, std::abs(v));
    }
  }
  return b;
}

ComplexField FileSeriesProvider::electric_field_x_phasor(double omega) const {
  const std::size_t n = times_.size();
  if (n < 2) throw ConfigError("field series: a phasor needs at least two frames");
  const double T = times_.back() - times_.front();
  // Trapezoid weights on the (possibly nonuniform) sample times.
  std::vector<double> w(n, 0.0);
  for (std::size_t k = 0; k + 1 < n; ++k) {
    const double h = times_[k + 1] - times_[k];
    w[k] += 0.5 * h;
    w[k + 1] += 0.5 * h;
  }
  ComplexField phi_hat(grid_);
  cplx dadt_hat = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const cplx e = (2.0 / T) * w[k] * std::polar(1.0, omega * times_[k]);
    const std::size_t kp = std::min(k + 1, n - 1), km = k == 0 ? 0 : k - 1;
    const double dadt = (a_[kp].x - a_[km].x) / (times_[kp] - times_[km]);
    dadt_hat += e * dadt;
    if (!phi_.empty()) {
      for (std::size_t q = 0; q < phi_hat.size(); ++q) phi_hat.values[q] += e * phi_[k].values[q];
    }
  }
  ComplexField out(grid_, -dadt_hat);
  if (!phi_.empty()) {
    const ComplexField grad = spectral_gradient(phi_hat, Axis::X);
    for (std::size_t q = 0; q < out.size(); ++q) out.values[q] -= grad.values[q];
  }
  return out;
}

std::unique_ptr<FileSeriesProvider> load_field_series(const std::filesystem::path& path, const GridSpec& grid) {
  ContainerReader r(path);
  const auto& meta = r.meta();
  if (meta.value("kind", "") != "field_series") throw ConfigError("field series: container kind is not field_series");
  GridSpec fg;
  std::vector<double> times;
  try {
    fg = grid_from_json(meta.at("grid"));
    times = meta.at("frame_times").get<std::vector<double>>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("field series: malformed header: ") + e.what());
  }
  if (!(fg == grid)) throw ConfigError("field series: grid does not match the simulation grid");
  const bool has_phi = meta.value("has_phi", false);
  std::vector<Vec2> a;
  std::vector<RealField> phi;
  char name[32];
  for (std::size_t k = 0; k < times.size(); ++k) {
    std::snprintf(name, sizeof name, "A_x.%04zu", k);
    const RealField ax = r.read_real_field(name, grid);
    std::snprintf(name, sizeof name, "A_y.%04zu", k);
    const RealField ay = r.read_real_field(name, grid);
    const Vec2 a0{ax.values[0], ay.values[0]};
    for (std::size_t q = 0; q < ax.size(); ++q) {
      if (ax.values[q] != a0.x || ay.values[q] != a0.y) {
        throw ConfigError("field series: spatially varying vector potentials are not supported");
      }
    }
    a.push_back(a0);
    if (has_phi) {
      std::snprintf(name, sizeof name, "phi.%04zu", k);
      phi.push_back(r.read_real_field(name, grid));
    }
  }
  return std::make_unique<FileSeriesProvider>(grid, std::move(times), std::move(a), std::move(phi));
}

void write_field_series(const std::filesystem::path& path, const FieldProvider& provider,
                        const std::vector<double>& times) {
  ContainerWriter w(path);
  const GridSpec& g = provider.grid();
  char name[32];
  for (std::size_t k = 0; k < times.size(); ++k) {
    const FieldSample s = provider.sample(times[k]);
    std::snprintf(name, sizeof name, "A_x.%04zu", k);
    w.write_field(name, RealField(g, s.a.x));
    std::snprintf(name, sizeof name, "A_y.%04zu", k);
    w.write_field(name, RealField(g, s.a.y));
    if (provider.has_scalar_potential()) {
      std::snprintf(name, sizeof name, "phi.%04zu", k);
      w.write_field(name, s.phi ? *s.phi : RealField(g));
    }
  }
  w.meta()["kind"] = "field_series";
  w.meta()["grid"] = grid_to_json(g);
  w.meta()["frame_times"] = times;
  w.meta()["has_phi"] = provider.has_scalar_potential();
  w.meta()["units"] = "atomic";
  w.finalize(true);
}

cplx g_factor_from_phasor(const ComplexField& ex, double v, double omega, double trajectory_y) {
  const GridSpec& g = ex.grid;
  if (!(v > 0.0) || !(omega > 0.0)) throw std::invalid_argument("g_factor: v and omega must be positive");
  const double kx = omega / v;
  if (kx >= kPi / g.dx) throw ConfigError("g_factor: k_x = omega / v lies outside the grid's momentum range");
  if (trajectory_y < g.y0 || trajectory_y >= g.y0 + g.ly()) {
    throw ConfigError("g_factor: trajectory outside the domain");
  }
  // Phase-matched projection along x, row by row, evaluated at the exact
  // k_x rather than the nearest grid momentum. The row mean is the k_x = 0
  // component; on an unbounded line it cannot contribute at k_x != 0, so it
  // is removed instead of leaking through the finite box.
  std::vector<cplx> phase(g.nx);
  for (int i = 0; i < g.nx; ++i) phase[i] = std::polar(1.0, -kx * g.x(i));
  AlignedVector<cplx> s(g.ny);
  for (int j = 0; j < g.ny; ++j) {
    cplx mean = 0.0;
    for (int i = 0; i < g.nx; ++i) mean += ex(i, j);
    mean /= static_cast<double>(g.nx);
    cplx acc = 0.0;
    for (int i = 0; i < g.nx; ++i) acc += (ex(i, j) - mean) * phase[i];
    s[j] = acc * g.dx;
  }
  // The integral over k_y with exp(i k_y y_e) is the trigonometric
  // interpolant of the rows at y_e.
  fft_forward_1d(s.data(), g.ny);
  cplx val = 0.0;
  const double y = trajectory_y - g.y0;
  for (int j = 0; j < g.ny; ++j) {
    if (j == g.ny / 2) {
      val += s[j] * std::cos(g.ky(j) * y);
    } else {
      val += s[j] * std::polar(1.0, g.ky(j) * y);
    }
  }
  val /= static_cast<double>(g.ny);
  return val / (2.0 * omega);
}

cplx g_factor(const FieldProvider& provider, double v, double omega, double trajectory_y) {
  return g_factor_from_phasor(provider.electric_field_x_phasor(omega), v, omega, trajectory_y);
}

}  // namespace tdhf
