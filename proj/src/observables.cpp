#include "tdhf/observables.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "tdhf/errors.hpp"

namespace tdhf {

namespace {

cplx expi(double ph) { return {std::cos(ph), std::sin(ph)}; }

void require_pair(const SystemState& state) {
  if (state.orbitals.size() != 2) {
    throw std::invalid_argument("pair density needs exactly two orbitals, got " +
                                std::to_string(state.orbitals.size()));
  }
  require_same_grid(state.orbitals[0].grid(), state.orbitals[1].grid(), "pair density");
}

/// envelope * exp(i dk . r)
ComplexField shifted_envelope(const Wavepacket& w, Vec2 dk) {
  ComplexField out = w.envelope;
  if (dk == Vec2{}) return out;
  const GridSpec& g = out.grid;
  for (int j = 0; j < g.ny; ++j) {
    const cplx py = expi(dk.y * g.y(j));
    for (int i = 0; i < g.nx; ++i) out(i, j) *= py * expi(dk.x * g.x(i));
  }
  return out;
}

/// y-integrated densities and correlation on the x axis.
struct Projection {
  std::vector<double> p1, p2;
  std::vector<cplx> m;
};

/// Amplitudes a1, a2 sampled on an (nx, ny) lattice with weight dw per row
/// cell; `order` maps output position to storage column.
Projection project(const cplx* a1, const cplx* a2, int nx, int ny, double dw, const std::vector<int>& order) {
  Projection p{std::vector<double>(nx), std::vector<double>(nx), std::vector<cplx>(nx)};
  for (int c = 0; c < nx; ++c) {
    const int i = order[c];
    double s1 = 0.0, s2 = 0.0;
    cplx sm = 0.0;
    for (int j = 0; j < ny; ++j) {
      const std::size_t k = static_cast<std::size_t>(j) * nx + i;
      s1 += std::norm(a1[k]);
      s2 += std::norm(a2[k]);
      sm += std::conj(a1[k]) * a2[k];
    }
    p.p1[c] = s1 * dw;
    p.p2[c] = s2 * dw;
    p.m[c] = sm * dw;
  }
  return p;
}

PairDensitySlice assemble(const Projection& p, bool phase_terms, Space axis, std::vector<double> coords) {
  const int n = static_cast<int>(coords.size());
  PairDensitySlice s;
  s.axis = axis;
  s.n = n;
  s.coords = std::move(coords);
  const std::size_t nn = static_cast<std::size_t>(n) * n;
  s.total.assign(nn, 0.0);
  s.uncorrelated.assign(nn, 0.0);
  s.exchange_phase.assign(nn, 0.0);
  for (int a = 0; a < n; ++a) {
    const double ra = p.p1[a] + p.p2[a];
    for (int b = 0; b < n; ++b) {
      const std::size_t k = static_cast<std::size_t>(a) * n + b;
      const double unc = ra * (p.p1[b] + p.p2[b]);
      const double direct = -(p.p1[a] * p.p1[b] + p.p2[a] * p.p2[b]);
      // -2 Re M(a) conj M(b), written so that swapping a and b is exact.
      const double phase = phase_terms ? -2.0 * (p.m[a].real() * p.m[b].real() + p.m[a].imag() * p.m[b].imag()) : 0.0;
      s.uncorrelated[k] = unc;
      s.exchange_phase[k] = phase;
      s.total[k] = unc + direct + phase;
    }
  }
  return s;
}

/// Quadratic Savitzky-Golay smoothing with half-width m (shrunk at the ends).
std::vector<double> savitzky_golay(const std::vector<double>& y, int m) {
  const int n = static_cast<int>(y.size());
  std::vector<double> out(y);
  if (m < 2) return out;
  for (int i = 0; i < n; ++i) {
    const int h = std::min({m, i, n - 1 - i});
    if (h < 2) continue;
    const double norm = (2.0 * h + 1.0) * (4.0 * h * h + 4.0 * h - 3.0);
    double s = 0.0;
    for (int r = -h; r <= h; ++r) s += 3.0 * (3.0 * h * h + 3.0 * h - 1.0 - 5.0 * r * r) * y[i + r];
    out[i] = s / norm;
  }
  return out;
}

}  // namespace

ComplexField mutual_correlation(const Wavepacket& w1, const Wavepacket& w2, bool full_phase) {
  require_same_grid(w1.grid(), w2.grid(), "mutual_correlation");
  ComplexField c = full_phase ? shifted_envelope(w2, w2.carrier_k - w1.carrier_k) : w2.envelope;
  for (std::size_t k = 0; k < c.size(); ++k) c.values[k] *= std::conj(w1.envelope.values[k]);
  return c;
}

RealField density_difference(const Wavepacket& w1, const Wavepacket& w2) {
  require_same_grid(w1.grid(), w2.grid(), "density_difference");
  RealField d(w1.grid());
  for (std::size_t k = 0; k < d.size(); ++k) d.values[k] = std::norm(w1.envelope.values[k]) - std::norm(w2.envelope.values[k]);
  return d;
}

RealField one_particle_density(const SystemState& state) {
  if (state.orbitals.empty()) throw std::invalid_argument("one_particle_density: no orbitals");
  RealField rho(state.grid());
  for (const auto& o : state.orbitals) {
    require_same_grid(o.grid(), rho.grid, "one_particle_density");
    for (std::size_t k = 0; k < rho.size(); ++k) rho.values[k] += std::norm(o.envelope.values[k]);
  }
  return rho;
}

bool exchange_active(const SystemState& state, std::size_t a, std::size_t b) {
  return state.orbitals.at(a).spin == state.orbitals.at(b).spin;
}

PairDensitySlice pair_density_slice(const SystemState& state, Space space) {
  require_pair(state);
  const Wavepacket& w1 = state.orbitals[0];
  const Wavepacket& w2 = state.orbitals[1];
  const GridSpec& g = w1.grid();
  const bool phase_terms = exchange_active(state, 0, 1);
  const Vec2 dk = w2.carrier_k - w1.carrier_k;

  std::vector<int> order(g.nx);
  std::vector<double> coords(g.nx);
  if (space == Space::Real) {
    const ComplexField e2 = shifted_envelope(w2, dk);
    for (int i = 0; i < g.nx; ++i) {
      order[i] = i;
      coords[i] = g.x(i);
    }
    return assemble(project(w1.envelope.data(), e2.data(), g.nx, g.ny, g.dy, order), phase_terms, space,
                    std::move(coords));
  }
  const MomentumField a1 = to_momentum_space(w1.envelope, w1.carrier_k);
  const MomentumField a2 = to_momentum_space(shifted_envelope(w2, dk), w1.carrier_k);
  for (int c = 0; c < g.nx; ++c) {
    order[c] = (c + g.nx / 2) % g.nx;
    coords[c] = a1.kx(order[c]);
  }
  return assemble(project(a1.amplitude.data(), a2.amplitude.data(), g.nx, g.ny, g.dky(), order), phase_terms,
                  space, std::move(coords));
}

PairDensityPoint pair_density_at(const SystemState& state, int i1, int j1, int i2, int j2) {
  require_pair(state);
  const Wavepacket& w1 = state.orbitals[0];
  const Wavepacket& w2 = state.orbitals[1];
  const GridSpec& g = w1.grid();
  if (i1 < 0 || i2 < 0 || j1 < 0 || j2 < 0 || i1 >= g.nx || i2 >= g.nx || j1 >= g.ny || j2 >= g.ny) {
    throw std::invalid_argument("pair_density_at: index out of range");
  }
  const Vec2 dk = w2.carrier_k - w1.carrier_k;
  auto corr = [&](int i, int j) {
    return std::conj(w1.envelope(i, j)) * w2.envelope(i, j) * expi(dk.x * g.x(i) + dk.y * g.y(j));
  };
  const double a1 = std::norm(w1.envelope(i1, j1)), a2 = std::norm(w2.envelope(i1, j1));
  const double b1 = std::norm(w1.envelope(i2, j2)), b2 = std::norm(w2.envelope(i2, j2));
  PairDensityPoint p;
  p.uncorrelated = (a1 + a2) * (b1 + b2);
  if (exchange_active(state, 0, 1)) {
    const cplx c1 = corr(i1, j1), c2 = corr(i2, j2);
    p.exchange_phase = -2.0 * (c1.real() * c2.real() + c1.imag() * c2.imag());
  }
  p.total = p.uncorrelated - a1 * b1 - a2 * b2 + p.exchange_phase;
  return p;
}

void SpectrumBins::validate() const {
  if (!(std::isfinite(e_min) && std::isfinite(e_max) && e_max > e_min)) {
    throw ConfigError("spectrum: energy range must satisfy e_min < e_max");
  }
  if (!(de > 0.0) || energy_bins() < 1) throw ConfigError("spectrum: energy bin must be positive");
  if (energy_bins() > 10'000'000) throw ConfigError("spectrum: too many energy bins");
  if (angle_bins < 1) throw ConfigError("spectrum: need at least one angle bin");
  if (!(acceptance > 0.0 && acceptance <= 0.5 * std::numbers::pi)) {
    throw ConfigError("spectrum: acceptance angle must lie in (0, 90] degrees");
  }
  if (pad < 1 || pad > 64) throw ConfigError("spectrum: momentum padding must be in [1, 64]");
}

int SpectrumBins::energy_bins() const { return static_cast<int>(std::ceil((e_max - e_min) / de - 1e-9)); }

double PinemSpectrum::integral() const {
  double s = 0.0;
  for (double v : Sigma) s += v;
  return s * bins.de;
}

PinemSpectrum pinem_spectrum(const Wavepacket& w, const SpectrumBins& bins) {
  bins.validate();
  const int ne = bins.energy_bins();
  const int na = bins.angle_bins;
  const double dphi = 2.0 * bins.acceptance / na;

  PinemSpectrum s;
  s.bins = bins;
  s.energies.resize(ne);
  s.angles.resize(na);
  for (int e = 0; e < ne; ++e) s.energies[e] = bins.e_min + (e + 0.5) * bins.de;
  for (int a = 0; a < na; ++a) s.angles[a] = -bins.acceptance + (a + 0.5) * dphi;
  s.sigma.assign(static_cast<std::size_t>(ne) * na, 0.0);
  s.Sigma.assign(ne, 0.0);

  const MomentumField mf = to_momentum_space_padded(w, bins.pad, 1);
  const GridSpec& pg = mf.amplitude.grid;
  const double dkx = pg.dkx(), dky = pg.dky(), cell = mf.cell_area();

  double total = 0.0, rim = 0.0;
  for (int j = 0; j < pg.ny; ++j) {
    const double ky = mf.ky(j);
    const bool rim_row = std::abs(pg.ky(j)) >= 0.95 * std::numbers::pi / pg.dy;
    for (int i = 0; i < pg.nx; ++i) {
      const double p = std::norm(mf.amplitude(i, j)) * cell;
      if (p == 0.0) continue;
      total += p;
      if (rim_row || std::abs(pg.kx(i)) >= 0.95 * std::numbers::pi / pg.dx) rim += p;
      const double kx = mf.kx(i);
      const double phi = std::atan2(ky, kx);
      if (!(kx > 0.0) || std::abs(phi) > bins.acceptance) {
        s.outside_weight += p;
        continue;
      }
      const int a = std::clamp(static_cast<int>((phi + bins.acceptance) / dphi), 0, na - 1);
      const double k = std::hypot(kx, ky);
      const double energy = 0.5 * k * k;
      // Radial half-extent of the momentum cell.
      const double h = 0.5 * (std::abs(std::cos(phi)) * dkx + std::abs(std::sin(phi)) * dky);
      const double lo = 0.5 * std::pow(std::max(k - h, 0.0), 2);
      const double hi = 0.5 * (k + h) * (k + h);
      const double width = hi - lo;
      const int e0 = static_cast<int>(std::floor((lo - bins.e_min) / bins.de));
      const int e1 = static_cast<int>(std::floor((hi - bins.e_min) / bins.de));
      double inside = 0.0;
      for (int e = std::max(e0, 0); e <= std::min(e1, ne - 1); ++e) {
        const double b0 = bins.e_min + e * bins.de;
        const double frac = (std::min(hi, b0 + bins.de) - std::max(lo, b0)) / width;
        if (frac <= 0.0) continue;
        inside += frac;
        const double v = energy * p * frac / bins.de;
        s.Sigma[e] += v;
        s.sigma[static_cast<std::size_t>(e) * na + a] += v / dphi;
      }
      s.outside_weight += p * std::max(0.0, 1.0 - inside);
    }
  }
  if (total > 0.0 && rim > 1e-6 * total) {
    throw NumericalError("pinem_spectrum: occupied momenta reach the edge of the momentum grid (" +
                         std::to_string(rim / total) + " of the probability)");
  }
  return s;
}

PinemSpectrum add_spectra(const PinemSpectrum& a, const PinemSpectrum& b) {
  const auto& x = a.bins;
  const auto& y = b.bins;
  if (x.e_min != y.e_min || x.e_max != y.e_max || x.de != y.de || x.angle_bins != y.angle_bins ||
      x.acceptance != y.acceptance || a.sigma.size() != b.sigma.size()) {
    throw std::invalid_argument("add_spectra: bin mismatch");
  }
  PinemSpectrum s = a;
  for (std::size_t k = 0; k < s.sigma.size(); ++k) s.sigma[k] += b.sigma[k];
  for (std::size_t k = 0; k < s.Sigma.size(); ++k) s.Sigma[k] += b.Sigma[k];
  s.outside_weight += b.outside_weight;
  return s;
}

PinemSpectrum pinem_total(const SystemState& state, const SpectrumBins& bins) {
  if (state.orbitals.empty()) throw std::invalid_argument("pinem_total: no orbitals");
  PinemSpectrum s = pinem_spectrum(state.orbitals[0], bins);
  for (std::size_t n = 1; n < state.orbitals.size(); ++n) s = add_spectra(s, pinem_spectrum(state.orbitals[n], bins));
  return s;
}

double kinetic_expectation(const Wavepacket& w) {
  const ComplexField gx = spectral_gradient(w.envelope, Axis::X);
  const ComplexField gy = spectral_gradient(w.envelope, Axis::Y);
  const cplx ikx(0.0, w.carrier_k.x), iky(0.0, w.carrier_k.y);
  double s = 0.0;
  for (std::size_t k = 0; k < gx.size(); ++k) {
    const cplx u = w.envelope.values[k];
    s += std::norm(gx.values[k] + ikx * u) + std::norm(gy.values[k] + iky * u);
  }
  return 0.5 * s * w.grid().cell_area();
}

CombAnalysis analyze_comb(const std::vector<double>& energies, const std::vector<double>& values, double e_lo,
                          double e_hi, double period) {
  if (energies.size() != values.size() || energies.size() < 3) {
    throw std::invalid_argument("analyze_comb: need matching energy and value arrays");
  }
  if (!(period > 0.0) || !(e_hi - e_lo >= 2.0 * period)) {
    throw ConfigError("fringe visibility: band must span at least two comb periods");
  }
  const double de = energies[1] - energies[0];
  // Samples inside the band.
  int lo = 0, hi = static_cast<int>(energies.size()) - 1;
  while (lo <= hi && energies[lo] < e_lo) ++lo;
  while (hi >= lo && energies[hi] > e_hi) --hi;
  if (hi - lo < 2) throw ConfigError("fringe visibility: band holds fewer than three samples");

  // Full window 2m + 1 samples kept below half a period.
  const int m = std::max(0, static_cast<int>(std::floor((0.5 * period / de - 1.0) / 2.0)));
  const std::vector<double> smooth = savitzky_golay(values, m);

  // Peaks: local maxima of the smoothed curve, merged when closer than half a
  // period. Troughs: raw minimum between consecutive peaks.
  std::vector<int> peaks;
  for (int i = std::max(lo, 1); i <= std::min(hi, static_cast<int>(values.size()) - 2); ++i) {
    if (!(smooth[i] > smooth[i - 1] && smooth[i] >= smooth[i + 1])) continue;
    if (!peaks.empty() && (i - peaks.back()) * de < 0.5 * period) {
      if (smooth[i] > smooth[peaks.back()]) peaks.back() = i;
      continue;
    }
    peaks.push_back(i);
  }

  CombAnalysis out;
  const int r = std::max(m, 1);
  for (int& p : peaks) {
    int best = p;
    for (int i = std::max(lo, p - r); i <= std::min(hi, p + r); ++i)
      if (values[i] > values[best]) best = i;
    p = best;
    out.peak_energies.push_back(energies[best]);
    out.peak_values.push_back(values[best]);
  }
  for (std::size_t k = 0; k + 1 < peaks.size(); ++k) {
    int best = peaks[k];
    for (int i = peaks[k]; i <= peaks[k + 1]; ++i)
      if (values[i] < values[best]) best = i;
    out.trough_energies.push_back(energies[best]);
    out.trough_values.push_back(values[best]);
  }
  // Trough k sits between peaks k and k + 1.
  for (std::size_t p = 0; p < peaks.size(); ++p) {
    double sum = 0.0;
    int count = 0;
    if (p > 0) {
      sum += out.trough_values[p - 1];
      ++count;
    }
    if (p < out.trough_values.size()) {
      sum += out.trough_values[p];
      ++count;
    }
    const double pk = out.peak_values[p];
    const double tr = count ? sum / count : pk;
    out.peak_visibility.push_back(pk + tr > 0.0 ? (pk - tr) / (pk + tr) : 0.0);
  }
  if (!out.peak_values.empty() && !out.trough_values.empty()) {
    const double pmax = *std::max_element(out.peak_values.begin(), out.peak_values.end());
    const double tmin = *std::min_element(out.trough_values.begin(), out.trough_values.end());
    out.visibility = pmax + tmin > 0.0 ? (pmax - tmin) / (pmax + tmin) : 0.0;
  }
  return out;
}

double fringe_visibility(const PinemSpectrum& spectrum, double e_lo, double e_hi, double period) {
  const CombAnalysis c = analyze_comb(spectrum.energies, spectrum.Sigma, e_lo, e_hi, period);
  if (c.peak_values.empty() || c.trough_values.empty()) {
    double vmin = INFINITY, vmax = -INFINITY;
    for (std::size_t i = 0; i < spectrum.energies.size(); ++i) {
      if (spectrum.energies[i] < e_lo || spectrum.energies[i] > e_hi) continue;
      vmin = std::min(vmin, spectrum.Sigma[i]);
      vmax = std::max(vmax, spectrum.Sigma[i]);
    }
    if (vmax - vmin <= 1e-12 * std::max(std::abs(vmax), 1e-300)) return 0.0;
    throw NumericalError("fringe visibility: no comb peaks detected in the band");
  }
  return c.visibility;
}

}  // namespace tdhf
