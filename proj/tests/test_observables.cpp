#include <cmath>
#include <numbers>

#include "doctest.h"
#include "tdhf/errors.hpp"
#include "tdhf/observables.hpp"

using namespace tdhf;

namespace {

constexpr double kPi = std::numbers::pi;

Wavepacket gauss(const GridSpec& g, Vec2 c, double fl, double ft, double energy, Spin s = Spin::Up) {
  return make_gaussian_wavepacket(g, c, fl, ft, energy, {1.0, 0.0}, s);
}

SystemState pair(Wavepacket a, Wavepacket b, SpinMode mode) {
  if (mode == SpinMode::Unpolarized) b.spin = Spin::Down;
  SystemState s;
  s.orbitals = {std::move(a), std::move(b)};
  s.spin_mode = mode;
  return s;
}

/// Overlapping pair with different carriers, orthonormalized.
SystemState test_pair(const GridSpec& g, SpinMode mode) {
  auto ab = gram_schmidt({gauss(g, {-6.0, 1.0}, 14.0, 8.0, 0.30), gauss(g, {5.0, -2.0}, 12.0, 9.0, 0.36)});
  return pair(ab[0], ab[1], mode);
}

double max_abs(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

cplx full_psi(const Wavepacket& w, int i, int j) {
  const GridSpec& g = w.grid();
  return w.envelope(i, j) * std::polar(1.0, w.carrier_k.x * g.x(i) + w.carrier_k.y * g.y(j));
}

}  // namespace

TEST_CASE("mutual correlation and density difference") {
  const GridSpec g{64, 32, 1.5, 1.5, -48.0, -24.0};
  const Wavepacket a = gauss(g, {-10.0, 0.0}, 12.0, 10.0, 0.30);
  const Wavepacket b = gauss(g, {8.0, 3.0}, 10.0, 9.0, 0.42);

  // Identical packets: C = |psi|^2.
  const ComplexField caa = mutual_correlation(a, a);
  for (std::size_t k = 0; k < caa.size(); ++k) {
    REQUIRE(caa.values[k].imag() == 0.0);
    REQUIRE(caa.values[k].real() >= 0.0);
  }
  // Integral identity with the carrier phase attached.
  CHECK(std::abs(integrate(mutual_correlation(a, b, true)) - inner_product(a, b)) < 1e-12);
  Wavepacket b_same = b;
  b_same.carrier_k = a.carrier_k;
  CHECK(std::abs(integrate(mutual_correlation(a, b_same)) - inner_product(a, b_same)) < 1e-12);

  // Disjoint supports.
  Wavepacket l = a, r = a;
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) (i < g.nx / 2 ? r : l).envelope(i, j) = 0.0;
  for (const cplx& v : mutual_correlation(l, r, true).values) REQUIRE(v == cplx(0.0));

  const RealField d = density_difference(a, b);
  const RealField dswap = density_difference(b, a);
  for (std::size_t k = 0; k < d.size(); ++k) REQUIRE(d.values[k] == -dswap.values[k]);
  CHECK(std::abs(integrate(d)) < 1e-12);
  for (double v : density_difference(a, a).values) REQUIRE(v == 0.0);

  const GridSpec other{64, 32, 1.0, 1.5, -32.0, -24.0};
  CHECK_THROWS_AS(mutual_correlation(a, gauss(other, {0.0, 0.0}, 12.0, 10.0, 0.3)), std::invalid_argument);
}

TEST_CASE("one-particle density") {
  const GridSpec g{64, 32, 1.5, 1.5, -48.0, -24.0};
  const SystemState pol = test_pair(g, SpinMode::Polarized);
  const SystemState unp = test_pair(g, SpinMode::Unpolarized);
  CHECK(std::abs(integrate(one_particle_density(pol)) - 2.0) < 1e-10);
  CHECK(one_particle_density(pol).values == one_particle_density(unp).values);
  const SystemState same = pair(pol.orbitals[0], pol.orbitals[0], SpinMode::Unpolarized);
  const RealField rho = one_particle_density(same);
  for (std::size_t k = 0; k < rho.size(); ++k) {
    REQUIRE(rho.values[k] == doctest::Approx(2.0 * std::norm(pol.orbitals[0].envelope.values[k])).epsilon(1e-15));
  }
}

TEST_CASE("pair density slice against brute-force integration") {
  const GridSpec g{32, 32, 2.0, 2.0, -32.0, -32.0};
  auto ab = gram_schmidt({gauss(g, {-5.0, 1.0}, 10.0, 8.0, 0.30), gauss(g, {4.0, -1.0}, 9.0, 9.0, 0.36)});
  for (SpinMode mode : {SpinMode::Polarized, SpinMode::Unpolarized}) {
    const SystemState s = pair(ab[0], ab[1], mode);
    const PairDensitySlice sl = pair_density_slice(s, Space::Real);
    const Wavepacket& w1 = s.orbitals[0];
    const Wavepacket& w2 = s.orbitals[1];
    const bool polarized = mode == SpinMode::Polarized;
    const double scale = max_abs(sl.total);
    for (int a = 0; a < g.nx; ++a) {
      for (int b = 0; b < g.nx; ++b) {
        double total = 0.0;
        for (int j1 = 0; j1 < g.ny; ++j1)
          for (int j2 = 0; j2 < g.ny; ++j2) {
            const cplx p1a = full_psi(w1, a, j1), p2a = full_psi(w2, a, j1);
            const cplx p1b = full_psi(w1, b, j2), p2b = full_psi(w2, b, j2);
            // Determinant amplitude, or the two distinguishable orderings.
            total += polarized ? std::norm(p1a * p2b - p2a * p1b) : std::norm(p1a * p2b) + std::norm(p2a * p1b);
          }
        total *= g.dy * g.dy;
        REQUIRE(std::abs(sl.at(sl.total, a, b) - total) < 1e-12 * scale);
      }
    }
  }
}

TEST_CASE("pair density invariants") {
  const GridSpec g{64, 32, 1.5, 1.5, -48.0, -24.0};
  for (Space space : {Space::Real, Space::Momentum}) {
    for (SpinMode mode : {SpinMode::Polarized, SpinMode::Unpolarized}) {
      CAPTURE(static_cast<int>(space));
      CAPTURE(static_cast<int>(mode));
      const SystemState s = test_pair(g, mode);
      const PairDensitySlice sl = pair_density_slice(s, space);
      const int n = sl.n;
      const double h = sl.spacing();
      const double scale = max_abs(sl.total);
      CHECK(h > 0.0);

      double sum = 0.0, worst_sym = 0.0, floor_ = 0.0;
      for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) {
          sum += sl.at(sl.total, a, b);
          worst_sym = std::max(worst_sym, std::abs(sl.at(sl.total, a, b) - sl.at(sl.total, b, a)));
          floor_ = std::min(floor_, sl.at(sl.total, a, b));
        }
      CHECK(std::abs(sum * h * h - 2.0) < 1e-8);
      CHECK(worst_sym <= 1e-12 * scale);
      CHECK(floor_ >= -1e-10);

      // Partial trace: int total dx2 = (N - 1) rho1(x1).
      double worst_trace = 0.0;
      for (int a = 0; a < n; ++a) {
        double row = 0.0;
        for (int b = 0; b < n; ++b) row += sl.at(sl.total, a, b);
        // rho1(x1) from the uncorrelated product: rho(a) rho(b) summed over b is rho(a) * 2 / h.
        double unc_row = 0.0;
        for (int b = 0; b < n; ++b) unc_row += sl.at(sl.uncorrelated, a, b);
        const double rho_a = unc_row * h / 2.0;
        worst_trace = std::max(worst_trace, std::abs(row * h - rho_a));
      }
      CHECK(worst_trace < 1e-8);

      if (mode == SpinMode::Unpolarized) {
        CHECK(max_abs(sl.exchange_phase) == 0.0);
      } else {
        CHECK(max_abs(sl.exchange_phase) > 1e-3 * scale);
      }
    }
  }
}

TEST_CASE("momentum slice does not depend on how the carrier is split") {
  const GridSpec g{64, 32, 1.5, 1.5, -48.0, -24.0};
  const SystemState s = test_pair(g, SpinMode::Polarized);
  // Same physical state with orbital 2 written on orbital 1's carrier.
  SystemState t = s;
  Wavepacket& w2 = t.orbitals[1];
  const Vec2 dk = w2.carrier_k - s.orbitals[0].carrier_k;
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) w2.envelope(i, j) *= std::polar(1.0, dk.x * g.x(i) + dk.y * g.y(j));
  w2.carrier_k = s.orbitals[0].carrier_k;
  for (Space space : {Space::Real, Space::Momentum}) {
    const PairDensitySlice a = pair_density_slice(s, space);
    const PairDensitySlice b = pair_density_slice(t, space);
    const double scale = max_abs(a.total);
    for (std::size_t k = 0; k < a.total.size(); ++k) REQUIRE(std::abs(a.total[k] - b.total[k]) < 1e-12 * scale);
  }
  const PairDensitySlice m = pair_density_slice(s, Space::Momentum);
  for (int c = 1; c < m.n; ++c) REQUIRE(m.coords[c] > m.coords[c - 1]);
}

TEST_CASE("full-coordinate pair density and exclusion") {
  const GridSpec g{64, 32, 1.5, 1.5, -48.0, -24.0};
  const SystemState pol = test_pair(g, SpinMode::Polarized);
  const SystemState unp = test_pair(g, SpinMode::Unpolarized);
  double peak = 0.0;
  for (int i = 0; i < g.nx; i += 3)
    for (int j = 0; j < g.ny; j += 3) peak = std::max(peak, pair_density_at(pol, i, j, 20, 16).total);
  CHECK(peak > 0.0);
  for (int i = 0; i < g.nx; i += 5)
    for (int j = 0; j < g.ny; j += 3) {
      REQUIRE(std::abs(pair_density_at(pol, i, j, i, j).total) <= 1e-12 * peak);
      REQUIRE(pair_density_at(unp, i, j, i, j).exchange_phase == 0.0);
    }
  // Off the diagonal the point value equals the determinant oracle.
  const auto p = pair_density_at(pol, 25, 14, 38, 18);
  const cplx d = full_psi(pol.orbitals[0], 25, 14) * full_psi(pol.orbitals[1], 38, 18) -
                 full_psi(pol.orbitals[1], 25, 14) * full_psi(pol.orbitals[0], 38, 18);
  CHECK(std::abs(p.total - std::norm(d)) < 1e-13 * peak);
  CHECK(std::abs(p.exchange_phase) > 0.0);

  SystemState three = pol;
  three.orbitals.push_back(pol.orbitals[0]);
  CHECK_THROWS_AS(pair_density_slice(three, Space::Real), std::invalid_argument);
}

TEST_CASE("orthogonalization barely moves observables when the overlap is small") {
  const GridSpec g{64, 32, 1.5, 1.5, -48.0, -24.0};
  const Wavepacket a = gauss(g, {-14.0, 0.0}, 10.0, 8.0, 0.30);
  const Wavepacket b = gauss(g, {14.0, 0.0}, 10.0, 8.0, 0.30);
  const double ov = std::abs(inner_product(a, b));
  REQUIRE(ov < 0.05);
  const auto ab = gram_schmidt({a, b});
  const SystemState raw = pair(a, b, SpinMode::Polarized);
  const SystemState ortho = pair(ab[0], ab[1], SpinMode::Polarized);
  const PairDensitySlice s0 = pair_density_slice(raw, Space::Real);
  const PairDensitySlice s1 = pair_density_slice(ortho, Space::Real);
  double diff = 0.0;
  for (std::size_t k = 0; k < s0.total.size(); ++k) diff = std::max(diff, std::abs(s0.total[k] - s1.total[k]));
  MESSAGE("overlap " << ov << ", max pair density change " << diff / max_abs(s0.total));
  CHECK(diff <= 1e-3 * max_abs(s0.total));
}

TEST_CASE("PINEM spectrum conserves the kinetic energy") {
  // Packet moving at k = 3 with a narrow momentum spread.
  const GridSpec g{256, 64, 1.0, 1.0, -128.0, -32.0};
  const double e0 = 4.5;
  const Wavepacket w = gauss(g, {0.0, 0.0}, 40.0, 12.0, e0);
  const double hk = kinetic_expectation(w);

  SpectrumBins bins;
  bins.e_min = 3.0;
  bins.e_max = 6.0;
  bins.de = 0.01;
  bins.angle_bins = 64;
  bins.acceptance = 0.5 * kPi;
  const PinemSpectrum s = pinem_spectrum(w, bins);
  CHECK(std::abs(s.integral() - hk) < 1e-6 * hk);
  CHECK(s.outside_weight < 1e-9);
  // Sigma is the angular integral of sigma.
  for (int e = 0; e < bins.energy_bins(); ++e) {
    double acc = 0.0;
    for (int a = 0; a < bins.angle_bins; ++a) {
      const double v = s.sigma[static_cast<std::size_t>(e) * bins.angle_bins + a];
      REQUIRE(v >= 0.0);
      acc += v;
    }
    REQUIRE(std::abs(acc * 2.0 * bins.acceptance / bins.angle_bins - s.Sigma[e]) <= 1e-12 * (1.0 + s.Sigma[e]));
  }
  // One peak at the packet energy.
  std::size_t top = 0;
  for (std::size_t e = 1; e < s.Sigma.size(); ++e)
    if (s.Sigma[e] > s.Sigma[top]) top = e;
  // The momentum spread is about 0.09 in energy; the mode sits well inside it.
  CHECK(std::abs(s.energies[top] - e0) < 0.04);
  CHECK(std::abs(s.integral() - e0) < 2e-3 * e0);

  // Padding refines the lattice but leaves the integral alone.
  bins.pad = 4;
  CHECK(std::abs(pinem_spectrum(w, bins).integral() - hk) < 1e-6 * hk);
  bins.pad = 1;

  // A narrow acceptance drops the transverse tails into outside_weight.
  SpectrumBins narrow = bins;
  narrow.acceptance = 0.01;
  const PinemSpectrum sn = pinem_spectrum(w, narrow);
  CHECK(sn.outside_weight > 0.1);
  CHECK(sn.integral() < s.integral());

  // Two identical orbitals give twice the spectrum.
  SystemState st;
  st.orbitals = {w, w};
  st.orbitals[1].spin = Spin::Down;
  st.spin_mode = SpinMode::Unpolarized;
  const PinemSpectrum tot = pinem_total(st, bins);
  for (std::size_t e = 0; e < s.Sigma.size(); ++e) REQUIRE(tot.Sigma[e] == 2.0 * s.Sigma[e]);

  SpectrumBins bad = bins;
  bad.e_max = bad.e_min;
  CHECK_THROWS_AS(pinem_spectrum(w, bad), ConfigError);
  bad = bins;
  bad.angle_bins = 0;
  CHECK_THROWS_AS(pinem_spectrum(w, bad), ConfigError);
  SpectrumBins other = bins;
  other.de = 0.02;
  CHECK_THROWS_AS(add_spectra(s, pinem_spectrum(w, other)), std::invalid_argument);

  // Momentum content at the Nyquist edge is refused.
  Wavepacket fast = w;
  for (int j = 0; j < g.ny; ++j)
    for (int i = 1; i < g.nx; i += 2) fast.envelope(i, j) = -fast.envelope(i, j);
  SpectrumBins wide = bins;
  wide.e_min = 0.0;
  wide.e_max = 20.0;
  CHECK_THROWS_AS(pinem_spectrum(fast, wide), NumericalError);
}

TEST_CASE("fringe visibility on constructed spectra") {
  const double period = 1.0;
  std::vector<double> e(2001), comb(2001), flat(2001, 3.0), spikes(2001, 0.0), ramp(2001);
  for (int i = 0; i < 2001; ++i) {
    e[i] = -10.0 + 0.01 * i;
    comb[i] = 2.0 * (1.0 + 0.5 * std::cos(2.0 * kPi * e[i] / period));
    ramp[i] = 1.0 + e[i];
  }
  for (int n = -9; n <= 9; ++n) spikes[static_cast<std::size_t>((n + 10) * 100)] = 1.0;

  PinemSpectrum s;
  s.bins.de = 0.01;
  s.energies = e;
  s.Sigma = comb;
  CHECK(fringe_visibility(s, -4.0, 4.0, period) == doctest::Approx(0.5).epsilon(1e-3));
  const CombAnalysis c = analyze_comb(e, comb, -4.2, 4.2, period);
  CHECK(c.peak_energies.size() == 9);
  for (double v : c.peak_visibility) CHECK(v == doctest::Approx(0.5).epsilon(1e-3));
  for (std::size_t k = 1; k < c.peak_energies.size(); ++k) {
    CHECK(c.peak_energies[k] - c.peak_energies[k - 1] == doctest::Approx(period).epsilon(1e-9));
  }

  s.Sigma = spikes;
  CHECK(fringe_visibility(s, -4.5, 4.5, period) == doctest::Approx(1.0));
  s.Sigma = flat;
  CHECK(fringe_visibility(s, -4.0, 4.0, period) == 0.0);
  s.Sigma = ramp;
  CHECK_THROWS_AS(fringe_visibility(s, -4.0, 4.0, period), NumericalError);
  s.Sigma = comb;
  CHECK_THROWS_AS(fringe_visibility(s, -0.5, 1.0, period), ConfigError);
}
