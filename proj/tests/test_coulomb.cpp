#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "tdhf/coulomb.hpp"
#include "tdhf/units.hpp"

using namespace tdhf;
using units::nm_to_bohr;

namespace {

constexpr double kPi = std::numbers::pi;

// 256 nm square box with 1 nm spacing.
GridSpec square_grid() {
  const double h = nm_to_bohr(1.0);
  return GridSpec{256, 256, h, h, -128 * h, -128 * h};
}

RealField gaussian_density(const GridSpec& g, Vec2 c, double sigma) {
  RealField rho(g);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      const double r2 = std::pow(g.x(i) - c.x, 2) + std::pow(g.y(j) - c.y, 2);
      rho(i, j) = std::exp(-r2 / (2 * sigma * sigma)) / (2 * kPi * sigma * sigma);
    }
  return rho;
}

ComplexField random_packet_field(const GridSpec& g, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  ComplexField f(g);
  for (int m = 0; m < 3; ++m) {
    const Vec2 c{u(rng) * 0.2 * g.lx(), u(rng) * 0.2 * g.ly()};
    const double s = (0.04 + 0.02 * u(rng)) * g.lx();
    const cplx a(u(rng), u(rng));
    const Vec2 k{u(rng) * 0.1, u(rng) * 0.1};
    for (int j = 0; j < g.ny; ++j)
      for (int i = 0; i < g.nx; ++i) {
        const double dx = g.x(i) - c.x, dy = g.y(j) - c.y;
        f(i, j) += a * std::exp(-(dx * dx + dy * dy) / (4 * s * s)) * std::polar(1.0, k.x * g.x(i) + k.y * g.y(j));
      }
  }
  return f;
}

Wavepacket packet_from(const ComplexField& env, Vec2 k, Spin s = Spin::Up) {
  Wavepacket w;
  w.envelope = env;
  w.carrier_k = k;
  w.carrier_omega = carrier_frequency(k);
  w.spin = s;
  return w;
}

cplx braket(const ComplexField& a, const ComplexField& b) {
  cplx s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += std::conj(a.values[k]) * b.values[k];
  return s * a.grid.cell_area();
}

}  // namespace

TEST_CASE("special functions") {
  CHECK(erfcx(0.0) == doctest::Approx(1.0));
  CHECK(erfcx(1.0) == doctest::Approx(0.42758357615580700442).epsilon(1e-14));
  CHECK(erfcx(30.0) == doctest::Approx(0.018795888861416751).epsilon(1e-12));
  // Continuity across the branch switch.
  CHECK(erfcx(25.0 - 1e-12) == doctest::Approx(erfcx(25.0)).epsilon(1e-12));

  CHECK(lattice_zeta_half(1.0, 1.0) == doctest::Approx(-3.9002649200019).epsilon(1e-10));
  // Rotating the lattice leaves the sum unchanged.
  CHECK(lattice_zeta_half(0.3, 2.4) == doctest::Approx(lattice_zeta_half(2.4, 0.3)).epsilon(1e-12));
  // Homogeneity: Z(c a, c b) = Z(a, b) / c.
  CHECK(lattice_zeta_half(0.5, 0.5) == doctest::Approx(2 * lattice_zeta_half(1.0, 1.0)).epsilon(1e-11));

  const double s = 37.5;
  for (double rho : {0.5, 10.0, 60.0, 400.0, 5000.0}) {
    CHECK(screened_interaction(rho, s) == doctest::Approx(oracle::interaction(rho, s)).epsilon(1e-9));
  }
}

TEST_CASE("kernel construction") {
  const GridSpec g = square_grid();
  const ScreenedKernel kern = build_kernel(g, nm_to_bohr(3.3));
  const double s = kern.separation_sigma();
  const double sz = s / std::numbers::sqrt2;

  SUBCASE("narrow-width limit is the bare 2D kernel") {
    for (double k : {0.01, 0.1, 1.0}) {
      CHECK(screened_kernel_k(k, 1e-9) / (2 * kPi / k) == doctest::Approx(1.0).epsilon(1e-8));
    }
  }
  SUBCASE("matches the transverse double integral") {
    for (double k : {0.003, 0.04, 0.5}) {
      CHECK(screened_kernel_k(k, s) == doctest::Approx(oracle::kernel_k(k, sz)).epsilon(1e-6));
    }
  }
  SUBCASE("symmetric under k -> -k") {
    for (int j = 0; j < g.ny; ++j)
      for (int i = 0; i < g.nx; ++i) {
        CHECK(kern.kernel_k(i, j) == kern.kernel_k((g.nx - i) % g.nx, (g.ny - j) % g.ny));
      }
  }
  SUBCASE("positive and decreasing away from k = 0") {
    double prev = kern.kernel_k(0, 0);
    CHECK(prev > 0.0);
    for (int i = 1; i < g.nx / 2; ++i) {
      CHECK(kern.kernel_k(i, 0) > 0.0);
      CHECK(kern.kernel_k(i, 0) < prev);
      prev = kern.kernel_k(i, 0);
    }
  }
  SUBCASE("domain-integral option") {
    const ScreenedKernel alt = build_kernel(g, nm_to_bohr(3.3), ZeroMode::DomainIntegral);
    const double a = 0.5 * g.lx(), b = 0.5 * g.ly();
    const double cell = 4 * (a * std::asinh(b / a) + b * std::asinh(a / b));
    CHECK(alt.kernel_k(0, 0) == doctest::Approx(cell - 2 * std::sqrt(2 * kPi) * kern.separation_sigma()));
    CHECK(alt.kernel_k(3, 2) == kern.kernel_k(3, 2));
  }
  CHECK_THROWS_AS(build_kernel(g, 0.0), ConfigError);
}

TEST_CASE("hartree potential of a Gaussian matches quadrature") {
  // 512 nm box: periodic images stay below the tolerance at 30 nm offsets.
  const double h = nm_to_bohr(1.0);
  const GridSpec g{512, 512, h, h, -256 * h, -256 * h};
  const ScreenedKernel kern = build_kernel(g, nm_to_bohr(3.3));
  const double sigma = nm_to_bohr(5.0);
  const RealField rho = gaussian_density(g, {0.0, 0.0}, sigma);
  const RealField v = hartree_potential(kern, rho);

  auto dens = [&](double x, double y) { return std::exp(-(x * x + y * y) / (2 * sigma * sigma)) / (2 * kPi * sigma * sigma); };
  // On-centre and 10 nm, plus a spread of other offsets.
  const int offsets[][2] = {{0, 0}, {10, 0}, {0, 10}, {3, 4}, {-7, 2}, {15, -15}, {20, 0}, {-1, -1}, {5, 25}, {-30, 8}};
  for (const auto& o : offsets) {
    const int i = 256 + o[0], j = 256 + o[1];
    const double ref =
        oracle::polar_convolution(dens, g.x(i), g.y(j), kern.separation_sigma(), 12 * sigma + std::hypot(g.x(i), g.y(j)))
            .real();
    CAPTURE(o[0]);
    CAPTURE(o[1]);
    CHECK(std::abs(v(i, j) / ref - 1.0) < 1e-3);
  }
}

TEST_CASE("hartree potential properties") {
  const GridSpec g = square_grid();
  const ScreenedKernel kern = build_kernel(g, nm_to_bohr(3.3));
  SUBCASE("zero density") {
    for (double x : hartree_potential(kern, RealField(g)).values) CHECK(x == 0.0);
  }
  SUBCASE("translation equivariance") {
    const RealField a = gaussian_density(g, {0.0, 0.0}, nm_to_bohr(4.0));
    const RealField b = gaussian_density(g, {5 * g.dx, -3 * g.dy}, nm_to_bohr(4.0));
    const RealField va = hartree_potential(kern, a), vb = hartree_potential(kern, b);
    double e = 0.0;
    for (int j = 0; j < g.ny; ++j)
      for (int i = 0; i < g.nx; ++i) e = std::max(e, std::abs(vb((i + 5) % g.nx, (j - 3 + g.ny) % g.ny) - va(i, j)));
    CHECK(e < 1e-10);
  }
  SUBCASE("linearity and positive interaction energy") {
    const RealField a = gaussian_density(g, {10.0, 0.0}, nm_to_bohr(4.0));
    const RealField b = gaussian_density(g, {-40.0, 30.0}, nm_to_bohr(2.0));
    RealField c(g);
    for (std::size_t k = 0; k < c.size(); ++k) c.values[k] = 2.0 * a.values[k] + 0.5 * b.values[k];
    const RealField va = hartree_potential(kern, a), vb = hartree_potential(kern, b), vc = hartree_potential(kern, c);
    double e = 0.0, energy = 0.0;
    for (std::size_t k = 0; k < c.size(); ++k) {
      e = std::max(e, std::abs(vc.values[k] - 2.0 * va.values[k] - 0.5 * vb.values[k]));
      energy += 0.5 * c.values[k] * vc.values[k] * g.cell_area();
    }
    CHECK(e < 1e-10);
    CHECK(energy > 0.0);
  }
  SUBCASE("negative density rejected") {
    RealField a(g);
    a.values[7] = -1e-3;
    CHECK_THROWS_AS(hartree_potential(kern, a), std::invalid_argument);
  }
}

TEST_CASE("exchange kernel") {
  const GridSpec g = square_grid();
  const ScreenedKernel kern = build_kernel(g, nm_to_bohr(3.3));

  SUBCASE("disjoint envelopes give zero") {
    ComplexField a(g), b(g);
    for (int j = 0; j < g.ny; ++j)
      for (int i = 0; i < g.nx; ++i) (i < g.nx / 2 ? a : b)(i, j) = 1.0;
    const ComplexField x = exchange_kernel(kern, packet_from(a, {0.1, 0}), packet_from(b, {0.2, 0}));
    for (auto v : x.values) CHECK(std::abs(v) == 0.0);
  }
  SUBCASE("identical orbitals reduce to minus the Hartree potential") {
    Wavepacket w = make_gaussian_wavepacket(g, {0, 0}, nm_to_bohr(12), nm_to_bohr(8), 2.0, {1, 0}, Spin::Up);
    const ComplexField x = exchange_kernel(kern, w, w);
    const RealField vh = hartree_potential(kern, abs_squared(w.envelope));
    double e = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) e = std::max(e, std::abs(x.values[k] + vh.values[k]));
    CHECK(e < 1e-12);
  }
  SUBCASE("phase-weighted product matches quadrature") {
    const double s1 = nm_to_bohr(6.0), s2 = nm_to_bohr(5.0);
    const Vec2 c1{nm_to_bohr(-3.0), 0.0}, c2{nm_to_bohr(4.0), nm_to_bohr(2.0)};
    auto gauss = [](double x, double y, Vec2 c, double s) {
      return std::exp(-((x - c.x) * (x - c.x) + (y - c.y) * (y - c.y)) / (4 * s * s));
    };
    ComplexField em(g), en(g);
    for (int j = 0; j < g.ny; ++j)
      for (int i = 0; i < g.nx; ++i) {
        em(i, j) = gauss(g.x(i), g.y(j), c1, s1);
        en(i, j) = gauss(g.x(i), g.y(j), c2, s2);
      }
    const Vec2 kn{1.0, 0.0};
    const Vec2 km{1.0 + 3 * g.dkx(), -2 * g.dky()};
    const Vec2 dk = km - kn;
    const ComplexField x = exchange_kernel(kern, packet_from(em, km), packet_from(en, kn));
    auto prod = [&](double xx, double yy) {
      return gauss(xx, yy, c1, s1) * gauss(xx, yy, c2, s2) * std::polar(1.0, -(dk.x * xx + dk.y * yy));
    };
    for (const auto& o : {std::array<int, 2>{128, 128}, {138, 128}, {120, 140}, {140, 120}}) {
      const double x0 = g.x(o[0]), y0 = g.y(o[1]);
      const cplx conv = oracle::polar_convolution(prod, x0, y0, kern.separation_sigma(), nm_to_bohr(150.0));
      const cplx ref = -std::polar(1.0, dk.x * x0 + dk.y * y0) * conv;
      CHECK(std::abs(x(o[0], o[1]) - ref) < 1e-3 * std::abs(ref));
    }
  }
  SUBCASE("hermiticity, linearity and antilinearity") {
    const ComplexField a = random_packet_field(g, 11), b = random_packet_field(g, 12);
    const ComplexField ka = convolve(kern, a), kb = convolve(kern, b);
    const cplx lhs = braket(a, kb), rhs = std::conj(braket(b, ka));
    double scale = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) scale += std::abs(a.values[k]) * std::abs(kb.values[k]) * g.cell_area();
    CHECK(std::abs(lhs - rhs) < 1e-10 * scale);

    const Vec2 k1{0.3, 0.0}, k2{0.31, 0.01};
    const ComplexField c = random_packet_field(g, 13);
    const cplx al(0.7, -0.4);
    ComplexField comb(g);
    for (std::size_t k = 0; k < comb.size(); ++k) comb.values[k] = al * a.values[k] + c.values[k];
    // Antilinear in w_m.
    const ComplexField xa = exchange_kernel(kern, packet_from(a, k1), packet_from(b, k2));
    const ComplexField xc = exchange_kernel(kern, packet_from(c, k1), packet_from(b, k2));
    const ComplexField xs = exchange_kernel(kern, packet_from(comb, k1), packet_from(b, k2));
    double e = 0.0, m = 0.0;
    for (std::size_t k = 0; k < xs.size(); ++k) {
      e = std::max(e, std::abs(xs.values[k] - std::conj(al) * xa.values[k] - xc.values[k]));
      m = std::max(m, std::abs(xs.values[k]));
    }
    CHECK(e < 1e-10 * m);
    // Linear in w_n.
    const ComplexField ya = exchange_kernel(kern, packet_from(b, k2), packet_from(a, k1));
    const ComplexField yc = exchange_kernel(kern, packet_from(b, k2), packet_from(c, k1));
    const ComplexField ys = exchange_kernel(kern, packet_from(b, k2), packet_from(comb, k1));
    e = 0.0;
    m = 0.0;
    for (std::size_t k = 0; k < ys.size(); ++k) {
      e = std::max(e, std::abs(ys.values[k] - al * ya.values[k] - yc.values[k]));
      m = std::max(m, std::abs(ys.values[k]));
    }
    CHECK(e < 1e-10 * m);
  }
  SUBCASE("exchange cancels Hartree for a doubly occupied orbital") {
    Wavepacket w = make_gaussian_wavepacket(g, {0, 0}, nm_to_bohr(12), nm_to_bohr(8), 2.0, {1, 0}, Spin::Up);
    const RealField vh = hartree_potential(kern, abs_squared(w.envelope));
    const ComplexField x = exchange_kernel(kern, w, w);
    double e = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
      const cplx total = vh.values[k] * w.envelope.values[k] + x.values[k] * w.envelope.values[k];
      e = std::max(e, std::abs(total));
    }
    CHECK(e < 1e-10);
  }
  SUBCASE("spin mismatch rejected") {
    Wavepacket a = make_gaussian_wavepacket(g, {0, 0}, nm_to_bohr(12), nm_to_bohr(8), 2.0, {1, 0}, Spin::Up);
    Wavepacket b = a;
    b.spin = Spin::Down;
    CHECK_THROWS_AS(exchange_kernel(kern, a, b), std::invalid_argument);
  }
}
