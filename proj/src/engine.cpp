#include "tdhf/engine.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>
#include <string>

#include "tdhf/errors.hpp"
#include "tdhf/fft.hpp"

namespace tdhf {

namespace {

constexpr cplx kI{0.0, 1.0};

bool same_spin_pair(const SystemState& s, std::size_t n, std::size_t m) {
  return s.orbitals[n].spin == s.orbitals[m].spin;
}

// exp(i d . r) on the grid, as separable row and column factors.
struct PlaneWave {
  std::vector<cplx> ex, ey;
  PlaneWave(const GridSpec& g, Vec2 d) : ex(g.nx), ey(g.ny) {
    for (int i = 0; i < g.nx; ++i) ex[i] = std::polar(1.0, d.x * g.x(i));
    for (int j = 0; j < g.ny; ++j) ey[j] = std::polar(1.0, d.y * g.y(j));
  }
  cplx operator()(int i, int j) const { return ex[i] * ey[j]; }
};

// Hartree potentials of all orbitals, two per complex convolution.
std::vector<RealField> hartree_all(const ScreenedKernel& kernel, const std::vector<const cplx*>& u) {
  const GridSpec& g = kernel.grid;
  const std::size_t n = g.size();
  std::vector<RealField> v(u.size(), RealField(g));
  ComplexField buf(g);
  for (std::size_t a = 0; a < u.size(); a += 2) {
    const bool pair = a + 1 < u.size();
    for (std::size_t k = 0; k < n; ++k) {
      const double ra = std::norm(u[a][k]);
      const double rb = pair ? std::norm(u[a + 1][k]) : 0.0;
      buf.values[k] = {ra, rb};
    }
    convolve_in_place(kernel, buf.data());
    for (std::size_t k = 0; k < n; ++k) {
      v[a].values[k] = buf.values[k].real();
      if (pair) v[a + 1].values[k] = buf.values[k].imag();
    }
  }
  return v;
}

// X = kernel * (conj(u_m) u_n exp(-i dk.r)), dk = k_m - k_n.
ComplexField exchange_convolution(const ScreenedKernel& kernel, const cplx* um, const cplx* un, const PlaneWave& pw) {
  const GridSpec& g = kernel.grid;
  ComplexField x(g);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      const std::size_t k = g.index(i, j);
      x.values[k] = std::conj(um[k]) * un[k] * std::conj(pw(i, j));
    }
  convolve_in_place(kernel, x.data());
  return x;
}

// Upper bound of |kernel * f| for any f with integral of |f| <= 1.
double kernel_sup(const ScreenedKernel& kernel) {
  double s = 0.0;
  for (double v : kernel.kernel_k.values) s += std::abs(v);
  return s / (kernel.grid.lx() * kernel.grid.ly());
}

std::vector<const cplx*> envelope_ptrs(const SystemState& s) {
  std::vector<const cplx*> p;
  for (const auto& o : s.orbitals) p.push_back(o.envelope.data());
  return p;
}

}  // namespace

void SystemState::validate() const {
  if (orbitals.empty()) throw ConfigError("state: no orbitals");
  const GridSpec& g = orbitals.front().grid();
  for (std::size_t n = 0; n < orbitals.size(); ++n) {
    if (!(orbitals[n].grid() == g)) throw ConfigError("state: orbitals do not share one grid");
    for (const cplx& v : orbitals[n].envelope.values) {
      if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) {
        throw ConfigError("state: orbital " + std::to_string(n) + " has non-finite values");
      }
    }
  }
  if (spin_mode == SpinMode::Polarized) {
    for (const auto& o : orbitals) {
      if (o.spin != orbitals.front().spin) throw ConfigError("state: polarized mode needs equal spins");
    }
  } else if (orbitals.size() == 2 && orbitals[0].spin == orbitals[1].spin) {
    throw ConfigError("state: unpolarized mode needs opposite spins");
  }
  for (std::size_t n = 0; n < orbitals.size(); ++n)
    for (std::size_t m = n + 1; m < orbitals.size(); ++m) {
      if (!same_spin_pair(*this, n, m)) continue;
      const double nn = norm_squared(orbitals[n]), mm = norm_squared(orbitals[m]);
      const double ov = std::abs(inner_product(orbitals[n], orbitals[m]));
      if (ov > (1.0 - 1e-9) * std::sqrt(nn * mm)) {
        throw ConfigError("state: same-spin orbitals " + std::to_string(n) + " and " + std::to_string(m) +
                          " are linearly dependent; the antisymmetrized pair vanishes");
      }
    }
}

void PropagatorConfig::validate() const {
  if (!(dt >= 0.0)) throw ConfigError("propagation: dt must be positive (or 0 for automatic)");
  if (!std::isfinite(t_end)) throw ConfigError("propagation: t_end must be finite");
  if (!(cap_width_x >= 0.0) || !(cap_width_y >= 0.0)) throw ConfigError("propagation: cap width must be >= 0");
  if (!(cap_strength >= 0.0)) throw ConfigError("propagation: cap strength must be >= 0");
  if (snapshot_stride < 1) throw ConfigError("propagation: snapshot_stride must be >= 1");
  if (!(safety > 0.0 && safety <= 1.0)) throw ConfigError("propagation: safety must lie in (0, 1]");
}

Engine::Engine(const FieldProvider& provider, const ScreenedKernel& kernel, PropagatorConfig config,
               EngineOptions options)
    : provider_(provider), kernel_(kernel), config_(config), options_(std::move(options)) {
  config_.validate();
  if (!(provider_.grid() == kernel_.grid)) throw ConfigError("engine: field and kernel grids differ");
  if (2.0 * config_.cap_width_x >= kernel_.grid.lx() || 2.0 * config_.cap_width_y >= kernel_.grid.ly()) {
    throw ConfigError("engine: absorbing layers cover the whole domain");
  }
  cap_ = cap_potential();
}

RealField Engine::cap_potential() const {
  const GridSpec& g = kernel_.grid;
  auto ramp = [&](int i, int n, double h, double width) {
    if (width <= 0.0) return 0.0;
    const double d = std::min(i + 0.5, n - i - 0.5) * h;
    if (d >= width) return 0.0;
    const double s = (width - d) / width;
    return config_.cap_strength * s * s * s * s;
  };
  RealField w(g);
  for (int j = 0; j < g.ny; ++j) {
    const double wy = ramp(j, g.ny, g.dy, config_.cap_width_y);
    for (int i = 0; i < g.nx; ++i) w(i, j) = wy + ramp(i, g.nx, g.dx, config_.cap_width_x);
  }
  return w;
}

double Engine::stability_bound(const SystemState& state, double t0, double t1) const {
  const GridSpec& g = kernel_.grid;
  double wmax = 0.0;
  if (options_.kinetic) {
    for (const auto& o : state.orbitals) {
      double xlo = 0.0, xhi = 0.0, ylo = 0.0, yhi = 0.0;
      for (int i = 0; i < g.nx; ++i) {
        const double q = g.kx(i), t = 0.5 * q * q + o.carrier_k.x * q;
        xlo = std::min(xlo, t);
        xhi = std::max(xhi, t);
      }
      for (int j = 0; j < g.ny; ++j) {
        const double q = g.ky(j), t = 0.5 * q * q + o.carrier_k.y * q;
        ylo = std::min(ylo, t);
        yhi = std::max(yhi, t);
      }
      wmax = std::max({wmax, std::abs(xlo + ylo), std::abs(xhi + yhi)});
    }
  }
  const FieldBounds fb = provider_.bounds(t0, t1);
  const double qmax = std::hypot(std::numbers::pi / g.dx, std::numbers::pi / g.dy);
  wmax += fb.a_max * qmax + fb.phi_max;
  const double others = static_cast<double>(state.orbitals.size()) - 1.0;
  wmax += std::abs(options_.interaction_scale) * 2.0 * others * kernel_sup(kernel_);
  return wmax > 0.0 ? 1.0 / wmax : std::numeric_limits<double>::infinity();
}

double Engine::resolve_dt(const SystemState& state) const {
  const double bound = stability_bound(state, state.time, std::max(state.time, config_.t_end));
  if (config_.dt > 0.0) {
    if (config_.dt > bound) {
      throw ConfigError("propagation: dt = " + std::to_string(config_.dt) + " exceeds the stability bound " +
                        std::to_string(bound));
    }
    return config_.dt;
  }
  if (!std::isfinite(bound)) throw ConfigError("propagation: no dynamics to bound the step; set dt explicitly");
  return config_.safety * bound;
}

void Engine::rhs_into(const std::vector<const cplx*>& u, const FieldSample& field, const SystemState& layout,
                      std::vector<ComplexField>& out) const {
  const GridSpec& g = kernel_.grid;
  const std::size_t n_orb = u.size();
  const std::size_t npts = g.size();
  auto prescribed = [&](std::size_t n) { return n < options_.prescribed_volkov.size() && options_.prescribed_volkov[n]; };
  const double scale = options_.interaction_scale;
  const bool interact = scale != 0.0 && n_orb > 1;

  // Kinetic and A.q, diagonal in momentum space.
  for (std::size_t n = 0; n < n_orb; ++n) {
    ComplexField& o = out[n];
    if (prescribed(n) || (!options_.kinetic && field.a == Vec2{})) {
      std::fill(o.values.begin(), o.values.end(), cplx{});
      continue;
    }
    std::copy(u[n], u[n] + npts, o.values.begin());
    fft_forward(o);
    const Vec2 k = layout.orbitals[n].carrier_k;
    for (int j = 0; j < g.ny; ++j) {
      const double qy = g.ky(j);
      for (int i = 0; i < g.nx; ++i) {
        const double qx = g.kx(i);
        double m = field.a.x * qx + field.a.y * qy;
        if (options_.kinetic) m += 0.5 * (qx * qx + qy * qy) + k.x * qx + k.y * qy;
        o(i, j) *= m;
      }
    }
    fft_inverse(o);
  }

  // Local potentials: -phi and the Hartree fields of the other orbitals.
  std::vector<RealField> vh;
  if (interact) vh = hartree_all(kernel_, u);
  for (std::size_t n = 0; n < n_orb; ++n) {
    if (prescribed(n)) continue;
    ComplexField& o = out[n];
    for (std::size_t k = 0; k < npts; ++k) {
      double v = field.phi ? -field.phi->values[k] : 0.0;
      if (interact) {
        double h = 0.0;
        for (std::size_t m = 0; m < n_orb; ++m)
          if (m != n) h += vh[m].values[k];
        v += scale * h;
      }
      o.values[k] += v * u[n][k];
    }
  }

  // Exchange between same-spin pairs; one convolution serves both equations.
  if (interact && options_.exchange) {
    for (std::size_t n = 0; n < n_orb; ++n)
      for (std::size_t m = n + 1; m < n_orb; ++m) {
        if (!same_spin_pair(layout, n, m) || (prescribed(n) && prescribed(m))) continue;
        const PlaneWave pw(g, layout.orbitals[m].carrier_k - layout.orbitals[n].carrier_k);
        const ComplexField x = exchange_convolution(kernel_, u[m], u[n], pw);
        for (int j = 0; j < g.ny; ++j)
          for (int i = 0; i < g.nx; ++i) {
            const std::size_t k = g.index(i, j);
            const cplx e = pw(i, j);
            if (!prescribed(n)) out[n].values[k] -= scale * e * x.values[k] * u[m][k];
            if (!prescribed(m)) out[m].values[k] -= scale * std::conj(e * x.values[k]) * u[n][k];
          }
      }
  }

  for (auto& o : out)
    for (auto& v : o.values) v *= -kI;
}

std::vector<ComplexField> Engine::rhs(const SystemState& state, const FieldSample& field) const {
  state.validate();
  if (!(state.grid() == kernel_.grid)) throw std::invalid_argument("rhs: state and kernel grids differ");
  if (field.phi && !(field.phi->grid == kernel_.grid)) throw std::invalid_argument("rhs: field grid differs");
  std::vector<ComplexField> out(state.orbitals.size(), ComplexField(kernel_.grid));
  rhs_into(envelope_ptrs(state), field, state, out);
  // Add back the uniform A.k_n term that step() integrates exactly.
  for (std::size_t n = 0; n < out.size(); ++n) {
    const double ak = dot(field.a, state.orbitals[n].carrier_k);
    const cplx* u = state.orbitals[n].envelope.data();
    for (std::size_t k = 0; k < out[n].size(); ++k) out[n].values[k] -= kI * ak * u[k];
  }
  for (const auto& o : out)
    for (const auto& v : o.values)
      if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) throw NumericalError("rhs: non-finite value");
  return out;
}

void Engine::step(SystemState& state, double dt) const {
  if (!(state.grid() == kernel_.grid)) throw std::invalid_argument("step: state and kernel grids differ");
  if (!(dt > 0.0)) throw std::invalid_argument("step: dt must be positive");
  const double t = state.time;
  const std::size_t n_orb = state.orbitals.size();
  const std::size_t npts = kernel_.grid.size();

  std::vector<ComplexField> k1(n_orb, ComplexField(kernel_.grid)), acc(n_orb, ComplexField(kernel_.grid)),
      y(n_orb, ComplexField(kernel_.grid));
  std::vector<const cplx*> y0 = envelope_ptrs(state), yp(n_orb);
  for (std::size_t n = 0; n < n_orb; ++n) yp[n] = y[n].data();

  // acc collects k1 + 2 k2 + 2 k3 + k4.
  auto stage = [&](const std::vector<const cplx*>& in, double ts, double weight, double next_coef, bool first) {
    const FieldSample f = provider_.sample(ts);
    rhs_into(in, f, state, k1);
    for (std::size_t n = 0; n < n_orb; ++n) {
      cplx* a = acc[n].data();
      cplx* yn = y[n].data();
      const cplx* kn = k1[n].data();
      const cplx* base = y0[n];
      for (std::size_t k = 0; k < npts; ++k) {
        a[k] = first ? kn[k] : a[k] + weight * kn[k];
        if (next_coef != 0.0) yn[k] = base[k] + next_coef * kn[k];
      }
    }
  };
  stage(y0, t, 1.0, 0.5 * dt, true);
  stage(yp, t + 0.5 * dt, 2.0, 0.5 * dt, false);
  stage(yp, t + 0.5 * dt, 2.0, dt, false);
  stage(yp, t + dt, 1.0, 0.0, false);

  const Vec2 a_int = provider_.vector_potential_integral(t, t + dt);
  for (std::size_t n = 0; n < n_orb; ++n) {
    Wavepacket& o = state.orbitals[n];
    const cplx phase = std::polar(1.0, -dot(o.carrier_k, a_int));
    cplx* e = o.envelope.data();
    const cplx* a = acc[n].data();
    double sum = 0.0;
    for (std::size_t k = 0; k < npts; ++k) {
      e[k] = (e[k] + (dt / 6.0) * a[k]) * phase;
      if (config_.cap_strength > 0.0 && cap_.values[k] > 0.0) e[k] *= std::exp(-dt * cap_.values[k]);
      sum += std::norm(e[k]);
    }
    if (!std::isfinite(sum)) {
      throw NumericalError("step: orbital " + std::to_string(n) + " became non-finite at t = " +
                           std::to_string(t + dt) + " (step too large or unstable input)");
    }
  }
  state.time = t + dt;
}

RunSummary Engine::run(SystemState& state, const SnapshotSink& sink) const {
  state.validate();
  if (!(state.grid() == kernel_.grid)) throw ConfigError("run: state and kernel grids differ");
  if (config_.t_end < state.time) throw ConfigError("run: t_end lies before the initial time");
  const auto start = std::chrono::steady_clock::now();
  RunSummary summary;
  const double t0 = state.time;
  const double span = config_.t_end - t0;
  std::size_t n_steps = 0;
  double dt = 0.0;
  if (span > 0.0) {
    const double dt_max = resolve_dt(state);
    n_steps = static_cast<std::size_t>(std::ceil(span / dt_max * (1.0 - 1e-12)));
    n_steps = std::max<std::size_t>(n_steps, 1);
    dt = span / static_cast<double>(n_steps);
  }
  summary.dt = dt;

  auto emit = [&](std::size_t s) {
    summary.snapshot_times.push_back(state.time);
    std::vector<double> norms;
    for (const auto& o : state.orbitals) norms.push_back(norm_squared(o));
    summary.norms.push_back(std::move(norms));
    if (sink) sink(s, state);
  };
  emit(0);
  for (std::size_t s = 1; s <= n_steps; ++s) {
    step(state, dt);
    if (s == n_steps) state.time = config_.t_end;
    if (s % static_cast<std::size_t>(config_.snapshot_stride) == 0 || s == n_steps) emit(s);
  }
  summary.steps = n_steps;
  summary.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return summary;
}

double energy_functional(const SystemState& state, const ScreenedKernel& kernel, double interaction_scale) {
  const GridSpec& g = state.grid();
  const double weight = g.cell_area() / static_cast<double>(g.size());
  double e = 0.0;
  for (const auto& o : state.orbitals) {
    ComplexField f = o.envelope;
    fft_forward(f);
    double t = 0.0;
    for (int j = 0; j < g.ny; ++j)
      for (int i = 0; i < g.nx; ++i) {
        const double px = g.kx(i) + o.carrier_k.x, py = g.ky(j) + o.carrier_k.y;
        t += 0.5 * (px * px + py * py) * std::norm(f(i, j));
      }
    e += t * weight;
  }
  const std::size_t n_orb = state.orbitals.size();
  if (n_orb < 2 || interaction_scale == 0.0) return e;
  const auto u = envelope_ptrs(state);
  const auto vh = hartree_all(kernel, u);
  double inter = 0.0;
  for (std::size_t n = 0; n < n_orb; ++n)
    for (std::size_t m = 0; m < n_orb; ++m) {
      if (m == n) continue;
      double j_nm = 0.0;
      for (std::size_t k = 0; k < g.size(); ++k) j_nm += std::norm(u[n][k]) * vh[m].values[k];
      inter += j_nm * g.cell_area();
      if (n < m && same_spin_pair(state, n, m)) {
        // <n|v^x_nm|m> = -int conj(f) (kernel * f) with f = conj(u_m) u_n exp(-i dk.r);
        // real, and the same for the (m, n) term.
        const PlaneWave pw(g, state.orbitals[m].carrier_k - state.orbitals[n].carrier_k);
        const ComplexField x = exchange_convolution(kernel, u[m], u[n], pw);
        cplx kx = 0.0;
        for (int j = 0; j < g.ny; ++j)
          for (int i = 0; i < g.nx; ++i) {
            const std::size_t k = g.index(i, j);
            kx += std::conj(u[n][k]) * u[m][k] * pw(i, j) * x.values[k];
          }
        inter -= 2.0 * kx.real() * g.cell_area();
      }
    }
  return e + 0.5 * interaction_scale * inter;
}

Vec2 total_momentum(const SystemState& state) {
  const GridSpec& g = state.grid();
  const double weight = g.cell_area() / static_cast<double>(g.size());
  Vec2 p;
  for (const auto& o : state.orbitals) {
    ComplexField f = o.envelope;
    fft_forward(f);
    double px = 0.0, py = 0.0, nn = 0.0;
    for (int j = 0; j < g.ny; ++j)
      for (int i = 0; i < g.nx; ++i) {
        const double w = std::norm(f(i, j));
        px += g.kx(i) * w;
        py += g.ky(j) * w;
        nn += w;
      }
    p = p + Vec2{weight * px + o.carrier_k.x * weight * nn, weight * py + o.carrier_k.y * weight * nn};
  }
  return p;
}

}  // namespace tdhf
