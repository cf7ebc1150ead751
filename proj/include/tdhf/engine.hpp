#pragma once

#include <functional>
#include <vector>

#include "tdhf/coulomb.hpp"
#include "tdhf/em_sources.hpp"
#include "tdhf/wavepacket.hpp"

namespace tdhf {

enum class SpinMode { Polarized, Unpolarized };

struct SystemState {
  std::vector<Wavepacket> orbitals;
  double time = 0.0;
  SpinMode spin_mode = SpinMode::Polarized;

  const GridSpec& grid() const { return orbitals.front().grid(); }
  /// Shared grid, spins consistent with the mode, finite values, and no two
  /// same-spin orbitals linearly dependent. Throws ConfigError.
  void validate() const;
};

struct PropagatorConfig {
  /// Time step; 0 selects safety * stability_bound.
  double dt = 0.0;
  double t_end = 0.0;
  /// Absorbing layer thickness on each side, per axis.
  double cap_width_x = 0.0;
  double cap_width_y = 0.0;
  /// Peak of the absorbing potential W at the domain edge.
  double cap_strength = 0.0;
  int snapshot_stride = 1;
  double safety = 0.5;

  void validate() const;
};

/// Switches for test runs. The defaults give the physical equations.
struct EngineOptions {
  bool kinetic = true;
  /// false deletes the exchange term from the code path.
  bool exchange = true;
  /// Scales both the Hartree and the exchange coupling.
  double interaction_scale = 1.0;
  /// Orbitals listed here only pick up the uniform-field phase exp(-i int k.A),
  /// i.e. they follow a prescribed Volkov solution.
  std::vector<bool> prescribed_volkov;
};

struct RunSummary {
  std::size_t steps = 0;
  double dt = 0.0;
  std::vector<double> snapshot_times;
  /// norms[s][n]: squared norm of orbital n at snapshot s.
  std::vector<std::vector<double>> norms;
  double wall_seconds = 0.0;
};

/// Called with each snapshot (step index, state).
using SnapshotSink = std::function<void(std::size_t, const SystemState&)>;

/// Propagates envelopes psi_n under
///   i d/dt psi_n = [T_n + A.(q + k_n) - phi + sum_{m != n} v^H_m] psi_n
///                  + sum_{m != n, same spin} v^x_nm psi_m,
/// T_n = (q^2 + 2 k_n . q) / 2 with q the envelope momentum. The uniform
/// A.k_n part is a pure phase per orbital that drops out of the exchange
/// term, so it is applied exactly; the rest goes through classical RK4,
/// followed by the absorbing mask exp(-dt W).
class Engine {
 public:
  Engine(const FieldProvider& provider, const ScreenedKernel& kernel, PropagatorConfig config,
         EngineOptions options = {});

  /// Largest stable step for this state over [t0, t1]: 1 / omega_max with
  /// omega_max bounding the spectral radius of the reduced generator.
  double stability_bound(const SystemState& state, double t0, double t1) const;

  /// d/dt of every envelope under the full equation above.
  std::vector<ComplexField> rhs(const SystemState& state, const FieldSample& field) const;

  /// One step of size dt. The step is not checked against the bound here;
  /// run() does that. Throws NumericalError on non-finite output.
  void step(SystemState& state, double dt) const;

  /// Advances to config.t_end, calling sink on the initial state and every
  /// snapshot_stride steps (and on the final state).
  RunSummary run(SystemState& state, const SnapshotSink& sink) const;

  /// Step actually used by run() for this state.
  double resolve_dt(const SystemState& state) const;

  const PropagatorConfig& config() const { return config_; }
  const EngineOptions& options() const { return options_; }

 private:
  void rhs_into(const std::vector<const cplx*>& u, const FieldSample& field, const SystemState& layout,
                std::vector<ComplexField>& out) const;
  RealField cap_potential() const;

  const FieldProvider& provider_;
  const ScreenedKernel& kernel_;
  PropagatorConfig config_;
  EngineOptions options_;
  RealField cap_;
};

/// Hartree-Fock energy sum_n <|q + k_n|^2 / 2> + 1/2 sum_{n != m} (J_nm - K_nm delta_spin),
/// without external fields.
double energy_functional(const SystemState& state, const ScreenedKernel& kernel, double interaction_scale = 1.0);

/// sum_n <q + k_n>.
Vec2 total_momentum(const SystemState& state);

}  // namespace tdhf
