#include "tdhf/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <set>
#include <sstream>

#include "tdhf/container.hpp"
#include "tdhf/errors.hpp"
#include "tdhf/units.hpp"

namespace tdhf {

using nlohmann::json;
using namespace units;

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

/// Path-aware view of a JSON object for field-precise error messages.
class Obj {
 public:
  Obj(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(where() + ": expected an object");
  }

  std::string at(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
  std::string where() const { return path_.empty() ? "config" : path_; }
  bool has(const char* key) const { return j_.contains(key) && !j_.at(key).is_null(); }

  void allow(std::initializer_list<const char*> keys) const {
    const std::set<std::string> ok(keys.begin(), keys.end());
    for (const auto& [k, v] : j_.items()) {
      if (!ok.count(k)) throw ConfigError(at(k) + ": unknown field");
    }
  }

  const json& raw(const char* key) const {
    if (!has(key)) throw ConfigError(at(key) + ": required field missing");
    return j_.at(key);
  }

  double num(const char* key) const {
    const json& v = raw(key);
    if (!v.is_number()) throw ConfigError(at(key) + ": expected a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) throw ConfigError(at(key) + ": must be finite");
    return d;
  }
  double num(const char* key, double def) const { return has(key) ? num(key) : def; }
  double positive(const char* key) const {
    const double d = num(key);
    if (!(d > 0.0)) throw ConfigError(at(key) + ": must be positive");
    return d;
  }
  double non_negative(const char* key, double def) const {
    const double d = num(key, def);
    if (!(d >= 0.0)) throw ConfigError(at(key) + ": must not be negative");
    return d;
  }
  int integer(const char* key) const {
    const json& v = raw(key);
    if (!v.is_number_integer()) throw ConfigError(at(key) + ": expected an integer");
    return v.get<int>();
  }
  int integer(const char* key, int def) const { return has(key) ? integer(key) : def; }
  bool boolean(const char* key, bool def) const {
    if (!has(key)) return def;
    const json& v = j_.at(key);
    if (!v.is_boolean()) throw ConfigError(at(key) + ": expected true or false");
    return v.get<bool>();
  }
  std::string str(const char* key) const {
    const json& v = raw(key);
    if (!v.is_string()) throw ConfigError(at(key) + ": expected a string");
    return v.get<std::string>();
  }
  std::string str(const char* key, const std::string& def) const { return has(key) ? str(key) : def; }
  Vec2 vec2(const char* key) const {
    const json& v = raw(key);
    if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) {
      throw ConfigError(at(key) + ": expected [x, y]");
    }
    return {v[0].get<double>(), v[1].get<double>()};
  }
  Vec2 vec2(const char* key, Vec2 def) const { return has(key) ? vec2(key) : def; }
  Obj child(const char* key) const { return Obj(raw(key), at(key)); }

 private:
  const json& j_;
  std::string path_;
};

Spin parse_spin(const Obj& o, const char* key, Spin def) {
  if (!o.has(key)) return def;
  const std::string s = o.str(key);
  if (s == "up") return Spin::Up;
  if (s == "down") return Spin::Down;
  throw ConfigError(o.at(key) + ": expected \"up\" or \"down\"");
}

/// Converts the energy fields of a visibility summary to eV.
void energies_to_eV(json& v) {
  for (auto& b : v["band"]) b = hartree_to_eV(b.get<double>());
  if (v.contains("peak_energies")) {
    for (auto& e : v["peak_energies"]) e = hartree_to_eV(e.get<double>());
  }
}

std::string four(std::size_t i) {
  std::ostringstream s;
  s << std::setw(4) << std::setfill('0') << i;
  return s.str();
}


}  // namespace

double RunConfig::photon_omega() const { return laser_enabled ? laser.omega() : 0.0; }

void apply_override(json& doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ConfigError("override '" + assignment + "': expected key=value");
  }
  const std::string key = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  json value = json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;

  json* node = &doc;
  std::string walked;
  std::size_t pos = 0;
  while (true) {
    const auto dot = key.find('.', pos);
    const std::string part = key.substr(pos, dot == std::string::npos ? std::string::npos : dot - pos);
    if (part.empty()) throw ConfigError("override '" + assignment + "': empty path component");
    const bool last = dot == std::string::npos;
    walked += (walked.empty() ? "" : ".") + part;
    if (node->is_array()) {
      std::size_t idx = 0;
      try {
        std::size_t used = 0;
        idx = std::stoul(part, &used);
        if (used != part.size()) throw std::invalid_argument("index");
      } catch (const std::exception&) {
        throw ConfigError("override '" + assignment + "': '" + walked + "' must be an array index");
      }
      if (idx >= node->size()) throw ConfigError("override '" + assignment + "': index out of range at " + walked);
      node = &(*node)[idx];
    } else if (node->is_object()) {
      if (!last && !node->contains(part)) {
        throw ConfigError("override '" + assignment + "': no field '" + walked + "'");
      }
      node = &(*node)[part];
    } else {
      throw ConfigError("override '" + assignment + "': '" + walked + "' is not inside an object or array");
    }
    if (last) break;
    pos = dot + 1;
  }
  *node = std::move(value);
}

RunConfig parse_config(const json& doc) {
  const Obj top(doc, "");
  top.allow({"schema_version", "name", "description", "units", "grid", "electrons", "spin_mode", "laser", "rod",
             "field_series", "interaction", "propagation", "observables", "output_dir"});
  if (top.integer("schema_version") != kSchemaVersion) {
    throw ConfigError("schema_version: unsupported version (expected " + std::to_string(kSchemaVersion) + ")");
  }
  if (top.str("units") != "lab") throw ConfigError("units: only \"lab\" (nm, fs, eV, V/m, degrees) is supported");

  RunConfig c;
  c.source = doc;
  c.name = top.str("name", "run");

  {
    const Obj g = top.child("grid");
    g.allow({"nx", "ny", "dx_nm", "dy_nm", "x0_nm", "y0_nm"});
    c.grid.nx = g.integer("nx");
    c.grid.ny = g.integer("ny");
    c.grid.dx = nm_to_bohr(g.positive("dx_nm"));
    c.grid.dy = nm_to_bohr(g.positive("dy_nm"));
    c.grid.x0 = nm_to_bohr(g.num("x0_nm", -0.5 * c.grid.nx * g.num("dx_nm")));
    c.grid.y0 = nm_to_bohr(g.num("y0_nm", -0.5 * c.grid.ny * g.num("dy_nm")));
    try {
      c.grid.validate();
    } catch (const ConfigError& e) {
      throw ConfigError(std::string("grid: ") + e.what());
    }
  }

  const std::string mode = top.str("spin_mode", "polarized");
  if (mode == "polarized") {
    c.spin_mode = SpinMode::Polarized;
  } else if (mode == "unpolarized") {
    c.spin_mode = SpinMode::Unpolarized;
  } else {
    throw ConfigError("spin_mode: expected \"polarized\" or \"unpolarized\"");
  }

  // Rod geometry first: impact parameters refer to it.
  bool rod_present = false;
  if (top.has("rod")) {
    const Obj r = top.child("rod");
    r.allow({"enabled", "radius_nm", "center_nm", "eps_inf", "plasma_energy_eV", "damping_eV"});
    rod_present = true;
    c.rod_enabled = r.boolean("enabled", true);
    c.rod.radius = nm_to_bohr(r.positive("radius_nm"));
    const Vec2 cn = r.vec2("center_nm", {0.0, 0.0});
    c.rod.center = {nm_to_bohr(cn.x), nm_to_bohr(cn.y)};
    c.metal.eps_inf = r.num("eps_inf", 9.0);
    c.metal.omega_p = eV_to_hartree(r.num("plasma_energy_eV", 9.0));
    c.metal.gamma = eV_to_hartree(r.num("damping_eV", 0.07));
    try {
      c.metal.validate();
    } catch (const ConfigError& e) {
      throw ConfigError(std::string("rod: ") + e.what());
    }
  }

  {
    const json& arr = top.raw("electrons");
    if (!arr.is_array() || arr.empty()) throw ConfigError("electrons: expected a non-empty array");
    if (arr.size() > 4) throw ConfigError("electrons: at most four electrons are supported");
    for (std::size_t n = 0; n < arr.size(); ++n) {
      const Obj e(arr[n], "electrons[" + std::to_string(n) + "]");
      e.allow({"x_nm", "y_nm", "impact_parameter_nm", "fwhm_long_nm", "fwhm_trans_nm", "kinetic_energy_eV",
               "direction", "spin", "label"});
      ElectronConfig ec;
      ec.center.x = nm_to_bohr(e.num("x_nm"));
      if (e.has("y_nm") == e.has("impact_parameter_nm")) {
        throw ConfigError(e.where() + ": give exactly one of y_nm or impact_parameter_nm");
      }
      if (e.has("impact_parameter_nm")) {
        if (!rod_present) throw ConfigError(e.at("impact_parameter_nm") + ": needs a rod section");
        ec.impact_parameter = nm_to_bohr(e.positive("impact_parameter_nm"));
        ec.center.y = c.rod.center.y + c.rod.radius + *ec.impact_parameter;
      } else {
        ec.center.y = nm_to_bohr(e.num("y_nm"));
      }
      ec.fwhm_long = nm_to_bohr(e.positive("fwhm_long_nm"));
      ec.fwhm_trans = nm_to_bohr(e.positive("fwhm_trans_nm"));
      ec.kinetic_energy = eV_to_hartree(e.positive("kinetic_energy_eV"));
      ec.direction = e.vec2("direction", {1.0, 0.0});
      if (!(norm(ec.direction) > 0.0)) throw ConfigError(e.at("direction") + ": must be nonzero");
      const Spin def = c.spin_mode == SpinMode::Polarized || n % 2 == 0 ? Spin::Up : Spin::Down;
      ec.spin = parse_spin(e, "spin", def);
      ec.label = e.str("label", "electron" + std::to_string(n + 1));
      c.electrons.push_back(ec);
    }
  }

  if (top.has("laser")) {
    const Obj l = top.child("laser");
    l.allow({"enabled", "wavelength_nm", "fwhm_fs", "peak_field_V_per_m", "polarization", "t_center_fs", "delay_fs"});
    c.laser_enabled = l.boolean("enabled", true);
    c.laser.wavelength = nm_to_bohr(l.positive("wavelength_nm"));
    c.laser.fwhm_duration = fs_to_au(l.positive("fwhm_fs"));
    c.laser.peak_field = V_per_m_to_au(l.non_negative("peak_field_V_per_m", 0.0));
    c.laser.polarization = l.vec2("polarization", {1.0, 0.0});
    if (l.has("t_center_fs")) {
      if (l.has("delay_fs")) throw ConfigError(l.where() + ": give at most one of t_center_fs and delay_fs");
      c.laser.t_center = fs_to_au(l.num("t_center_fs"));
    } else {
      // Peak when the first electron passes the rod (or x = 0), plus a delay.
      // The delay sets the optical phase seen by the packet centre.
      const ElectronConfig& e0 = c.electrons.front();
      const double v = electron_speed(e0.kinetic_energy);
      const double target = rod_present ? c.rod.center.x : 0.0;
      c.laser.t_center = (target - e0.center.x) / (v * e0.direction.x / norm(e0.direction)) +
                         fs_to_au(l.num("delay_fs", 0.0));
    }
    try {
      c.laser.validate();
    } catch (const ConfigError& e) {
      throw ConfigError(std::string("laser: ") + e.what());
    }
  }

  if (top.has("field_series")) {
    c.field_series = std::filesystem::path(top.str("field_series"));
    if (c.laser_enabled || c.rod_enabled) {
      throw ConfigError("field_series: cannot be combined with an enabled laser or rod section");
    }
  }

  {
    const Obj i = top.has("interaction") ? top.child("interaction") : Obj(json::object(), "interaction");
    i.allow({"scale", "exchange", "confinement_nm", "zero_mode"});
    c.interaction_scale = i.num("scale", 1.0);
    c.exchange = i.boolean("exchange", true);
    c.confinement = i.has("confinement_nm") ? nm_to_bohr(i.positive("confinement_nm")) : c.electrons.front().fwhm_trans;
    const std::string zm = i.str("zero_mode", "image_free");
    if (zm == "image_free") {
      c.zero_mode = ZeroMode::ImageFree;
    } else if (zm == "domain_integral") {
      c.zero_mode = ZeroMode::DomainIntegral;
    } else {
      throw ConfigError("interaction.zero_mode: expected \"image_free\" or \"domain_integral\"");
    }
  }

  {
    const Obj p = top.child("propagation");
    p.allow({"t_start_fs", "t_end_fs", "dt_fs", "safety", "cap_width_x_nm", "cap_width_y_nm", "cap_strength_eV",
             "snapshot_stride", "snapshot_count", "orthogonalize"});
    c.t_start = fs_to_au(p.num("t_start_fs", 0.0));
    c.propagation.t_end = fs_to_au(p.num("t_end_fs"));
    if (!(c.propagation.t_end > c.t_start)) throw ConfigError(p.at("t_end_fs") + ": must exceed t_start_fs");
    c.propagation.dt = fs_to_au(p.non_negative("dt_fs", 0.0));
    c.propagation.safety = p.num("safety", 0.5);
    c.propagation.cap_width_x = nm_to_bohr(p.non_negative("cap_width_x_nm", 0.0));
    c.propagation.cap_width_y = nm_to_bohr(p.non_negative("cap_width_y_nm", 0.0));
    c.propagation.cap_strength = eV_to_hartree(p.non_negative("cap_strength_eV", 0.0));
    if (p.has("snapshot_stride") && p.has("snapshot_count")) {
      throw ConfigError(p.where() + ": give at most one of snapshot_stride and snapshot_count");
    }
    c.propagation.snapshot_stride = p.integer("snapshot_stride", 1);
    c.snapshot_count = p.integer("snapshot_count", 0);
    if (c.snapshot_count < 0) throw ConfigError(p.at("snapshot_count") + ": must not be negative");
    c.orthogonalize = p.boolean("orthogonalize", false);
    try {
      c.propagation.validate();
    } catch (const ConfigError& e) {
      throw ConfigError(std::string(e.what()));
    }
  }

  {
    const Obj o = top.has("observables") ? top.child("observables") : Obj(json::object(), "observables");
    o.allow({"acceptance_deg", "energy_bin_eV", "energy_span_eV", "angle_bins", "momentum_pad", "slices",
             "store_orbitals", "visibility_band_photons", "visibility_peaks"});
    auto& ob = c.observables;
    ob.acceptance = o.num("acceptance_deg", 10.0) * kDeg;
    const double photon = c.photon_omega();
    ob.energy_bin = o.has("energy_bin_eV") ? eV_to_hartree(o.positive("energy_bin_eV"))
                                           : (photon > 0.0 ? photon / 8.0 : eV_to_hartree(0.1));
    ob.energy_span = eV_to_hartree(o.num("energy_span_eV", 40.0));
    if (!(ob.energy_span > 0.0)) throw ConfigError(o.at("energy_span_eV") + ": must be positive");
    ob.angle_bins = o.integer("angle_bins", 16);
    ob.momentum_pad = o.integer("momentum_pad", 1);
    ob.store_orbitals = o.boolean("store_orbitals", true);
    ob.visibility_peaks = o.integer("visibility_peaks", 5);
    if (o.has("visibility_band_photons")) {
      const Vec2 b = o.vec2("visibility_band_photons");
      if (!(b.y - b.x >= 2.0)) throw ConfigError(o.at("visibility_band_photons") + ": band must span >= 2 photons");
      ob.band_lo = b.x;
      ob.band_hi = b.y;
    }
    std::vector<Space> slices{Space::Real, Space::Momentum};
    if (o.has("slices")) {
      slices.clear();
      const json& s = o.raw("slices");
      if (!s.is_array()) throw ConfigError(o.at("slices") + ": expected an array");
      for (const auto& v : s) {
        if (v == "real") {
          slices.push_back(Space::Real);
        } else if (v == "momentum") {
          slices.push_back(Space::Momentum);
        } else {
          throw ConfigError(o.at("slices") + ": entries must be \"real\" or \"momentum\"");
        }
      }
    }
    ob.slices = slices;
    if (!ob.slices.empty() && c.electrons.size() != 2) {
      throw ConfigError(o.at("slices") + ": pair densities need exactly two electrons");
    }
    SpectrumBins probe{0.0, 1.0, ob.energy_bin, ob.angle_bins, ob.acceptance, ob.momentum_pad};
    try {
      probe.validate();
    } catch (const ConfigError& e) {
      throw ConfigError(std::string("observables: ") + e.what());
    }
  }

  c.output_dir = top.str("output_dir", "runs/" + c.name);

  // Cross-field checks that do not need the field solver.
  for (std::size_t n = 0; n < c.electrons.size(); ++n) {
    const ElectronConfig& e = c.electrons[n];
    if (c.laser_enabled) {
      const double kx = c.photon_omega() / electron_speed(e.kinetic_energy);
      if (!(kx < std::numbers::pi / c.grid.dx)) {
        throw ConfigError("electrons[" + std::to_string(n) + "]: phase-matched k_x = w/v lies beyond the grid's " +
                          "momentum range; reduce grid.dx_nm");
      }
    }
    try {
      (void)make_gaussian_wavepacket(c.grid, e.center, e.fwhm_long, e.fwhm_trans, e.kinetic_energy, e.direction,
                                     e.spin, e.label);
    } catch (const ConfigError& err) {
      throw ConfigError("electrons[" + std::to_string(n) + "]: " + err.what());
    }
  }
  if (c.spin_mode == SpinMode::Polarized) {
    for (const auto& e : c.electrons) {
      if (e.spin != c.electrons.front().spin) throw ConfigError("electrons: spin_mode polarized needs equal spins");
    }
  }
  return c;
}

RunConfig load_config(const std::filesystem::path& path, const std::vector<std::string>& overrides) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config file " + path.string());
  json doc = json::parse(in, nullptr, false);
  if (doc.is_discarded()) throw ConfigError(path.string() + ": not valid JSON");
  for (const auto& o : overrides) apply_override(doc, o);
  RunConfig c = parse_config(doc);
  // The step-size bound needs the field model and the initial state.
  (void)build_scenario(c);
  return c;
}

std::vector<std::string> preset_names() { return {"fig2_polarized", "fig4_unpolarized", "fig5_close"}; }

json preset_json(const std::string& name) {
  std::string base = name;
  bool paper = false;
  if (base.ends_with("_paper")) {
    paper = true;
    base.resize(base.size() - 6);
  } else if (base.ends_with("_desk")) {
    base.resize(base.size() - 5);
  }
  const auto names = preset_names();
  if (std::find(names.begin(), names.end(), base) == names.end()) {
    throw ConfigError("unknown preset '" + name + "'");
  }
  const bool polarized = base != "fig4_unpolarized";
  const double d2 = base == "fig5_close" ? 10.0 : 20.0;

  // Desk: 512 x 256 grid, field reduced tenfold, 10 fs. Paper: a grid
  // fine enough for +-60 photon sidebands and a longer run, at full field.
  const int nx = paper ? 4096 : 512;
  const int ny = paper ? 512 : 256;
  const double dx = paper ? 4.0 * bohr_nm : 16.0 * bohr_nm;
  const double dy = paper ? 2.0 * bohr_nm : 4.0 * bohr_nm;
  const double t_end = paper ? 14.0 : 10.0;
  json j = {
      {"schema_version", kSchemaVersion},
      {"name", (paper ? base + "_paper" : base + "_desk")},
      {"description", polarized ? "two same-spin electrons past a plasmonic gold rod"
                                : "two opposite-spin electrons past a plasmonic gold rod"},
      {"units", "lab"},
      {"grid", {{"nx", nx}, {"ny", ny}, {"dx_nm", dx}, {"dy_nm", dy}, {"x0_nm", -0.5 * nx * dx}, {"y0_nm", 7.0}}},
      {"spin_mode", polarized ? "polarized" : "unpolarized"},
      {"electrons",
       json::array({{{"x_nm", -80.0},
                     {"impact_parameter_nm", 5.0},
                     {"fwhm_long_nm", 33.2},
                     {"fwhm_trans_nm", 3.3},
                     {"kinetic_energy_eV", 1436.0},
                     {"spin", "up"}},
                    {{"x_nm", -80.0},
                     {"impact_parameter_nm", d2},
                     {"fwhm_long_nm", 33.2},
                     {"fwhm_trans_nm", 3.3},
                     {"kinetic_energy_eV", 1424.0},
                     {"spin", polarized ? "up" : "down"}}})},
      {"laser",
       {{"wavelength_nm", 800.0},
        {"fwhm_fs", 30.0},
        {"peak_field_V_per_m", paper ? 5e9 : 5e8},
        {"polarization", {1.0, 0.0}},
        // Half an optical period after the first electron passes the rod
        // centre; at this phase the resolved sidebands lie on the gain side.
        {"delay_fs", 0.5 * 800.0 / 299.792458}}},
      {"rod",
       {{"radius_nm", 15.0},
        {"center_nm", {0.0, 0.0}},
        {"eps_inf", 9.0},
        {"plasma_energy_eV", 9.0},
        {"damping_eV", 0.07}}},
      {"interaction", {{"scale", 1.0}, {"exchange", true}, {"confinement_nm", 3.3}}},
      {"propagation",
       {{"t_end_fs", t_end},
        {"cap_width_x_nm", 30.0},
        {"cap_width_y_nm", 3.0},
        {"cap_strength_eV", 1.0},
        {"snapshot_count", 4}}},
      {"observables",
       {{"acceptance_deg", 10.0},
        {"energy_span_eV", paper ? 110.0 : 40.0},
        {"angle_bins", 16},
        {"slices", {"real", "momentum"}},
        {"visibility_band_photons", {0.5, 5.5}}}},
      {"output_dir", "runs/" + (paper ? base + "_paper" : base + "_desk")},
  };
  if (paper) j["grid"]["y0_nm"] = 7.0;
  return j;
}

Scenario build_scenario(const RunConfig& config) {
  Scenario s;
  s.config = config;
  s.kernel = build_kernel(config.grid, config.confinement, config.zero_mode);
  if (config.field_series) {
    s.provider = load_field_series(*config.field_series, config.grid);
  } else if (config.laser_enabled && config.rod_enabled) {
    s.provider = std::make_unique<AnalyticPlasmonProvider>(config.grid, config.laser, config.metal, config.rod);
  } else if (config.laser_enabled) {
    s.provider = std::make_unique<AnalyticPlasmonProvider>(config.grid, config.laser);
  } else {
    s.provider = std::make_unique<ZeroFieldProvider>(config.grid);
  }

  for (const auto& e : config.electrons) {
    s.initial.orbitals.push_back(make_gaussian_wavepacket(config.grid, e.center, e.fwhm_long, e.fwhm_trans,
                                                          e.kinetic_energy, e.direction, e.spin, e.label));
  }
  s.initial.time = config.t_start;
  s.initial.spin_mode = config.spin_mode;
  if (config.orthogonalize && s.initial.orbitals.size() == 2 &&
      s.initial.orbitals[0].spin == s.initial.orbitals[1].spin) {
    auto ab = gram_schmidt({s.initial.orbitals[0], s.initial.orbitals[1]});
    s.initial.orbitals = {ab[0], ab[1]};
  }
  s.initial.validate();
  s.options = EngineOptions{true, config.exchange, config.interaction_scale, {}};

  const double span = config.propagation.t_end - config.t_start;
  const double dt = s.engine().resolve_dt(s.initial);
  if (config.snapshot_count > 0) {
    const auto steps = static_cast<long long>(std::ceil(span / dt * (1.0 - 1e-12)));
    s.config.propagation.snapshot_stride =
        static_cast<int>(std::max<long long>(1, (steps + config.snapshot_count - 1) / config.snapshot_count));
  }
  return s;
}

SpectrumBins Scenario::spectrum_bins() const {
  const auto& ob = config.observables;
  double lo = INFINITY, hi = -INFINITY;
  for (const auto& e : config.electrons) {
    lo = std::min(lo, e.kinetic_energy - ob.energy_span);
    hi = std::max(hi, e.kinetic_energy + ob.energy_span);
  }
  lo = std::max(lo, 0.0);
  SpectrumBins b;
  b.e_min = lo;
  b.de = ob.energy_bin;
  b.e_max = lo + std::ceil((hi - lo) / b.de - 1e-9) * b.de;
  b.angle_bins = ob.angle_bins;
  b.acceptance = ob.acceptance;
  b.pad = ob.momentum_pad;
  return b;
}

json visibility_summary(const std::vector<double>& energies, const std::vector<double>& sigma, double e0,
                        double photon, double lo, double hi, int peaks) {
  json out = {{"band", {e0 + lo * photon, e0 + hi * photon}}, {"visibility", nullptr}, {"peak_visibility", nullptr}};
  try {
    out["visibility"] = fringe_visibility(PinemSpectrum{{}, energies, {}, {}, sigma, 0.0}, e0 + lo * photon,
                                          e0 + hi * photon, photon);
    const CombAnalysis c = analyze_comb(energies, sigma, e0 + lo * photon, e0 + hi * photon, photon);
    const std::size_t n = std::min<std::size_t>(c.peak_visibility.size(), static_cast<std::size_t>(peaks));
    out["peaks"] = n;
    out["peak_energies"] = c.peak_energies;
    if (n > 0) {
      double m = 0.0;
      for (std::size_t k = 0; k < n; ++k) m += c.peak_visibility[k];
      out["peak_visibility"] = m / static_cast<double>(n);
    }
  } catch (const std::runtime_error& e) {
    out["error"] = e.what();
  }
  return out;
}

RunReport run_scenario(const RunConfig& config, const Progress& progress) {
  Scenario sc = build_scenario(config);
  const RunConfig& cfg = sc.config;
  const GridSpec& g = cfg.grid;
  const Engine engine = sc.engine();
  const SpectrumBins bins = sc.spectrum_bins();
  const double photon = cfg.photon_omega();
  const std::size_t n_orb = sc.initial.orbitals.size();

  ContainerWriter w(cfg.output_dir);
  json& meta = w.meta();
  meta["kind"] = "tdhf_run";
  meta["code_version"] = kCodeVersion;
  meta["config"] = cfg.source;
  meta["grid"] = grid_to_json(g);
  meta["units"] = {{"fields", "atomic"},
                   {"axes", "lab"},
                   {"x", "nm"},
                   {"k", "1/nm"},
                   {"energy", "eV"},
                   {"angle", "deg"},
                   {"time", "fs"},
                   {"densities", "per bohr^2 (orbitals per bohr)"},
                   {"Sigma", "dimensionless (integral over eV gives eV)"}};
  meta["snapshots"] = json::array();

  try {
    // Axes.
    {
      std::vector<double> x(g.nx), y(g.ny);
      for (int i = 0; i < g.nx; ++i) x[i] = bohr_to_nm(g.x(i));
      for (int j = 0; j < g.ny; ++j) y[j] = bohr_to_nm(g.y(j));
      w.write_real("axis.x_nm", x, {static_cast<std::uint64_t>(g.nx)});
      w.write_real("axis.y_nm", y, {static_cast<std::uint64_t>(g.ny)});
      const int ne = bins.energy_bins();
      std::vector<double> e(ne), a(bins.angle_bins);
      for (int k = 0; k < ne; ++k) e[k] = hartree_to_eV(bins.e_min + (k + 0.5) * bins.de);
      const double dphi = 2.0 * bins.acceptance / bins.angle_bins;
      for (int k = 0; k < bins.angle_bins; ++k) a[k] = (-bins.acceptance + (k + 0.5) * dphi) / kDeg;
      w.write_real("axis.energy_eV", e, {static_cast<std::uint64_t>(ne)});
      w.write_real("axis.angle_deg", a, {static_cast<std::uint64_t>(bins.angle_bins)});
    }

    std::vector<double> times_fs;
    std::vector<double> norms;
    std::vector<double> energies_eV;
    std::vector<PinemSpectrum> last_spectra;
    bool momentum_axis_written = false;

    auto sink = [&](std::size_t step, const SystemState& st) {
      const std::size_t s = times_fs.size();
      const std::string tag = four(s);
      json snap = {{"index", s}, {"step", step}, {"time_fs", au_to_fs(st.time)}, {"datasets", json::array()}};
      auto add = [&](const std::string& name) { snap["datasets"].push_back(name); };

      times_fs.push_back(au_to_fs(st.time));
      for (const auto& o : st.orbitals) norms.push_back(norm_squared(o));
      energies_eV.push_back(hartree_to_eV(energy_functional(st, sc.kernel, cfg.interaction_scale)));

      if (cfg.observables.store_orbitals) {
        for (std::size_t n = 0; n < n_orb; ++n) {
          const std::string name = "psi." + tag + "." + std::to_string(n);
          w.write_field(name, st.orbitals[n].envelope);
          add(name);
        }
      }
      const RealField rho = one_particle_density(st);
      w.write_field("rho1." + tag, rho);
      add("rho1." + tag);

      for (Space space : cfg.observables.slices) {
        const PairDensitySlice sl = pair_density_slice(st, space);
        const std::string kind = space == Space::Real ? "real" : "momentum";
        const std::vector<std::uint64_t> shape{static_cast<std::uint64_t>(sl.n), static_cast<std::uint64_t>(sl.n)};
        for (const auto& [part, data] : {std::pair{"total", &sl.total}, std::pair{"uncorrelated", &sl.uncorrelated},
                                         std::pair{"exchange_phase", &sl.exchange_phase}}) {
          const std::string name = "pair." + kind + "." + part + "." + tag;
          w.write_real(name, *data, shape);
          add(name);
        }
        if (space == Space::Momentum && !momentum_axis_written) {
          std::vector<double> k(sl.coords);
          for (double& v : k) v /= bohr_nm;
          w.write_real("axis.kx_per_nm", k, {static_cast<std::uint64_t>(sl.n)});
          momentum_axis_written = true;
        }
      }

      last_spectra.clear();
      std::vector<double> total;
      for (std::size_t n = 0; n < n_orb; ++n) {
        last_spectra.push_back(pinem_spectrum(st.orbitals[n], bins));
        const PinemSpectrum& sp = last_spectra.back();
        const std::string name = "spectrum." + tag + "." + std::to_string(n);
        w.write_real(name, sp.Sigma, {static_cast<std::uint64_t>(sp.Sigma.size())});
        w.write_real("sigma." + tag + "." + std::to_string(n), sp.sigma,
                     {static_cast<std::uint64_t>(sp.Sigma.size()), static_cast<std::uint64_t>(bins.angle_bins)});
        add(name);
        add("sigma." + tag + "." + std::to_string(n));
        if (total.empty()) total.assign(sp.Sigma.size(), 0.0);
        for (std::size_t k = 0; k < total.size(); ++k) total[k] += sp.Sigma[k];
      }
      w.write_real("spectrum." + tag + ".total", total, {static_cast<std::uint64_t>(total.size())});
      add("spectrum." + tag + ".total");
      meta["snapshots"].push_back(snap);
      if (progress) progress(step, st.time);
    };

    SystemState state = sc.initial;
    const RunSummary summary = engine.run(state, sink);

    const auto ns = static_cast<std::uint64_t>(times_fs.size());
    w.write_real("snapshot_times_fs", times_fs, {ns});
    w.write_real("norms", norms, {ns, static_cast<std::uint64_t>(n_orb)});
    w.write_real("hf_energy_eV", energies_eV, {ns});

    json sum;
    sum["steps"] = summary.steps;
    sum["dt_fs"] = au_to_fs(summary.dt);
    sum["wall_seconds"] = summary.wall_seconds;
    sum["final_norms"] = json::array();
    for (std::size_t n = 0; n < n_orb; ++n) sum["final_norms"].push_back(norms[norms.size() - n_orb + n]);
    sum["photon_energy_eV"] = hartree_to_eV(photon);
    sum["electrons"] = json::array();
    std::vector<double> energies_axis(bins.energy_bins());
    for (int k = 0; k < bins.energy_bins(); ++k) energies_axis[k] = bins.e_min + (k + 0.5) * bins.de;
    for (std::size_t n = 0; n < n_orb; ++n) {
      const ElectronConfig& e = cfg.electrons[n];
      const Wavepacket& o = state.orbitals[n];
      json je = {{"label", e.label},
                 {"kinetic_energy_eV", hartree_to_eV(e.kinetic_energy)},
                 {"kinetic_expectation_eV", hartree_to_eV(kinetic_expectation(o))},
                 {"spectrum_integral_eV", hartree_to_eV(last_spectra[n].integral())},
                 {"spectrum_outside_weight", last_spectra[n].outside_weight}};
      if (cfg.laser_enabled && !cfg.field_series) {
        const cplx gf = g_factor(*sc.provider, electron_speed(e.kinetic_energy), photon, e.center.y);
        je["g_factor"] = {{"abs", std::abs(gf)}, {"arg", std::arg(gf)}};
      }
      if (photon > 0.0) {
        je["visibility"] = visibility_summary(energies_axis, last_spectra[n].Sigma, e.kinetic_energy, photon,
                                              cfg.observables.band_lo, cfg.observables.band_hi,
                                              cfg.observables.visibility_peaks);
        energies_to_eV(je["visibility"]);
      }
      sum["electrons"].push_back(je);
    }
    if (photon > 0.0) {
      std::vector<double> total(energies_axis.size(), 0.0);
      for (const auto& sp : last_spectra)
        for (std::size_t k = 0; k < total.size(); ++k) total[k] += sp.Sigma[k];
      const double e0 = cfg.electrons.front().kinetic_energy;
      json v = visibility_summary(energies_axis, total, e0, photon, cfg.observables.band_lo, cfg.observables.band_hi,
                                  cfg.observables.visibility_peaks);
      energies_to_eV(v);
      sum["total_visibility"] = v;
    }
    meta["summary"] = sum;
    meta["spectrum_bins"] = {{"e_min_eV", hartree_to_eV(bins.e_min)},
                             {"e_max_eV", hartree_to_eV(bins.e_max)},
                             {"de_eV", hartree_to_eV(bins.de)},
                             {"angle_bins", bins.angle_bins},
                             {"acceptance_deg", bins.acceptance / kDeg}};
    w.finalize(true);

    RunReport r;
    r.dir = cfg.output_dir;
    r.summary = summary;
    r.final_state = std::move(state);
    r.manifest = ContainerReader(cfg.output_dir).manifest();
    return r;
  } catch (const std::exception& e) {
    meta["error"] = e.what();
    try {
      w.finalize(false);
    } catch (...) {
    }
    throw;
  }
}

std::string describe(const std::filesystem::path& manifest_path) {
  const ContainerReader rd(manifest_path);
  const auto bad = rd.verify();
  if (!bad.empty()) {
    // Reading the first damaged dataset produces the precise message.
    (void)rd.read_real(bad.front());
  }
  const json& meta = rd.meta();
  std::ostringstream out;
  out << std::setprecision(6);
  out << "run: " << meta.value("config", json::object()).value("name", "?") << "  (" << (rd.complete() ? "complete" : "INCOMPLETE")
      << ")\n";
  if (meta.contains("error")) out << "error: " << meta["error"].get<std::string>() << "\n";
  if (meta.contains("grid")) {
    const GridSpec g = grid_from_json(meta["grid"]);
    out << "grid: " << g.nx << " x " << g.ny << ", dx = " << bohr_to_nm(g.dx) << " nm, dy = " << bohr_to_nm(g.dy)
        << " nm\n";
  }
  const json snaps = meta.value("snapshots", json::array());
  out << "snapshots: " << snaps.size();
  if (!snaps.empty()) out << " (t = " << snaps.front()["time_fs"] << " .. " << snaps.back()["time_fs"] << " fs)";
  out << "\n";

  if (meta.contains("summary")) {
    const json& s = meta["summary"];
    out << "steps: " << s["steps"] << ", dt = " << s["dt_fs"].get<double>() << " fs, wall " << s["wall_seconds"].get<double>()
        << " s\n";
    out << "final norms:";
    for (const auto& v : s["final_norms"]) out << " " << v.get<double>();
    out << "\n";
    const double photon = s.value("photon_energy_eV", 0.0);
    if (meta.contains("spectrum_bins")) {
      const json& b = meta["spectrum_bins"];
      out << "spectrum span: " << b["e_min_eV"].get<double>() << " .. " << b["e_max_eV"].get<double>() << " eV, bin "
          << b["de_eV"].get<double>() << " eV\n";
    }
    const std::vector<double> axis = rd.has_dataset("axis.energy_eV") ? rd.read_real("axis.energy_eV") : std::vector<double>{};
    for (std::size_t n = 0; n < s["electrons"].size(); ++n) {
      const json& e = s["electrons"][n];
      out << "electron " << n << " (" << e["label"].get<std::string>() << "): <H_K> = " << e["kinetic_expectation_eV"].get<double>()
          << " eV, int Sigma dE = " << e["spectrum_integral_eV"].get<double>() << " eV";
      if (e.contains("g_factor")) out << ", |g| = " << e["g_factor"]["abs"].get<double>();
      out << "\n";
      if (e.contains("visibility") && !snaps.empty() && photon > 0.0) {
        const json& v = e["visibility"];
        const std::string name = "spectrum." + four(snaps.size() - 1) + "." + std::to_string(n);
        const json again = visibility_summary(axis, rd.read_real(name), e["kinetic_energy_eV"].get<double>(), photon,
                                              (v["band"][0].get<double>() - e["kinetic_energy_eV"].get<double>()) / photon,
                                              (v["band"][1].get<double>() - e["kinetic_energy_eV"].get<double>()) / photon,
                                              meta["config"].value("observables", json::object()).value("visibility_peaks", 5));
        out << "  visibility: stored " << v["visibility"] << ", recomputed " << again["visibility"]
            << "; mean over first peaks: " << v["peak_visibility"] << "\n";
      }
    }
    if (s.contains("total_visibility")) {
      const json& v = s["total_visibility"];
      out << "total spectrum visibility: " << v["visibility"] << "; mean over first peaks: " << v["peak_visibility"]
          << "\n";
    }
  }
  out << "datasets: " << rd.datasets().size() << " (all checksums verified)\n";
  for (const auto& d : rd.datasets()) {
    out << "  " << d.name << "  " << d.dtype << " [";
    for (std::size_t k = 0; k < d.shape.size(); ++k) out << (k ? ", " : "") << d.shape[k];
    out << "]\n";
  }
  return out.str();
}

}  // namespace tdhf
