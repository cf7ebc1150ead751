#include "tdhf/units.hpp"

#include <cmath>
#include <stdexcept>

namespace tdhf::units {

double electron_speed(double kinetic_energy) {
  if (!(kinetic_energy > 0.0)) {
    throw std::invalid_argument("electron_speed: kinetic energy must be positive");
  }
  return std::sqrt(2.0 * kinetic_energy / PhysicalConstants::electron_mass);
}

}  // namespace tdhf::units
