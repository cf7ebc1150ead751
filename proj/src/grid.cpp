#include "tdhf/grid.hpp"

#include <cmath>
#include <numbers>

#include "tdhf/fft.hpp"

namespace tdhf {

namespace {

bool is_pow2(int n) { return n > 0 && (n & (n - 1)) == 0; }

template <class T>
void check_finite(const Field<T>& f, const char* what) {
  for (const auto& v : f.values) {
    if constexpr (std::is_same_v<T, cplx>) {
      if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) {
        throw NumericalError(std::string(what) + ": non-finite value");
      }
    } else if (!std::isfinite(v)) {
      throw NumericalError(std::string(what) + ": non-finite value");
    }
  }
}

}  // namespace

double norm(Vec2 a) { return std::hypot(a.x, a.y); }

void GridSpec::validate() const {
  if (nx < 8 || ny < 8 || !is_pow2(nx) || !is_pow2(ny)) {
    throw ConfigError("grid: nx and ny must be powers of two >= 8 (got " + std::to_string(nx) + "x" +
                      std::to_string(ny) + ")");
  }
  if (!(dx > 0.0) || !(dy > 0.0) || !std::isfinite(dx) || !std::isfinite(dy)) {
    throw ConfigError("grid: dx and dy must be positive");
  }
  if (!std::isfinite(x0) || !std::isfinite(y0)) throw ConfigError("grid: origin must be finite");
}

double GridSpec::dkx() const { return 2.0 * std::numbers::pi / lx(); }
double GridSpec::dky() const { return 2.0 * std::numbers::pi / ly(); }

void require_finite(const ComplexField& f, const char* what) { check_finite(f, what); }
void require_finite(const RealField& f, const char* what) { check_finite(f, what); }

ComplexField to_complex(const RealField& f) {
  ComplexField out(f.grid);
  for (std::size_t k = 0; k < f.size(); ++k) out.values[k] = f.values[k];
  return out;
}

RealField real_part(const ComplexField& f) {
  RealField out(f.grid);
  for (std::size_t k = 0; k < f.size(); ++k) out.values[k] = f.values[k].real();
  return out;
}

RealField abs_squared(const ComplexField& f) {
  RealField out(f.grid);
  for (std::size_t k = 0; k < f.size(); ++k) out.values[k] = std::norm(f.values[k]);
  return out;
}

double integrate(const RealField& f) {
  double s = 0.0;
  for (double v : f.values) s += v;
  return s * f.grid.cell_area();
}

cplx integrate(const ComplexField& f) {
  cplx s = 0.0;
  for (const cplx& v : f.values) s += v;
  return s * f.grid.cell_area();
}

ComplexField spectral_gradient(const ComplexField& field, Axis axis) {
  const GridSpec& g = field.grid;
  ComplexField out = field;
  fft_forward(out);
  for (int j = 0; j < g.ny; ++j) {
    for (int i = 0; i < g.nx; ++i) {
      double k = 0.0;
      if (axis == Axis::X) {
        k = (i == g.nx / 2) ? 0.0 : g.kx(i);
      } else {
        k = (j == g.ny / 2) ? 0.0 : g.ky(j);
      }
      out(i, j) *= cplx(0.0, k);
    }
  }
  fft_inverse(out);
  return out;
}

ComplexField spectral_laplacian(const ComplexField& field) {
  const GridSpec& g = field.grid;
  ComplexField out = field;
  fft_forward(out);
  for (int j = 0; j < g.ny; ++j) {
    const double ky = g.ky(j);
    for (int i = 0; i < g.nx; ++i) {
      const double kx = g.kx(i);
      out(i, j) *= -(kx * kx + ky * ky);
    }
  }
  fft_inverse(out);
  return out;
}

}  // namespace tdhf
