#pragma once

#include <complex>
#include <cstddef>
#include <limits>
#include <new>
#include <stdexcept>
#include <string>
#include <vector>

#include "tdhf/errors.hpp"

namespace tdhf {

using cplx = std::complex<double>;

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  friend constexpr Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
  friend constexpr Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
  friend constexpr Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
  friend constexpr bool operator==(Vec2, Vec2) = default;
};

constexpr double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
double norm(Vec2 a);

/// Allocator backed by fftw_malloc so every field buffer satisfies FFTW's
/// SIMD alignment and can be handed to any cached plan.
void* fftw_aligned_alloc(std::size_t bytes);
void fftw_aligned_free(void* p) noexcept;

template <class T>
struct FftwAllocator {
  using value_type = T;
  FftwAllocator() = default;
  template <class U>
  FftwAllocator(const FftwAllocator<U>&) noexcept {}
  T* allocate(std::size_t n) {
    if (n > std::numeric_limits<std::size_t>::max() / sizeof(T)) throw std::bad_array_new_length();
    return static_cast<T*>(fftw_aligned_alloc(n * sizeof(T)));
  }
  void deallocate(T* p, std::size_t) noexcept { fftw_aligned_free(p); }
  template <class U>
  bool operator==(const FftwAllocator<U>&) const noexcept { return true; }
};

template <class T>
using AlignedVector = std::vector<T, FftwAllocator<T>>;

/// Uniform periodic grid. Storage is row-major with x fastest:
/// index(i, j) = j * nx + i, point (x0 + i dx, y0 + j dy).
struct GridSpec {
  int nx = 0;
  int ny = 0;
  double dx = 0.0;
  double dy = 0.0;
  double x0 = 0.0;
  double y0 = 0.0;

  /// Throws ConfigError unless nx, ny are powers of two >= 8 and dx, dy > 0.
  void validate() const;

  std::size_t size() const { return static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny); }
  std::size_t index(int i, int j) const { return static_cast<std::size_t>(j) * nx + i; }
  double x(int i) const { return x0 + i * dx; }
  double y(int j) const { return y0 + j * dy; }
  double lx() const { return nx * dx; }
  double ly() const { return ny * dy; }
  double cell_area() const { return dx * dy; }
  double dkx() const;
  double dky() const;
  /// Angular wavenumber of FFT bin i (standard order, negative half last).
  double kx(int i) const { return dkx() * (i < nx / 2 ? i : i - nx); }
  double ky(int j) const { return dky() * (j < ny / 2 ? j : j - ny); }

  friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

/// Sampled field on a GridSpec.
template <class T>
struct Field {
  GridSpec grid;
  AlignedVector<T> values;

  Field() = default;
  explicit Field(const GridSpec& g, T fill = T{}) : grid(g), values(g.size(), fill) {}

  T& operator()(int i, int j) { return values[grid.index(i, j)]; }
  const T& operator()(int i, int j) const { return values[grid.index(i, j)]; }
  T* data() { return values.data(); }
  const T* data() const { return values.data(); }
  std::size_t size() const { return values.size(); }
  bool empty() const { return values.empty(); }
};

using ComplexField = Field<cplx>;
using RealField = Field<double>;

enum class Axis { X, Y };

inline void require_same_grid(const GridSpec& a, const GridSpec& b, const char* what) {
  if (!(a == b)) throw std::invalid_argument(std::string(what) + ": grid mismatch");
}

/// Throws NumericalError if any entry is NaN or infinite.
void require_finite(const ComplexField& f, const char* what);
void require_finite(const RealField& f, const char* what);

ComplexField to_complex(const RealField& f);
RealField real_part(const ComplexField& f);
RealField abs_squared(const ComplexField& f);

/// Riemann sum over the grid, i.e. the periodic trapezoid rule.
double integrate(const RealField& f);
cplx integrate(const ComplexField& f);

/// d/dx or d/dy by multiplication with i k in Fourier space. The Nyquist
/// bin is zeroed so that real fields stay real.
ComplexField spectral_gradient(const ComplexField& field, Axis axis);
ComplexField spectral_laplacian(const ComplexField& field);

}  // namespace tdhf
