#include "tdhf/fft.hpp"

#include <fftw3.h>

#include <algorithm>
#include <map>
#include <mutex>

namespace tdhf {

namespace {

constexpr int kColumnBlock = 8;

struct Plans2D {
  fftw_plan rows_fwd = nullptr;
  fftw_plan rows_inv = nullptr;
  fftw_plan cols_fwd = nullptr;
  fftw_plan cols_inv = nullptr;
};

struct Plans1D {
  fftw_plan fwd = nullptr;
  fftw_plan inv = nullptr;
};

// Plans live for the whole process; FFTW planning is not thread-safe, execution is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

fftw_complex* as_fftw(cplx* p) { return reinterpret_cast<fftw_complex*>(p); }

// Cached plans were made on fftw_malloc buffers; new-array execution needs the same alignment.
void require_aligned(cplx* p) {
  if (fftw_alignment_of(reinterpret_cast<double*>(p)) != 0) {
    throw std::invalid_argument("fft: buffer is not SIMD aligned (use AlignedVector)");
  }
}

const Plans2D& plans_for(int nx, int ny) {
  static std::map<std::pair<int, int>, Plans2D> cache;
  std::lock_guard lock(planner_mutex());
  auto it = cache.find({nx, ny});
  if (it != cache.end()) return it->second;

  const int block = std::min(kColumnBlock, nx);
  AlignedVector<cplx> rows(static_cast<std::size_t>(nx) * ny);
  AlignedVector<cplx> cols(static_cast<std::size_t>(block) * ny);
  Plans2D p;
  auto many = [](int n, int howmany, cplx* buf, int sign) {
    int len[1] = {n};
    return fftw_plan_many_dft(1, len, howmany, as_fftw(buf), nullptr, 1, n, as_fftw(buf), nullptr, 1, n,
                              sign, FFTW_ESTIMATE);
  };
  p.rows_fwd = many(nx, ny, rows.data(), FFTW_FORWARD);
  p.rows_inv = many(nx, ny, rows.data(), FFTW_BACKWARD);
  p.cols_fwd = many(ny, block, cols.data(), FFTW_FORWARD);
  p.cols_inv = many(ny, block, cols.data(), FFTW_BACKWARD);
  if (!p.rows_fwd || !p.rows_inv || !p.cols_fwd || !p.cols_inv) {
    throw NumericalError("FFTW failed to create a plan");
  }
  return cache.emplace(std::make_pair(nx, ny), p).first->second;
}

const Plans1D& plans_for(int n) {
  static std::map<int, Plans1D> cache;
  std::lock_guard lock(planner_mutex());
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  AlignedVector<cplx> buf(n);
  Plans1D p;
  p.fwd = fftw_plan_dft_1d(n, as_fftw(buf.data()), as_fftw(buf.data()), FFTW_FORWARD, FFTW_ESTIMATE);
  p.inv = fftw_plan_dft_1d(n, as_fftw(buf.data()), as_fftw(buf.data()), FFTW_BACKWARD, FFTW_ESTIMATE);
  if (!p.fwd || !p.inv) throw NumericalError("FFTW failed to create a plan");
  return cache.emplace(n, p).first->second;
}

void transform(cplx* data, int nx, int ny, bool forward) {
  if (nx <= 0 || ny <= 0) throw std::invalid_argument("fft: empty shape");
  require_aligned(data);
  const Plans2D& p = plans_for(nx, ny);
  fftw_execute_dft(forward ? p.rows_fwd : p.rows_inv, as_fftw(data), as_fftw(data));

  const int block = std::min(kColumnBlock, nx);
  thread_local AlignedVector<cplx> scratch;
  scratch.resize(static_cast<std::size_t>(block) * ny);
  cplx* s = scratch.data();
  for (int i0 = 0; i0 < nx; i0 += block) {
    const int w = std::min(block, nx - i0);
    for (int j = 0; j < ny; ++j) {
      const cplx* row = data + static_cast<std::size_t>(j) * nx + i0;
      for (int b = 0; b < w; ++b) s[static_cast<std::size_t>(b) * ny + j] = row[b];
    }
    fftw_execute_dft(forward ? p.cols_fwd : p.cols_inv, as_fftw(s), as_fftw(s));
    for (int j = 0; j < ny; ++j) {
      cplx* row = data + static_cast<std::size_t>(j) * nx + i0;
      for (int b = 0; b < w; ++b) row[b] = s[static_cast<std::size_t>(b) * ny + j];
    }
  }
  if (!forward) {
    const double scale = 1.0 / (static_cast<double>(nx) * ny);
    const std::size_t n = static_cast<std::size_t>(nx) * ny;
    for (std::size_t k = 0; k < n; ++k) data[k] *= scale;
  }
}

}  // namespace

void* fftw_aligned_alloc(std::size_t bytes) {
  void* p = fftw_malloc(bytes == 0 ? 1 : bytes);
  if (!p) throw std::bad_alloc();
  return p;
}

void fftw_aligned_free(void* p) noexcept { fftw_free(p); }

void fft_forward(cplx* data, int nx, int ny) { transform(data, nx, ny, true); }
void fft_inverse(cplx* data, int nx, int ny) { transform(data, nx, ny, false); }
void fft_forward(ComplexField& f) { transform(f.data(), f.grid.nx, f.grid.ny, true); }
void fft_inverse(ComplexField& f) { transform(f.data(), f.grid.nx, f.grid.ny, false); }

void fft_forward_1d(cplx* data, int n) {
  require_aligned(data);
  fftw_execute_dft(plans_for(n).fwd, as_fftw(data), as_fftw(data));
}

void fft_inverse_1d(cplx* data, int n) {
  require_aligned(data);
  fftw_execute_dft(plans_for(n).inv, as_fftw(data), as_fftw(data));
  const double scale = 1.0 / n;
  for (int k = 0; k < n; ++k) data[k] *= scale;
}

}  // namespace tdhf
