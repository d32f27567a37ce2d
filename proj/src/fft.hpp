#pragma once

#include <complex>
#include <cstddef>
#include <memory>

#include <fftw3.h>

namespace lscs::detail {

using cplx = std::complex<double>;

/// fftw_malloc'd buffer, aligned for SIMD plans.
template <typename T>
class AlignedBuffer {
 public:
  AlignedBuffer() = default;
  explicit AlignedBuffer(std::size_t count)
      : data_(static_cast<T*>(fftw_malloc(sizeof(T) * (count ? count : 1)))), size_(count) {
    if (!data_) throw std::bad_alloc();
    for (std::size_t i = 0; i < size_; ++i) data_[i] = T{};
  }
  AlignedBuffer(AlignedBuffer&& o) noexcept : data_(o.data_), size_(o.size_) {
    o.data_ = nullptr;
    o.size_ = 0;
  }
  AlignedBuffer& operator=(AlignedBuffer&& o) noexcept {
    std::swap(data_, o.data_);
    std::swap(size_, o.size_);
    return *this;
  }
  AlignedBuffer(const AlignedBuffer&) = delete;
  AlignedBuffer& operator=(const AlignedBuffer&) = delete;
  ~AlignedBuffer() { fftw_free(data_); }

  T* data() noexcept { return data_; }
  const T* data() const noexcept { return data_; }
  std::size_t size() const noexcept { return size_; }
  T& operator[](std::size_t i) noexcept { return data_[i]; }
  const T& operator[](std::size_t i) const noexcept { return data_[i]; }

 private:
  T* data_ = nullptr;
  std::size_t size_ = 0;
};

/// Batched 1-D real transforms of `count` contiguous rows of length `len`.
/// Plans come from a process-wide cache; executing is thread safe as long as
/// each thread passes its own buffers.
class RealFftBatch {
 public:
  RealFftBatch(std::size_t len, std::size_t count);

  std::size_t len() const noexcept { return len_; }
  std::size_t count() const noexcept { return count_; }
  std::size_t bins() const noexcept { return len_ / 2 + 1; }

  /// in: count*len reals, out: count*bins complex values.
  void forward(double* in, cplx* out) const;
  /// Unnormalized inverse; destroys `in`.
  void inverse(cplx* in, double* out) const;

 private:
  std::size_t len_, count_;
  fftw_plan r2c_, c2r_;
};

}  // namespace lscs::detail

namespace lscs::detail {

/// |DFT| of an n x n real array (row-major), full n x n output.
void fft2_magnitude(const double* in, std::size_t n, double* out);

}  // namespace lscs::detail
