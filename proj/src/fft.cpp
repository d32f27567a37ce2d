#include "fft.hpp"

#include <map>
#include <mutex>
#include <utility>

namespace lscs::detail {

namespace {

struct PlanPair {
  fftw_plan r2c = nullptr;
  fftw_plan c2r = nullptr;
};

std::mutex& plan_mutex() {
  static std::mutex m;
  return m;
}

PlanPair get_plans(std::size_t len, std::size_t count) {
  static std::map<std::pair<std::size_t, std::size_t>, PlanPair> cache;
  std::lock_guard lock(plan_mutex());
  auto [it, inserted] = cache.try_emplace({len, count});
  if (inserted) {
    const int n = static_cast<int>(len);
    const int howmany = static_cast<int>(count);
    const int bins = n / 2 + 1;
    AlignedBuffer<double> r(len * count);
    AlignedBuffer<cplx> c(static_cast<std::size_t>(bins) * count);
    auto* fc = reinterpret_cast<fftw_complex*>(c.data());
    it->second.r2c = fftw_plan_many_dft_r2c(1, &n, howmany, r.data(), nullptr, 1, n, fc, nullptr, 1, bins,
                                            FFTW_ESTIMATE);
    it->second.c2r = fftw_plan_many_dft_c2r(1, &n, howmany, fc, nullptr, 1, bins, r.data(), nullptr, 1, n,
                                            FFTW_ESTIMATE);
    if (!it->second.r2c || !it->second.c2r) throw std::runtime_error("FFTW planning failed");
  }
  return it->second;
}

}  // namespace

RealFftBatch::RealFftBatch(std::size_t len, std::size_t count) : len_(len), count_(count) {
  PlanPair p = get_plans(len, count);
  r2c_ = p.r2c;
  c2r_ = p.c2r;
}

void RealFftBatch::forward(double* in, cplx* out) const {
  fftw_execute_dft_r2c(r2c_, in, reinterpret_cast<fftw_complex*>(out));
}

void RealFftBatch::inverse(cplx* in, double* out) const {
  fftw_execute_dft_c2r(c2r_, reinterpret_cast<fftw_complex*>(in), out);
}

void fft2_magnitude(const double* in, std::size_t n, double* out) {
  AlignedBuffer<cplx> a(n * n), b(n * n);
  for (std::size_t i = 0; i < n * n; ++i) a[i] = in[i];
  fftw_plan plan;
  {
    std::lock_guard lock(plan_mutex());
    const int ni = static_cast<int>(n);
    plan = fftw_plan_dft_2d(ni, ni, reinterpret_cast<fftw_complex*>(a.data()), reinterpret_cast<fftw_complex*>(b.data()),
                            FFTW_FORWARD, FFTW_ESTIMATE);
  }
  fftw_execute(plan);
  for (std::size_t i = 0; i < n * n; ++i) out[i] = std::abs(b[i]);
  std::lock_guard lock(plan_mutex());
  fftw_destroy_plan(plan);
}

}  // namespace lscs::detail
