#include "lscs/psf.hpp"

#include <algorithm>
#include <cmath>

namespace lscs {

namespace {

constexpr double kTailRatio = 1e-3;
constexpr int kMaxGaussianReach = 100000;

double one_side(double t, double c, double alpha) { return std::pow(c * t + 1.0, -alpha); }

int gaussian_reach(double sigma) {
  if (sigma <= 0.0) return 0;
  return static_cast<int>(std::min<double>(kMaxGaussianReach, std::ceil(8.0 * sigma)));
}

std::vector<double> gaussian_taps(double sigma) {
  const int j = gaussian_reach(sigma);
  std::vector<double> g(2 * j + 1, 0.0);
  if (j == 0) {
    g[0] = 1.0;
    return g;
  }
  double s = 0.0;
  for (int k = -j; k <= j; ++k) s += g[k + j] = std::exp(-0.5 * k * k / (sigma * sigma));
  for (double& v : g) v /= s;
  return g;
}

// No box check: finite differences may step just outside it.
std::vector<double> render_taps(const PsfVector& p, int w) {
  const int j = gaussian_reach(p[PsfVector::sigma]);
  const int ext = w + j;
  std::vector<double> base(2 * ext + 1);
  for (int k = -ext; k <= ext; ++k) {
    double v = 1.0;
    if (k > 0) v = one_side(k, p[PsfVector::c_right], p[PsfVector::alpha_right]);
    if (k < 0) v = one_side(-k, p[PsfVector::c_left], p[PsfVector::alpha_left]);
    base[k + ext] = v;
  }
  std::vector<double> out(2 * w + 1, 0.0);
  if (j == 0) {
    for (int k = -w; k <= w; ++k) out[k + w] = p[PsfVector::amplitude] * base[k + ext];
    return out;
  }
  const std::vector<double> g = gaussian_taps(p[PsfVector::sigma]);
  for (int k = -w; k <= w; ++k) {
    double s = 0.0;
    for (int i = -j; i <= j; ++i) s += g[i + j] * base[k - i + ext];
    out[k + w] = p[PsfVector::amplitude] * s;
  }
  return out;
}

int tail_width(double c, double alpha) {
  // (c w + 1)^-alpha <= ratio  <=>  w >= (ratio^(-1/alpha) - 1) / c
  double w = (std::pow(kTailRatio, -1.0 / alpha) - 1.0) / c;
  return w > 1e9 ? 1000000000 : static_cast<int>(std::ceil(w));
}

void check_kernels(const LineScanSet& r, std::span<const PsfKernel> kernels) {
  if (kernels.size() != r.m())
    throw DomainError("got " + std::to_string(kernels.size()) + " PSF kernels for " + std::to_string(r.m()) +
                      " scan lines");
}

}  // namespace

PsfKernel PsfKernel::delta() {
  PsfKernel k;
  k.taps = {1.0};
  return k;
}

int default_half_width(const PsfVector& p, int max_w) {
  max_w = std::max(1, max_w);
  long w = std::max(tail_width(p[PsfVector::c_left], p[PsfVector::alpha_left]),
                    tail_width(p[PsfVector::c_right], p[PsfVector::alpha_right]));
  int cur = static_cast<int>(std::clamp<long>(w, 1, max_w));
  // Smoothing lowers the peak, so widen until the rendered ends pass.
  while (cur < max_w) {
    std::vector<double> t = render_taps(p, cur);
    double peak = *std::max_element(t.begin(), t.end());
    if (t.front() <= kTailRatio * peak && t.back() <= kTailRatio * peak) break;
    cur = std::min(max_w, cur + std::max(1, cur / 4));
  }
  return cur;
}

int default_half_width(const PsfBox& box, int max_w) {
  // The slowest tails in the box: smallest c and alpha, largest sigma.
  PsfVector worst = box.lower;
  worst[PsfVector::sigma] = box.upper[PsfVector::sigma];
  return default_half_width(worst, max_w);
}

PsfKernel render_psf(const PsfVector& p, int w, const PsfBox& box) {
  if (w < 1) throw DomainError("PSF half width must be >= 1");
  if (!box.contains(p)) throw DomainError("PSF parameters lie outside the box");
  return PsfKernel{render_taps(p, w), p};
}

void convolve_column(std::span<const double> in, const PsfKernel& k, std::span<double> out) {
  const int n = static_cast<int>(in.size()), w = k.half_width();
  for (int t = 0; t < n; ++t) {
    double s = 0.0;
    const int lo = std::max(-w, t - n + 1), hi = std::min(w, t);
    for (int j = lo; j <= hi; ++j) s += k.taps[j + w] * in[t - j];
    out[t] = s;
  }
}

void correlate_column(std::span<const double> in, const PsfKernel& k, std::span<double> out) {
  const int n = static_cast<int>(in.size()), w = k.half_width();
  for (int t = 0; t < n; ++t) {
    double s = 0.0;
    const int lo = std::max(-w, -t), hi = std::min(w, n - 1 - t);
    for (int j = lo; j <= hi; ++j) s += k.taps[j + w] * in[t + j];
    out[t] = s;
  }
}

LineScanSet apply_psf(const LineScanSet& r, std::span<const PsfKernel> kernels) {
  check_kernels(r, kernels);
  LineScanSet out(r.geometry(), r.rows());
  for (std::size_t i = 0; i < r.m(); ++i) convolve_column(r.column(i), kernels[i], out.column(i));
  return out;
}

LineScanSet apply_psf_adjoint(const LineScanSet& r, std::span<const PsfKernel> kernels) {
  check_kernels(r, kernels);
  LineScanSet out(r.geometry(), r.rows());
  for (std::size_t i = 0; i < r.m(); ++i) correlate_column(r.column(i), kernels[i], out.column(i));
  return out;
}

PsfGradient psf_param_gradient(const PsfVector& p, int w, const PsfBox& box) {
  if (w < 1) throw DomainError("PSF half width must be >= 1");
  PsfGradient g;
  for (std::size_t c = 0; c < PsfVector::kDim; ++c) {
    const double h = 1e-6 * std::max(1.0, std::abs(p[c]));
    PsfVector lo = p, hi = p;
    double span = 2.0 * h;
    if (p[c] - h < box.lower[c]) {
      g.one_sided[c] = true;
      span = h;
      hi[c] += h;
    } else if (p[c] + h > box.upper[c]) {
      g.one_sided[c] = true;
      span = h;
      lo[c] -= h;
    } else {
      lo[c] -= h;
      hi[c] += h;
    }
    if (lo[c] <= 0.0 && c != PsfVector::sigma) {
      // PSF undefined below zero; fall back to a forward difference.
      lo = p;
      span = h;
      g.one_sided[c] = true;
    }
    lo[PsfVector::sigma] = std::max(0.0, lo[PsfVector::sigma]);
    std::vector<double> a = render_taps(hi, w), b = render_taps(lo, w);
    g.d_taps[c].resize(a.size());
    for (std::size_t k = 0; k < a.size(); ++k) g.d_taps[c][k] = (a[k] - b[k]) / span;
  }
  return g;
}

std::vector<double> psf_param_gradient(const PsfVector& p, int w, const PsfVector& direction, const PsfBox& box) {
  PsfGradient g = psf_param_gradient(p, w, box);
  std::vector<double> out(2 * w + 1, 0.0);
  for (std::size_t c = 0; c < PsfVector::kDim; ++c)
    for (std::size_t k = 0; k < out.size(); ++k) out[k] += direction[c] * g.d_taps[c][k];
  return out;
}

std::vector<double> tap_correlation(std::span<const double> a, std::span<const double> b, int w) {
  const int n = static_cast<int>(a.size());
  std::vector<double> g(2 * w + 1, 0.0);
  for (int k = -w; k <= w; ++k) {
    double s = 0.0;
    const int lo = std::max(0, k), hi = std::min(n - 1, n - 1 + k);
    for (int t = lo; t <= hi; ++t) s += a[t] * b[t - k];
    g[k + w] = s;
  }
  return g;
}

}  // namespace lscs
