#include "lscs/motif.hpp"

#include <algorithm>
#include <cmath>

namespace lscs {

namespace {

constexpr double kGaussianCutoff = 1e-15;

double disc_coverage(double dy, double dx, double r, int s) {
  if (s == 1) return dy * dy + dx * dx <= r * r ? 1.0 : 0.0;
  int inside = 0;
  for (int a = 0; a < s; ++a)
    for (int b = 0; b < s; ++b) {
      double y = dy + (a + 0.5) / s - 0.5;
      double x = dx + (b + 0.5) / s - 0.5;
      if (y * y + x * x <= r * r) ++inside;
    }
  return static_cast<double>(inside) / (s * s);
}

// Loops over the rows/cols where both the source and target index are in range.
template <typename F>
void for_each_shift(std::size_t n, int dr, int dc, F&& body) {
  const int ni = static_cast<int>(n);
  int r0 = std::max(0, dr), r1 = std::min(ni, ni + dr);
  int c0 = std::max(0, dc), c1 = std::min(ni, ni + dc);
  for (int r = r0; r < r1; ++r)
    for (int c = c0; c < c1; ++c) body(r, c, r - dr, c - dc);
}

}  // namespace

Image render_motif(const Motif& motif, std::size_t n) {
  motif.validate();
  if (!(2.0 * motif.radius < static_cast<double>(n))) throw DomainError("motif exceeds grid");

  Image img(n);
  const double c = static_cast<double>(n / 2);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double dy = static_cast<double>(i) - c, dx = static_cast<double>(j) - c;
      if (motif.kind == MotifKind::disc) {
        img(i, j) = disc_coverage(dy, dx, motif.radius, motif.supersample);
      } else {
        double v = std::exp(-(dy * dy + dx * dx) / (2.0 * motif.radius * motif.radius));
        img(i, j) = v < kGaussianCutoff ? 0.0 : v;
      }
    }

  double scale = 1.0;
  if (motif.normalization == MotifNormalization::unit_mass) {
    scale = 1.0 / img.sum();
  } else {
    double s2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double row = 0.0;
      for (std::size_t j = 0; j < n; ++j) row += img(i, j);
      s2 += row * row;
    }
    scale = 1.0 / std::sqrt(s2);
  }
  for (double& v : img.values()) v *= scale;
  return img;
}

MotifKernel::MotifKernel(const Motif& motif, std::size_t n) : n_(n) {
  Image img = render_motif(motif, n);
  const int c = static_cast<int>(n / 2);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (img(i, j) != 0.0) taps_.push_back({static_cast<int>(i) - c, static_cast<int>(j) - c, img(i, j)});
}

double MotifKernel::mass() const noexcept {
  double s = 0.0;
  for (const auto& t : taps_) s += t.value;
  return s;
}

Grid MotifKernel::apply(const Grid& x) const {
  if (x.n() != n_) throw DomainError("motif kernel and grid sizes differ");
  Grid y(n_);
  for (const auto& t : taps_)
    for_each_shift(n_, t.dr, t.dc, [&](int r, int c, int sr, int sc) { y(r, c) += t.value * x(sr, sc); });
  return y;
}

Grid MotifKernel::apply_adjoint(const Grid& y) const {
  if (y.n() != n_) throw DomainError("motif kernel and grid sizes differ");
  Grid x(n_);
  for (const auto& t : taps_)
    for_each_shift(n_, t.dr, t.dc, [&](int r, int c, int sr, int sc) { x(sr, sc) += t.value * y(r, c); });
  return x;
}

Image convolve_motif(const SparseMap& x, const Motif& motif) {
  return Image(MotifKernel(motif, x.n()).apply(x));
}

}  // namespace lscs
