#pragma once

#include "lscs/model.hpp"

#include <span>
#include <vector>

namespace lscs {

/// Renders the motif centred on pixel (n/2, n/2) of an n x n image.
/// Throws DomainError("motif exceeds grid") unless 2r < n.
Image render_motif(const Motif& motif, std::size_t n);

struct MotifTap {
  int dr = 0;
  int dc = 0;
  double value = 0.0;
};

/// Nonzero taps of a rendered motif, relative to its centre pixel.
class MotifKernel {
 public:
  MotifKernel() = default;
  MotifKernel(const Motif& motif, std::size_t n);

  std::size_t n() const noexcept { return n_; }
  std::span<const MotifTap> taps() const noexcept { return taps_; }
  double mass() const noexcept;

  /// "Same" zero-padded convolution D * X.
  Grid apply(const Grid& x) const;
  /// Correlation with D, the adjoint of apply().
  Grid apply_adjoint(const Grid& y) const;

 private:
  std::size_t n_ = 0;
  std::vector<MotifTap> taps_;
};

/// Y = D * X as an image.
Image convolve_motif(const SparseMap& x, const Motif& motif);

}  // namespace lscs
