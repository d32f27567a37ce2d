#pragma once

#include "lscs/model.hpp"

#include <array>
#include <span>
#include <vector>

namespace lscs {

/// Discrete taps psi[-w..w] of the two-sided power-law PSF
///   a * [(E_left(-t) + E_right(t)) * f_sigma](k),  E_{c,alpha}(t) = (c t + 1)^-alpha for t > 0,
/// with the unsmoothed centre tap fixed at a.
struct PsfKernel {
  std::vector<double> taps;
  PsfVector params;

  int half_width() const noexcept { return static_cast<int>(taps.size() / 2); }
  double at(int k) const noexcept { return taps[static_cast<std::size_t>(k + half_width())]; }
  bool is_delta() const noexcept { return taps.size() == 1 && taps[0] == 1.0; }

  static PsfKernel delta();
};

/// Smallest w with tails <= 1e-3 of the peak, plus room for the gaussian, capped at max_w.
int default_half_width(const PsfVector& p, int max_w);
int default_half_width(const PsfBox& box, int max_w);

/// Throws DomainError if p lies outside `box` or w < 1.
PsfKernel render_psf(const PsfVector& p, int w, const PsfBox& box = PsfBox{});

/// "Same" zero-padded 1-D convolution / correlation of one column.
void convolve_column(std::span<const double> in, const PsfKernel& k, std::span<double> out);
void correlate_column(std::span<const double> in, const PsfKernel& k, std::span<double> out);

LineScanSet apply_psf(const LineScanSet& r, std::span<const PsfKernel> kernels);
LineScanSet apply_psf_adjoint(const LineScanSet& r, std::span<const PsfKernel> kernels);

struct PsfGradient {
  std::array<std::vector<double>, PsfVector::kDim> d_taps;  ///< d taps / d p_c
  std::array<bool, PsfVector::kDim> one_sided{};            ///< boundary flag per coordinate
};

/// Central differences with step 1e-6 * max(1, |p_c|); one-sided where the
/// central stencil would leave the box.
PsfGradient psf_param_gradient(const PsfVector& p, int w, const PsfBox& box = PsfBox{});

/// Directional derivative of the taps along `direction`.
std::vector<double> psf_param_gradient(const PsfVector& p, int w, const PsfVector& direction,
                                       const PsfBox& box = PsfBox{});

/// g[k] = sum_t a[t] * b[t - k] for k = -w..w: the gradient of <a, psi * b> with respect to the taps.
std::vector<double> tap_correlation(std::span<const double> a, std::span<const double> b, int w);

}  // namespace lscs
