#pragma once

#include "lscs/io.hpp"
#include "lscs/model.hpp"
#include "lscs/psf.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace lscs {

enum class Placement { random, hexagonal, explicit_list };
enum class Magnitudes { equal, uniform };

struct SampleSpec {
  std::size_t n = 64;
  std::size_t k = 1;
  double r = 3.0;               ///< motif radius, px
  double min_sep_ratio = 1.0;   ///< required d / 2r
  Magnitudes magnitudes = Magnitudes::equal;
  double mag_lo = 1.0, mag_hi = 1.0;
  Placement placement = Placement::random;
  std::vector<Pixel> centers;   ///< explicit placement only
  std::uint64_t seed = 0;
  int margin = -1;              ///< border kept free of centres; -1 = ceil(r)

  double min_distance() const noexcept { return 2.0 * r * min_sep_ratio; }
  void validate() const;

  static SampleSpec from(const io::KeyValues& kv);
  void put(io::KeyValues& kv) const;
};

/// Draws of the rejection sampler before giving up.
inline constexpr std::size_t kMaxPlacementDraws = 100000;

/// Throws InfeasibleError("infeasible density") when random placement fails.
SparseMap generate_sample(const SampleSpec& spec);

/// First k sites of a hexagonal lattice with edge d centred on pixel (n/2, n/2),
/// ordered by distance then angle, snapped to pixels.
std::vector<Pixel> hexagonal_centers(std::size_t k, double d, std::size_t n);

/// m distinct angles drawn uniformly from [-180, 180).
ScanGeometry random_geometry(std::size_t m, std::size_t n, std::uint64_t seed);

/// Rows 0, s, 2s, ... and the zero-filling adjoint back to `full_rows`.
LineScanSet downsample(const LineScanSet& r, std::size_t stride);
LineScanSet upsample(const LineScanSet& r, std::size_t stride, std::size_t full_rows);

/// One PSF kernel per line; w = 0 picks the default width per line.
std::vector<PsfKernel> render_kernels(const PsfParams& psf, int w, std::size_t sweep_length);

/// R = S{psi * L_Theta[D * X]} + noise. Without a PSF the blur is the identity.
LineScanSet simulate_scan(const SparseMap& x, const Motif& motif, const ScanGeometry& geom,
                          const std::optional<PsfParams>& psf, double noise_std, std::size_t stride,
                          std::uint64_t seed = 0);

}  // namespace lscs
