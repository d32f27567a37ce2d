#pragma once

#include "lscs/model.hpp"

#include <memory>
#include <vector>

namespace lscs {

/// Three-shear decomposition of one rotation: `quarter_turns` exact 90-degree
/// turns followed by a residual rotation in [-45, 45) degrees.
struct ShearAngle {
  int quarter_turns = 0;   ///< 0..3
  double residual_deg = 0.0;
  double tan_half = 0.0;   ///< y-shear coefficient tan(phi/2)
  double neg_sin = 0.0;    ///< x-shear coefficient -sin(phi)
};

ShearAngle decompose_angle(double degrees);

struct ShearPlan {
  std::size_t n = 0;
  std::size_t n_padded = 0;
  std::vector<ShearAngle> angles;

  explicit ShearPlan(const ScanGeometry& geom);
};

/// Rotates a square grid about its centre ((n-1)/2, (n-1)/2):
/// out(x, y) = in(x cos t - y sin t, x sin t + y cos t), rows as x. FFT shears
/// are circular, so content must sit inside the inscribed circle.
Grid rotate(const Grid& img, double degrees);
Image rotate(const Image& img, double degrees);

/// Centred zero padding to side `size` and its adjoint.
Grid pad_centered(const Grid& img, std::size_t size);
Grid crop_centered(const Grid& img, std::size_t size);

/// L_Theta and its adjoint for one geometry. Holds FFT workspace, so a
/// projector must not be used from two threads at once.
class LineProjector {
 public:
  explicit LineProjector(const ScanGeometry& geom);
  ~LineProjector();
  LineProjector(LineProjector&&) noexcept;
  LineProjector& operator=(LineProjector&&) noexcept;

  const ScanGeometry& geometry() const noexcept;
  const ShearPlan& plan() const noexcept;
  std::size_t sweep_length() const noexcept;

  LineScanSet project(const Grid& y);
  Grid back_project(const LineScanSet& r);

  /// One column (already scaled by 1/sqrt(m) when normalizing).
  void project_angle(const Grid& y, std::size_t i, std::span<double> out);
  /// Adds the back projection of one column into `acc` (n x n).
  void back_project_angle_add(std::span<const double> column, std::size_t i, Grid& acc);

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

LineScanSet line_project(const Grid& y, const ScanGeometry& geom);
Grid back_project(const LineScanSet& r);

}  // namespace lscs
