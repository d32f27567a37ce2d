#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace lscs {

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input file. `line()` is the 1-based line of the offending row.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error("row " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// A value violates a documented precondition or invariant.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A random construction could not satisfy its constraints.
class InfeasibleError : public Error {
 public:
  using Error::Error;
};

/// The reconstruction diverged or could not make progress.
class SolverError : public Error {
 public:
  using Error::Error;
};

// ---------------------------------------------------------------------------
// Grids
// ---------------------------------------------------------------------------

/// Dense square grid of doubles stored row-major.
class Grid {
 public:
  Grid() = default;
  explicit Grid(std::size_t n, double fill = 0.0) : n_(n), data_(n * n, fill) {}
  Grid(std::size_t n, std::vector<double> values);

  std::size_t n() const noexcept { return n_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double operator()(std::size_t row, std::size_t col) const noexcept { return data_[row * n_ + col]; }
  double& operator()(std::size_t row, std::size_t col) noexcept { return data_[row * n_ + col]; }

  std::span<const double> values() const noexcept { return data_; }
  std::span<double> values() noexcept { return data_; }

  double sum() const noexcept;
  double norm() const noexcept;
  double max() const noexcept;
  double dot(const Grid& other) const;
  bool all_finite() const noexcept;

  bool operator==(const Grid&) const = default;

 private:
  std::size_t n_ = 0;
  std::vector<double> data_;
};

/// Sample image Y or reconstruction D*X. `pixel_size` is metadata only.
class Image : public Grid {
 public:
  Image() = default;
  explicit Image(std::size_t n, double pixel_size = 1.0);
  Image(std::size_t n, std::vector<double> values, double pixel_size = 1.0);
  explicit Image(Grid grid, double pixel_size = 1.0);

  double pixel_size() const noexcept { return pixel_size_; }

 private:
  double pixel_size_ = 1.0;
};

struct Pixel {
  std::size_t row = 0;
  std::size_t col = 0;
  bool operator==(const Pixel&) const = default;
};

/// Nonnegative activation grid X; spikes are the nonzero pixels.
class SparseMap : public Grid {
 public:
  SparseMap() = default;
  explicit SparseMap(std::size_t n) : Grid(n) {}
  SparseMap(std::size_t n, std::vector<double> values);
  explicit SparseMap(Grid grid);

  /// Pixels with a strictly positive weight, in row-major order.
  std::vector<Pixel> support() const;
};

// ---------------------------------------------------------------------------
// Scan geometry and measurements
// ---------------------------------------------------------------------------

/// Side of the zero-padded rotation grid used for an n x n image.
std::size_t padded_size(std::size_t n);

/// Wraps an angle in degrees into [-180, 180).
double wrap_degrees(double degrees);

struct ScanGeometry {
  std::vector<double> angles_deg;
  std::size_t n = 0;       ///< image side length
  bool normalize = true;   ///< apply the 1/sqrt(m) factor

  std::size_t m() const noexcept { return angles_deg.size(); }
  std::size_t sweep_length() const { return padded_size(n); }
  double scale() const noexcept {
    return normalize && !angles_deg.empty() ? 1.0 / std::sqrt(static_cast<double>(angles_deg.size())) : 1.0;
  }
  double angle_rad(std::size_t i) const noexcept { return angles_deg[i] * (M_PI / 180.0); }

  /// Throws DomainError unless m >= 1, n >= 2, angles distinct and in [-180, 180).
  void validate() const;

  /// m angles i*180/m, i = 0..m-1.
  static ScanGeometry equispaced(std::size_t m, std::size_t n);
};

/// R: one column of samples per scan angle, `rows` samples per sweep.
class LineScanSet {
 public:
  LineScanSet() = default;
  LineScanSet(ScanGeometry geometry, std::size_t rows);
  LineScanSet(ScanGeometry geometry, std::size_t rows, std::vector<double> column_major);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t m() const noexcept { return geometry_.m(); }
  const ScanGeometry& geometry() const noexcept { return geometry_; }

  std::span<double> column(std::size_t i) noexcept { return {data_.data() + i * rows_, rows_}; }
  std::span<const double> column(std::size_t i) const noexcept { return {data_.data() + i * rows_, rows_}; }

  double operator()(std::size_t t, std::size_t i) const noexcept { return data_[i * rows_ + t]; }
  double& operator()(std::size_t t, std::size_t i) noexcept { return data_[i * rows_ + t]; }

  std::span<const double> values() const noexcept { return data_; }
  std::span<double> values() noexcept { return data_; }

  double dot(const LineScanSet& other) const;
  double norm() const noexcept;
  bool all_finite() const noexcept;

 private:
  ScanGeometry geometry_;
  std::size_t rows_ = 0;
  std::vector<double> data_;
};

// ---------------------------------------------------------------------------
// Motifs
// ---------------------------------------------------------------------------

enum class MotifKind { disc, gaussian };
enum class MotifNormalization { unit_mass, unit_line_projection };

struct Motif {
  MotifKind kind = MotifKind::disc;
  double radius = 1.0;  ///< pixels; gaussian standard deviation for the gaussian kind
  MotifNormalization normalization = MotifNormalization::unit_mass;
  int supersample = 1;  ///< disc only: s x s sub-pixel coverage, 1 = pixel-centre test

  void validate() const;

  /// Parses "kind:radius[:norm]" with kind in {disc, gauss, gaussian} and
  /// norm in {mass, line}. Discs default to unit mass, gaussians to unit line projection.
  static Motif parse(std::string_view text);
  std::string to_string() const;
};

// ---------------------------------------------------------------------------
// PSF parameters
// ---------------------------------------------------------------------------

/// p = (a, c_l, alpha_l, c_r, alpha_r, sigma) for one scan line.
struct PsfVector {
  static constexpr std::size_t kDim = 6;
  enum Coord : std::size_t { amplitude = 0, c_left, alpha_left, c_right, alpha_right, sigma };

  std::array<double, kDim> v{1.0, 1.0, 1.0, 1.0, 1.0, 0.0};

  double operator[](std::size_t i) const noexcept { return v[i]; }
  double& operator[](std::size_t i) noexcept { return v[i]; }
  bool operator==(const PsfVector&) const = default;
};

/// Axis-aligned feasible set for each line's PsfVector.
struct PsfBox {
  PsfVector lower{{1e-6, 1e-6, 1e-6, 1e-6, 1e-6, 0.0}};
  PsfVector upper{{1e6, 1e6, 1e6, 1e6, 1e6, 1e6}};

  void validate() const;
  bool contains(const PsfVector& p) const noexcept;
  PsfVector project(const PsfVector& p) const noexcept;
  bool collapsed(std::size_t coord) const noexcept { return lower[coord] == upper[coord]; }
  bool collapsed() const noexcept;

  static PsfBox point(const PsfVector& p) { return PsfBox{p, p}; }
};

/// How per-line parameters relate during calibration.
enum class PsfCoupling {
  shared_shape,  ///< one shape (c_l, alpha_l, c_r, alpha_r, sigma) for all lines, per-line amplitude
  independent,   ///< each line has its own full parameter vector
};

struct PsfParams {
  std::vector<PsfVector> lines;
  PsfBox box;
  PsfCoupling coupling = PsfCoupling::shared_shape;

  std::size_t m() const noexcept { return lines.size(); }
  /// Throws DomainError if the box is malformed or any line lies outside it.
  void validate() const;

  static PsfParams uniform(std::size_t m, const PsfVector& p, const PsfBox& box);
};

// ---------------------------------------------------------------------------
// Solver configuration
// ---------------------------------------------------------------------------

struct SolverConfig {
  int rounds = 6;                 ///< K, reweighting rounds
  int iterations = 50;            ///< L, iPalm iterations per round
  double reweight_scale = 0.1;    ///< C
  double epsilon = 1e-12;         ///< reweight floor
  double inertia = 0.9;           ///< alpha
  std::uint64_t seed = 0;
  int max_backtracks = 60;
  bool early_stop = true;
  double early_stop_tol = 1e-10;
  int early_stop_window = 10;
  bool monotone_restart = true;   ///< drop momentum when a step would raise the objective
  int psf_half_width = 0;         ///< 0 = derive from the PSF box

  void validate() const;
};

}  // namespace lscs
