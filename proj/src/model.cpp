#include "lscs/model.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>
#include <sstream>

namespace lscs {

namespace {

bool is_smooth(std::size_t v) {
  for (std::size_t p : {2u, 3u, 5u, 7u})
    while (v % p == 0) v /= p;
  return v == 1;
}

}  // namespace

// ---------------------------------------------------------------------------
// Grid
// ---------------------------------------------------------------------------

Grid::Grid(std::size_t n, std::vector<double> values) : n_(n), data_(std::move(values)) {
  if (data_.size() != n * n)
    throw DomainError("grid of side " + std::to_string(n) + " needs " + std::to_string(n * n) +
                      " values, got " + std::to_string(data_.size()));
}

double Grid::sum() const noexcept { return std::accumulate(data_.begin(), data_.end(), 0.0); }

double Grid::norm() const noexcept {
  double s = 0.0;
  for (double v : data_) s += v * v;
  return std::sqrt(s);
}

double Grid::max() const noexcept {
  return data_.empty() ? 0.0 : *std::max_element(data_.begin(), data_.end());
}

double Grid::dot(const Grid& other) const {
  if (other.n_ != n_) throw DomainError("grid size mismatch in dot product");
  double s = 0.0;
  for (std::size_t i = 0; i < data_.size(); ++i) s += data_[i] * other.data_[i];
  return s;
}

bool Grid::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

Image::Image(std::size_t n, double pixel_size) : Image(n, std::vector<double>(n * n, 0.0), pixel_size) {}

Image::Image(std::size_t n, std::vector<double> values, double pixel_size)
    : Image(Grid(n, std::move(values)), pixel_size) {}

Image::Image(Grid grid, double pixel_size) : Grid(std::move(grid)), pixel_size_(pixel_size) {
  if (n() < 2) throw DomainError("image side must be at least 2");
  if (!all_finite()) throw DomainError("image contains non-finite values");
  if (!(pixel_size_ > 0.0)) throw DomainError("pixel size must be positive");
}

SparseMap::SparseMap(std::size_t n, std::vector<double> values) : SparseMap(Grid(n, std::move(values))) {}

SparseMap::SparseMap(Grid grid) : Grid(std::move(grid)) {
  for (double v : values())
    if (!std::isfinite(v) || v < 0.0) throw DomainError("sparse map entries must be finite and nonnegative");
}

std::vector<Pixel> SparseMap::support() const {
  std::vector<Pixel> out;
  for (std::size_t r = 0; r < n(); ++r)
    for (std::size_t c = 0; c < n(); ++c)
      if ((*this)(r, c) > 0.0) out.push_back({r, c});
  return out;
}

// ---------------------------------------------------------------------------
// Geometry
// ---------------------------------------------------------------------------

std::size_t padded_size(std::size_t n) {
  auto target = static_cast<std::size_t>(std::ceil(std::sqrt(2.0) * static_cast<double>(n)));
  std::size_t size = std::max<std::size_t>(target, n);
  while (size % 2 != n % 2 || !is_smooth(size)) ++size;
  return size;
}

double wrap_degrees(double degrees) {
  double w = std::fmod(degrees + 180.0, 360.0);
  if (w < 0.0) w += 360.0;
  return w - 180.0;
}

void ScanGeometry::validate() const {
  if (angles_deg.empty()) throw DomainError("scan geometry needs at least one angle");
  if (n < 2) throw DomainError("scan geometry image side must be at least 2");
  for (double a : angles_deg)
    if (!std::isfinite(a) || a < -180.0 || a >= 180.0)
      throw DomainError("scan angle " + std::to_string(a) + " outside [-180, 180)");
  std::vector<double> sorted = angles_deg;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
    throw DomainError("scan angles must be pairwise distinct");
}

ScanGeometry ScanGeometry::equispaced(std::size_t m, std::size_t n) {
  ScanGeometry g;
  g.n = n;
  g.angles_deg.reserve(m);
  for (std::size_t i = 0; i < m; ++i) g.angles_deg.push_back(180.0 * static_cast<double>(i) / static_cast<double>(m));
  return g;
}

LineScanSet::LineScanSet(ScanGeometry geometry, std::size_t rows)
    : LineScanSet(std::move(geometry), rows, std::vector<double>()) {}

LineScanSet::LineScanSet(ScanGeometry geometry, std::size_t rows, std::vector<double> column_major)
    : geometry_(std::move(geometry)), rows_(rows), data_(std::move(column_major)) {
  if (data_.empty()) data_.assign(rows_ * geometry_.m(), 0.0);
  if (data_.size() != rows_ * geometry_.m())
    throw DomainError("line scan set needs rows*m = " + std::to_string(rows_ * geometry_.m()) + " values, got " +
                      std::to_string(data_.size()));
  if (!all_finite()) throw DomainError("line scan set contains non-finite values");
}

double LineScanSet::dot(const LineScanSet& other) const {
  if (other.rows_ != rows_ || other.m() != m()) throw DomainError("line scan shape mismatch in dot product");
  double s = 0.0;
  for (std::size_t i = 0; i < data_.size(); ++i) s += data_[i] * other.data_[i];
  return s;
}

double LineScanSet::norm() const noexcept {
  double s = 0.0;
  for (double v : data_) s += v * v;
  return std::sqrt(s);
}

bool LineScanSet::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

// ---------------------------------------------------------------------------
// Motif
// ---------------------------------------------------------------------------

void Motif::validate() const {
  if (!(radius > 0.0) || !std::isfinite(radius)) throw DomainError("motif radius must be positive");
  if (supersample < 1) throw DomainError("motif supersample factor must be >= 1");
}

Motif Motif::parse(std::string_view text) {
  auto colon = text.find(':');
  if (colon == std::string_view::npos) throw DomainError("motif spec '" + std::string(text) + "' is not kind:radius");
  std::string_view kind = text.substr(0, colon);
  std::string_view rest = text.substr(colon + 1);
  std::string_view norm;
  if (auto c2 = rest.find(':'); c2 != std::string_view::npos) {
    norm = rest.substr(c2 + 1);
    rest = rest.substr(0, c2);
  }
  Motif m;
  if (kind == "disc") {
    m.kind = MotifKind::disc;
    m.normalization = MotifNormalization::unit_mass;
  } else if (kind == "gauss" || kind == "gaussian") {
    m.kind = MotifKind::gaussian;
    m.normalization = MotifNormalization::unit_line_projection;
  } else {
    throw DomainError("unknown motif kind '" + std::string(kind) + "' (expected disc or gauss)");
  }
  std::string r(rest);
  char* end = nullptr;
  m.radius = std::strtod(r.c_str(), &end);
  if (r.empty() || end != r.c_str() + r.size()) throw DomainError("motif radius '" + r + "' is not a number");
  if (norm == "mass") {
    m.normalization = MotifNormalization::unit_mass;
  } else if (norm == "line") {
    m.normalization = MotifNormalization::unit_line_projection;
  } else if (!norm.empty()) {
    throw DomainError("unknown motif normalization '" + std::string(norm) + "' (expected mass or line)");
  }
  m.validate();
  return m;
}

std::string Motif::to_string() const {
  std::ostringstream out;
  out.precision(17);
  out << (kind == MotifKind::disc ? "disc" : "gauss") << ':' << radius << ':'
      << (normalization == MotifNormalization::unit_mass ? "mass" : "line");
  return out.str();
}

// ---------------------------------------------------------------------------
// PSF parameters
// ---------------------------------------------------------------------------

void PsfBox::validate() const {
  for (std::size_t i = 0; i < PsfVector::kDim; ++i) {
    if (!std::isfinite(lower[i]) || !std::isfinite(upper[i]))
      throw DomainError("PSF box bounds must be finite");
    if (lower[i] > upper[i]) throw DomainError("PSF box has lower > upper in coordinate " + std::to_string(i));
    bool ok = i == PsfVector::sigma ? lower[i] >= 0.0 : lower[i] > 0.0;
    if (!ok) throw DomainError("PSF box lower bound must be > 0 (sigma >= 0) in coordinate " + std::to_string(i));
  }
}

bool PsfBox::contains(const PsfVector& p) const noexcept {
  for (std::size_t i = 0; i < PsfVector::kDim; ++i)
    if (!(p[i] >= lower[i] && p[i] <= upper[i])) return false;
  return true;
}

PsfVector PsfBox::project(const PsfVector& p) const noexcept {
  PsfVector q;
  for (std::size_t i = 0; i < PsfVector::kDim; ++i) q[i] = std::clamp(p[i], lower[i], upper[i]);
  return q;
}

bool PsfBox::collapsed() const noexcept {
  for (std::size_t i = 0; i < PsfVector::kDim; ++i)
    if (!collapsed(i)) return false;
  return true;
}

void PsfParams::validate() const {
  box.validate();
  for (std::size_t i = 0; i < lines.size(); ++i)
    if (!box.contains(lines[i])) throw DomainError("PSF parameters of line " + std::to_string(i) + " lie outside the box");
  if (coupling == PsfCoupling::shared_shape) {
    for (std::size_t i = 1; i < lines.size(); ++i)
      for (std::size_t c = 1; c < PsfVector::kDim; ++c)
        if (lines[i][c] != lines[0][c])
          throw DomainError("shared-shape PSF requires identical shape parameters on every line");
  }
}

PsfParams PsfParams::uniform(std::size_t m, const PsfVector& p, const PsfBox& box) {
  PsfParams out;
  out.lines.assign(m, p);
  out.box = box;
  return out;
}

void SolverConfig::validate() const {
  if (rounds < 1) throw DomainError("solver needs K >= 1 reweighting rounds");
  if (iterations < 1) throw DomainError("solver needs L >= 1 iterations");
  if (!(reweight_scale > 0.0)) throw DomainError("reweight scale C must be positive");
  if (!(epsilon > 0.0)) throw DomainError("reweight floor eps must be positive");
  if (!(inertia >= 0.0 && inertia < 1.0)) throw DomainError("inertia alpha must lie in [0, 1)");
  if (max_backtracks < 1) throw DomainError("max_backtracks must be >= 1");
  if (psf_half_width < 0) throw DomainError("psf half width must be >= 0");
}

}  // namespace lscs
