#include "lscs/ops.hpp"

#include "fft.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

namespace lscs {

using detail::AlignedBuffer;
using detail::cplx;
using detail::RealFftBatch;

namespace {

// out[x][y] = in[...] for a rotation by q*90 degrees about the centre.
void quarter_turn(const double* in, double* out, std::size_t N, int q) {
  const std::size_t L = N - 1;
  for (std::size_t x = 0; x < N; ++x)
    for (std::size_t y = 0; y < N; ++y) {
      double v;
      switch (q) {
        case 1: v = in[(L - y) * N + x]; break;
        case 2: v = in[(L - x) * N + (L - y)]; break;
        case 3: v = in[y * N + (L - x)]; break;
        default: v = in[x * N + y]; break;
      }
      out[x * N + y] = v;
    }
}

void transpose(const double* in, double* out, std::size_t N) {
  constexpr std::size_t B = 16;
  for (std::size_t i0 = 0; i0 < N; i0 += B)
    for (std::size_t j0 = 0; j0 < N; j0 += B)
      for (std::size_t i = i0; i < std::min(N, i0 + B); ++i)
        for (std::size_t j = j0; j < std::min(N, j0 + B); ++j) out[j * N + i] = in[i * N + j];
}

// spec[k] *= exp(i 2 pi k s / N) for k < N/2; the Nyquist bin of an even
// length is left alone so the shift stays a real orthogonal map.
void apply_shift_phase(cplx* spec, std::size_t N, double s) {
  const std::size_t bins = N / 2 + 1;
  const std::size_t last = N % 2 == 0 ? bins - 1 : bins;
  const cplx step = std::polar(1.0, 2.0 * M_PI * s / static_cast<double>(N));
  cplx ph = 1.0;
  for (std::size_t k = 1; k < last; ++k) {
    ph *= step;
    spec[k] *= ph;
  }
}

struct Workspace {
  std::size_t N = 0, bins = 0;
  RealFftBatch batch, single;
  AlignedBuffer<double> a, b, line;
  AlignedBuffer<cplx> c, spec;

  explicit Workspace(std::size_t n)
      : N(n),
        bins(n / 2 + 1),
        batch(n, n),
        single(n, 1),
        a(n * n),
        b(n * n),
        line(n),
        c(n * (n / 2 + 1)),
        spec(n / 2 + 1) {}

  // Row x of `data` becomes row(y + coef * (x - c)) via DFT phases.
  void row_shear(double* data, double coef) {
    batch.forward(data, c.data());
    const double centre = 0.5 * static_cast<double>(N - 1);
    for (std::size_t x = 0; x < N; ++x)
      apply_shift_phase(c.data() + x * bins, N, coef * (static_cast<double>(x) - centre));
    batch.inverse(c.data(), data);
    const double inv = 1.0 / static_cast<double>(N);
    for (std::size_t i = 0; i < N * N; ++i) data[i] *= inv;
  }
};

}  // namespace

// ---------------------------------------------------------------------------
// Plans
// ---------------------------------------------------------------------------

ShearAngle decompose_angle(double degrees) {
  const double w = wrap_degrees(degrees);
  const int q = static_cast<int>(std::floor((w + 45.0) / 90.0));
  ShearAngle s;
  s.quarter_turns = ((q % 4) + 4) % 4;
  s.residual_deg = w - 90.0 * q;
  const double phi = s.residual_deg * (M_PI / 180.0);
  s.tan_half = std::tan(0.5 * phi);
  s.neg_sin = -std::sin(phi);
  return s;
}

ShearPlan::ShearPlan(const ScanGeometry& geom) : n(geom.n), n_padded(padded_size(geom.n)) {
  angles.reserve(geom.m());
  for (double a : geom.angles_deg) angles.push_back(decompose_angle(a));
}

Grid pad_centered(const Grid& img, std::size_t size) {
  const std::size_t n = img.n();
  if (size < n || (size - n) % 2 != 0) throw DomainError("padding must grow the grid symmetrically");
  const std::size_t off = (size - n) / 2;
  Grid out(size);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < n; ++c) out(r + off, c + off) = img(r, c);
  return out;
}

Grid crop_centered(const Grid& img, std::size_t size) {
  const std::size_t N = img.n();
  if (size > N || (N - size) % 2 != 0) throw DomainError("crop must shrink the grid symmetrically");
  const std::size_t off = (N - size) / 2;
  Grid out(size);
  for (std::size_t r = 0; r < size; ++r)
    for (std::size_t c = 0; c < size; ++c) out(r, c) = img(r + off, c + off);
  return out;
}

Grid rotate(const Grid& img, double degrees) {
  const std::size_t N = img.n();
  const ShearAngle s = decompose_angle(degrees);
  Workspace ws(N);
  quarter_turn(img.values().data(), ws.a.data(), N, s.quarter_turns);
  if (s.residual_deg != 0.0) {
    ws.row_shear(ws.a.data(), s.tan_half);
    transpose(ws.a.data(), ws.b.data(), N);
    ws.row_shear(ws.b.data(), s.neg_sin);
    transpose(ws.b.data(), ws.a.data(), N);
    ws.row_shear(ws.a.data(), s.tan_half);
  }
  return Grid(N, std::vector<double>(ws.a.data(), ws.a.data() + N * N));
}

Image rotate(const Image& img, double degrees) {
  return Image(rotate(static_cast<const Grid&>(img), degrees), img.pixel_size());
}

// ---------------------------------------------------------------------------
// LineProjector
// ---------------------------------------------------------------------------

struct LineProjector::Impl {
  ScanGeometry geom;
  ShearPlan plan;
  std::size_t N, off;
  Workspace ws;

  explicit Impl(const ScanGeometry& g)
      : geom(g), plan(g), N(plan.n_padded), off((plan.n_padded - g.n) / 2), ws(plan.n_padded) {}
};

LineProjector::LineProjector(const ScanGeometry& geom) {
  geom.validate();
  impl_ = std::make_unique<Impl>(geom);
}

LineProjector::~LineProjector() = default;
LineProjector::LineProjector(LineProjector&&) noexcept = default;
LineProjector& LineProjector::operator=(LineProjector&&) noexcept = default;

const ScanGeometry& LineProjector::geometry() const noexcept { return impl_->geom; }
const ShearPlan& LineProjector::plan() const noexcept { return impl_->plan; }
std::size_t LineProjector::sweep_length() const noexcept { return impl_->N; }

void LineProjector::project_angle(const Grid& y, std::size_t i, std::span<double> out) {
  Impl& m = *impl_;
  Workspace& ws = m.ws;
  const std::size_t N = m.N, n = m.geom.n, bins = ws.bins;
  if (y.n() != n) throw DomainError("image side does not match the scan geometry");
  const ShearAngle& s = m.plan.angles[i];
  const double scale = m.geom.scale();

  double* z = s.quarter_turns ? ws.b.data() : ws.a.data();
  std::fill(z, z + N * N, 0.0);
  for (std::size_t r = 0; r < n; ++r) std::memcpy(z + (r + m.off) * N + m.off, y.values().data() + r * n, n * sizeof(double));
  if (s.quarter_turns) quarter_turn(ws.b.data(), ws.a.data(), N, s.quarter_turns);

  if (s.residual_deg == 0.0) {
    for (std::size_t x = 0; x < N; ++x) {
      double acc = 0.0;
      for (std::size_t c = 0; c < N; ++c) acc += ws.a[x * N + c];
      out[x] = scale * acc;
    }
    return;
  }

  ws.row_shear(ws.a.data(), s.tan_half);
  transpose(ws.a.data(), ws.b.data(), N);
  ws.batch.forward(ws.b.data(), ws.c.data());

  // Sum over columns of the x-sheared image, done in the column spectra.
  std::fill(ws.spec.data(), ws.spec.data() + bins, cplx(0.0));
  const double centre = 0.5 * static_cast<double>(N - 1);
  for (std::size_t col = 0; col < N; ++col) {
    cplx* row = ws.c.data() + col * bins;
    apply_shift_phase(row, N, s.neg_sin * (static_cast<double>(col) - centre));
    for (std::size_t k = 0; k < bins; ++k) ws.spec[k] += row[k];
  }
  ws.single.inverse(ws.spec.data(), ws.line.data());
  const double f = scale / static_cast<double>(N);
  for (std::size_t x = 0; x < N; ++x) out[x] = f * ws.line[x];
}

void LineProjector::back_project_angle_add(std::span<const double> column, std::size_t i, Grid& acc) {
  Impl& m = *impl_;
  Workspace& ws = m.ws;
  const std::size_t N = m.N, n = m.geom.n, bins = ws.bins;
  if (column.size() != N) throw DomainError("scan column length does not match the sweep length");
  const ShearAngle& s = m.plan.angles[i];
  const double scale = m.geom.scale();

  if (s.residual_deg == 0.0) {
    for (std::size_t x = 0; x < N; ++x) std::fill(ws.a.data() + x * N, ws.a.data() + (x + 1) * N, scale * column[x]);
  } else {
    for (std::size_t x = 0; x < N; ++x) ws.line[x] = scale * column[x];
    ws.single.forward(ws.line.data(), ws.spec.data());
    const double centre = 0.5 * static_cast<double>(N - 1);
    for (std::size_t col = 0; col < N; ++col) {
      cplx* row = ws.c.data() + col * bins;
      std::copy(ws.spec.data(), ws.spec.data() + bins, row);
      apply_shift_phase(row, N, -s.neg_sin * (static_cast<double>(col) - centre));
    }
    ws.batch.inverse(ws.c.data(), ws.b.data());
    const double inv = 1.0 / static_cast<double>(N);
    for (std::size_t k = 0; k < N * N; ++k) ws.b[k] *= inv;
    transpose(ws.b.data(), ws.a.data(), N);
    ws.row_shear(ws.a.data(), -s.tan_half);
  }

  const double* src = ws.a.data();
  if (s.quarter_turns) {
    quarter_turn(ws.a.data(), ws.b.data(), N, 4 - s.quarter_turns);
    src = ws.b.data();
  }
  for (std::size_t r = 0; r < n; ++r) {
    const double* row = src + (r + m.off) * N + m.off;
    for (std::size_t c = 0; c < n; ++c) acc(r, c) += row[c];
  }
}

LineScanSet LineProjector::project(const Grid& y) {
  LineScanSet r(impl_->geom, impl_->N);
  for (std::size_t i = 0; i < r.m(); ++i) project_angle(y, i, r.column(i));
  return r;
}

Grid LineProjector::back_project(const LineScanSet& r) {
  if (r.m() != impl_->geom.m()) throw DomainError("scan set angle count does not match the projector");
  Grid acc(impl_->geom.n);
  for (std::size_t i = 0; i < r.m(); ++i) back_project_angle_add(r.column(i), i, acc);
  return acc;
}

LineScanSet line_project(const Grid& y, const ScanGeometry& geom) { return LineProjector(geom).project(y); }

Grid back_project(const LineScanSet& r) { return LineProjector(r.geometry()).back_project(r); }

}  // namespace lscs
