#include "lscs/analysis.hpp"

#include "fft.hpp"
#include "lscs/motif.hpp"
#include "lscs/ops.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <sstream>

namespace lscs::analysis {

namespace {

Eigen::MatrixXd to_eigen(const GramMatrix& g) {
  Eigen::MatrixXd m(g.k, g.k);
  for (std::size_t i = 0; i < g.k; ++i)
    for (std::size_t j = 0; j < g.k; ++j) m(i, j) = g(i, j);
  return m;
}

// Band-limited unit impulse centred at fractional sample tau; the Nyquist bin
// is left unshifted, as in the shear rotation.
std::vector<double> shifted_delta(std::size_t N, double tau) {
  detail::RealFftBatch fft(N, 1);
  detail::AlignedBuffer<detail::cplx> spec(N / 2 + 1);
  detail::AlignedBuffer<double> out(N);
  const std::size_t last = N % 2 == 0 ? N / 2 : N / 2 + 1;
  for (std::size_t k = 0; k < N / 2 + 1; ++k)
    spec[k] = k < last ? std::polar(1.0, -2.0 * M_PI * double(k) * tau / double(N)) : detail::cplx(1.0);
  fft.inverse(spec.data(), out.data());
  std::vector<double> v(out.data(), out.data() + N);
  for (double& x : v) x /= double(N);
  return v;
}

Point to_point(const Pixel& p) { return {static_cast<double>(p.col), static_cast<double>(p.row)}; }

LineScanSet motif_response(LineProjector& proj, const MotifKernel& kernel, const Pixel& w) {
  Grid spike(proj.geometry().n);
  spike(w.row, w.col) = 1.0;
  return proj.project(kernel.apply(spike));
}

}  // namespace

// ---------------------------------------------------------------------------
// Gram matrices
// ---------------------------------------------------------------------------

GramMatrix empirical_gram(const std::vector<Pixel>& centers, const Motif& motif, const ScanGeometry& geom) {
  for (const auto& c : centers)
    if (c.row >= geom.n || c.col >= geom.n) throw DomainError("Gram centre outside the grid");
  LineProjector proj(geom);
  MotifKernel kernel(motif, geom.n);
  std::vector<LineScanSet> cols;
  cols.reserve(centers.size());
  for (const auto& c : centers) cols.push_back(motif_response(proj, kernel, c));

  GramMatrix g;
  g.k = centers.size();
  g.values.assign(g.k * g.k, 0.0);
  g.mode = GramMode::empirical;
  for (const auto& c : centers) g.centers.push_back(to_point(c));
  for (std::size_t i = 0; i < g.k; ++i)
    for (std::size_t j = i; j < g.k; ++j) g(i, j) = g(j, i) = cols[i].dot(cols[j]);
  return g;
}

GramMatrix approx_gram(const std::vector<Point>& centers, double r) {
  if (!(r > 0.0)) throw DomainError("motif radius must be > 0");
  GramMatrix g;
  g.k = centers.size();
  g.values.assign(g.k * g.k, 0.0);
  g.centers = centers;
  g.mode = GramMode::expected_approx;
  const double s = 1.0 / (4.0 * r * r);
  for (std::size_t i = 0; i < g.k; ++i)
    for (std::size_t j = i; j < g.k; ++j) {
      double dx = centers[i].x - centers[j].x, dy = centers[i].y - centers[j].y;
      g(i, j) = g(j, i) = 1.0 / std::sqrt(1.0 + (dx * dx + dy * dy) * s);
    }
  return g;
}

double least_eigenvalue_closed_form(const GramMatrix& g) {
  switch (g.k) {
    case 1:
      return g(0, 0);
    case 2: {
      double m = 0.5 * (g(0, 0) + g(1, 1)), d = 0.5 * (g(0, 0) - g(1, 1));
      return m - std::sqrt(d * d + g(0, 1) * g(0, 1));
    }
    case 3: {
      // Trigonometric roots of the characteristic cubic.
      const double a = g(0, 0), b = g(1, 1), c = g(2, 2), d = g(0, 1), e = g(1, 2), f = g(0, 2);
      const double q = (a + b + c) / 3.0;
      const double p1 = d * d + e * e + f * f;
      const double p2 = (a - q) * (a - q) + (b - q) * (b - q) + (c - q) * (c - q) + 2.0 * p1;
      if (p2 == 0.0) return q;
      const double p = std::sqrt(p2 / 6.0);
      const double b00 = (a - q) / p, b11 = (b - q) / p, b22 = (c - q) / p, b01 = d / p, b12 = e / p, b02 = f / p;
      const double det = b00 * (b11 * b22 - b12 * b12) - b01 * (b01 * b22 - b12 * b02) + b02 * (b01 * b12 - b11 * b02);
      const double phi = std::acos(std::clamp(det / 2.0, -1.0, 1.0)) / 3.0;
      return q + 2.0 * p * std::cos(phi + 2.0 * M_PI / 3.0);
    }
    default:
      throw DomainError("closed-form eigenvalues only for k <= 3");
  }
}

double least_eigenvalue(const GramMatrix& g) {
  if (g.k == 0) throw DomainError("empty Gram matrix");
  double scale = 0.0, asym = 0.0;
  for (std::size_t i = 0; i < g.k; ++i)
    for (std::size_t j = 0; j < g.k; ++j) {
      scale = std::max(scale, std::abs(g(i, j)));
      asym = std::max(asym, std::abs(g(i, j) - g(j, i)));
    }
  if (asym > 1e-8 * std::max(scale, 1e-300)) throw DomainError("Gram matrix is not symmetric");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(to_eigen(g), Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw Error("symmetric eigensolver failed");
  const double lam = es.eigenvalues()(0);
  if (g.k <= 3) {
    const double ref = least_eigenvalue_closed_form(g);
    if (std::abs(ref - lam) > 1e-9 * std::max(1.0, scale))
      throw Error("eigensolver and closed form disagree: " + std::to_string(lam) + " vs " + std::to_string(ref));
  }
  return lam;
}

std::vector<Point> hex_lattice_square(double extent, double d) {
  if (!(extent > 0.0) || !(d > 0.0)) throw DomainError("lattice extent and spacing must be > 0");
  const double half = 0.5 * extent * d, h = d * std::sqrt(3.0) / 2.0;
  const double tol = 1e-9 * d;
  const int rows = static_cast<int>(std::ceil(half / h)) + 1, cols = static_cast<int>(std::ceil(half / d)) + 1;
  std::vector<Point> out;
  for (int i = -rows; i <= rows; ++i)
    for (int j = -cols; j <= cols; ++j) {
      Point p{(j + 0.5 * (((i % 2) + 2) % 2)) * d, i * h};
      if (std::abs(p.x) <= half + tol && std::abs(p.y) <= half + tol) out.push_back(p);
    }
  return out;
}

double hex_least_eigenvalue(double extent, double ratio) {
  const double d = 1.0;
  return least_eigenvalue(approx_gram(hex_lattice_square(extent, d), d / (2.0 * ratio)));
}

// ---------------------------------------------------------------------------
// Coherence
// ---------------------------------------------------------------------------

CoherenceBounds coherence_bounds(double r, double d) {
  if (!(r > 0.0) || d < 0.0) throw DomainError("need r > 0 and d >= 0");
  CoherenceBounds b;
  b.lower = d <= 2.0 * r ? 1.0 - d * d / (8.0 * r * r) : r / (2.0 * d);
  b.upper = 1.0 / std::sqrt(1.0 + d * d / (4.0 * r * r));
  return b;
}

double expected_coherence(double r, double d) {
  const double a = d * d / (4.0 * r * r);
  return std::exp(-0.5 * a) * std::cyl_bessel_i(0.0, 0.5 * a);
}

double normalized_coherence(double r, double d, std::size_t m) {
  const int reach = static_cast<int>(std::ceil(8.5 * r));
  std::size_t n = static_cast<std::size_t>(std::ceil(d)) + 2 * reach + 4;
  n += n % 2;
  const std::size_t c = n / 2;
  const auto lo = static_cast<std::size_t>(std::floor(0.5 * d)), hi = static_cast<std::size_t>(std::ceil(0.5 * d));
  Motif g{MotifKind::gaussian, r, MotifNormalization::unit_line_projection};
  GramMatrix gm = empirical_gram({{c, c - lo}, {c, c + hi}}, g, ScanGeometry::equispaced(m, n));
  return gm(0, 1) / std::sqrt(gm(0, 0) * gm(1, 1));
}

// ---------------------------------------------------------------------------
// Spectrum
// ---------------------------------------------------------------------------

double analytic_spectrum(double r, double xi) {
  return 2.0 * r / (std::sqrt(M_PI) * xi) * std::exp(-4.0 * M_PI * M_PI * r * r * xi * xi);
}

double analytic_cutoff(double r, double eps) {
  double lo = 1e-12, hi = 1.0;
  while (analytic_spectrum(r, hi) > eps) hi *= 2.0;
  for (int it = 0; it < 200; ++it) {
    double mid = 0.5 * (lo + hi);
    (analytic_spectrum(r, mid) > eps ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

double cutoff_formula(double r, double eps) {
  return std::min(2.0 * r * r / eps, std::sqrt(std::abs(std::log(8.0 * r * r / eps))) + 0.2) / r;
}

double SpectrumReport::max_relative_deviation(double lo, double hi) const {
  double worst = 0.0;
  for (std::size_t i = 0; i < frequency.size(); ++i)
    if (frequency[i] >= lo && frequency[i] <= hi) worst = std::max(worst, std::abs(empirical[i] / analytic[i] - 1.0));
  return worst;
}

std::string SpectrumReport::to_csv() const {
  std::string out = "frequency,empirical,analytic\n";
  char buf[96];
  for (std::size_t i = 0; i < frequency.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", frequency[i], empirical[i], analytic[i]);
    out += buf;
  }
  return out;
}

SpectrumReport lowpass_spectrum(double r, std::size_t angles, std::size_t n, double eps) {
  if (angles < 8) throw DomainError("spectrum needs at least 8 angles");
  if (!(eps > 0.0)) throw DomainError("cutoff threshold must be > 0");
  Motif g{MotifKind::gaussian, r, MotifNormalization::unit_line_projection};
  MotifKernel kernel(g, n);
  LineProjector proj(ScanGeometry::equispaced(angles, n));
  Grid spike(n);
  spike(n / 2, n / 2) = 1.0;
  Grid k = kernel.apply_adjoint(proj.back_project(proj.project(kernel.apply(spike))));

  std::vector<double> mag(n * n);
  detail::fft2_magnitude(k.values().data(), n, mag.data());

  const std::size_t bins = n / 2 + 1;
  std::vector<double> emp(bins, 0.0), ana(bins, 0.0);
  std::vector<std::size_t> count(bins, 0);
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = 0; b < n; ++b) {
      const double fa = a <= n / 2 ? double(a) : double(a) - double(n);
      const double fb = b <= n / 2 ? double(b) : double(b) - double(n);
      const double rad = std::hypot(fa, fb);
      const auto bin = static_cast<std::size_t>(std::lround(rad));
      if (bin == 0 || bin >= bins) continue;
      emp[bin] += mag[a * n + b];
      ana[bin] += analytic_spectrum(r, rad / double(n));
      ++count[bin];
    }

  SpectrumReport rep;
  rep.r = r;
  rep.angles = angles;
  rep.n = n;
  rep.eps = eps;
  rep.analytic_cutoff = analytic_cutoff(r, eps);
  for (std::size_t b = 1; b < bins; ++b) {
    if (!count[b]) continue;
    rep.frequency.push_back(double(b) / double(n));
    rep.empirical.push_back(emp[b] / count[b]);
    rep.analytic.push_back(ana[b] / count[b]);
  }
  rep.cutoff = rep.frequency.empty() ? 0.0 : rep.frequency.back();
  for (std::size_t i = 0; i < rep.frequency.size(); ++i)
    if (rep.empirical[i] <= eps) {
      rep.cutoff = rep.frequency[i];
      break;
    }
  return rep;
}

// ---------------------------------------------------------------------------
// Certificate
// ---------------------------------------------------------------------------

std::string CertificateReport::summary() const {
  char buf[320];
  std::snprintf(buf, sizeof buf,
                "%s support_max_deviation=%.3e off_support_max=%.9f lambda_min=%.6e lambda_max=%.6e "
                "(field checked on grid points only)",
                pass ? "PASS" : "FAIL", support_max_deviation, off_support_max, lambda_min, lambda_max);
  return buf;
}

CertificateReport check_certificate(const SparseMap& x0, const Motif& motif, const ScanGeometry& geom,
                                    const LineScanSet& q) {
  if (x0.n() != geom.n) throw DomainError("sample side does not match the scan geometry");
  auto support = x0.support();
  if (support.empty()) throw DomainError("certificate needs a nonempty support");
  LineProjector proj(geom);
  if (q.m() != geom.m() || q.rows() != proj.sweep_length()) throw DomainError("certificate scan shape mismatch");
  MotifKernel kernel(motif, geom.n);

  CertificateReport rep;
  rep.field = kernel.apply_adjoint(proj.back_project(q));
  Grid on(geom.n);
  for (const auto& p : support) {
    on(p.row, p.col) = 1.0;
    rep.support_max_deviation = std::max(rep.support_max_deviation, std::abs(rep.field(p.row, p.col) - 1.0));
  }
  for (std::size_t i = 0; i < geom.n; ++i)
    for (std::size_t j = 0; j < geom.n; ++j)
      if (on(i, j) == 0.0) rep.off_support_max = std::max(rep.off_support_max, std::abs(rep.field(i, j)));

  GramMatrix g = empirical_gram(support, motif, geom);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(to_eigen(g), Eigen::EigenvaluesOnly);
  rep.lambda_min = es.eigenvalues()(0);
  rep.lambda_max = es.eigenvalues()(g.k - 1);
  rep.pass = rep.support_max_deviation <= 1e-6 && rep.off_support_max < 1.0 - 1e-6 &&
             rep.lambda_min > 1e-10 * rep.lambda_max;
  return rep;
}

LineScanSet dual_certificate(const SparseMap& x0, const Motif& motif, const ScanGeometry& geom) {
  auto support = x0.support();
  if (support.empty()) throw DomainError("certificate needs a nonempty support");
  LineProjector proj(geom);
  MotifKernel kernel(motif, geom.n);
  const std::size_t k = support.size(), m = geom.m(), rows = proj.sweep_length();
  const double sm = std::sqrt(static_cast<double>(m));

  const double centre = 0.5 * double(rows - 1), off = 0.5 * double(rows - geom.n);
  std::vector<LineScanSet> parts;
  for (const auto& w : support) {
    LineScanSet resp = motif_response(proj, kernel, w);
    LineScanSet qj(geom, rows);
    const double ur = double(w.row) + off - centre, uc = double(w.col) + off - centre;
    for (std::size_t i = 0; i < m; ++i) {
      const double th = geom.angle_rad(i);
      const std::vector<double> delta = shifted_delta(rows, centre + ur * std::cos(th) + uc * std::sin(th));
      double peak = 0.0;
      for (std::size_t t = 0; t < rows; ++t) peak += delta[t] * resp(t, i);
      const double beta = sm * peak;
      if (!(beta > 0.0)) throw DomainError("motif has no positive projection");
      for (std::size_t t = 0; t < rows; ++t) qj(t, i) = delta[t] / (sm * beta);
    }
    parts.push_back(std::move(qj));
  }

  Eigen::MatrixXd a(k, k);
  for (std::size_t l = 0; l < k; ++l) {
    Grid f = kernel.apply_adjoint(proj.back_project(parts[l]));
    for (std::size_t j = 0; j < k; ++j) a(j, l) = f(support[j].row, support[j].col);
  }
  Eigen::VectorXd c = a.fullPivLu().solve(Eigen::VectorXd::Ones(k));

  LineScanSet q(geom, rows);
  for (std::size_t l = 0; l < k; ++l)
    for (std::size_t v = 0; v < q.values().size(); ++v) q.values()[v] += c(l) * parts[l].values()[v];
  return q;
}

}  // namespace lscs::analysis
