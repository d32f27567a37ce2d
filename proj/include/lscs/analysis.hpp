#pragma once

#include "lscs/model.hpp"

#include <string>
#include <utility>
#include <vector>

namespace lscs::analysis {

struct Point {
  double x = 0.0;
  double y = 0.0;
};

enum class GramMode { empirical, expected_approx };

/// Symmetric k x k matrix, row-major.
struct GramMatrix {
  std::size_t k = 0;
  std::vector<double> values;
  std::vector<Point> centers;
  GramMode mode = GramMode::empirical;

  double operator()(std::size_t i, std::size_t j) const noexcept { return values[i * k + j]; }
  double& operator()(std::size_t i, std::size_t j) noexcept { return values[i * k + j]; }
};

/// G_ij = <L[D * delta_wi], L[D * delta_wj]> summed over all lines of `geom`.
/// Coincident centres are allowed.
GramMatrix empirical_gram(const std::vector<Pixel>& centers, const Motif& motif, const ScanGeometry& geom);

/// G~_ij = (1 + |wi - wj|^2 / 4r^2)^(-1/2).
GramMatrix approx_gram(const std::vector<Point>& centers, double r);

/// Smallest eigenvalue; throws DomainError if |G - G^T| > 1e-8 * max|G|.
/// For k <= 3 the eigensolver is cross-checked against the characteristic polynomial.
double least_eigenvalue(const GramMatrix& g);
double least_eigenvalue_closed_form(const GramMatrix& g);

/// Hexagonal lattice points inside the square of side `extent * d` centred on a lattice point.
std::vector<Point> hex_lattice_square(double extent, double d);

/// lambda_min(G~) for hex_lattice_square(extent, d) with d / 2r = ratio.
double hex_least_eigenvalue(double extent, double ratio);

// ---------------------------------------------------------------------------
// Coherence of two motifs
// ---------------------------------------------------------------------------

struct CoherenceBounds {
  double lower = 0.0;
  double upper = 0.0;
};

/// Lower (1 - d^2/8r^2 for d <= 2r, else r/2d) and upper (1 + d^2/4r^2)^(-1/2) bounds.
CoherenceBounds coherence_bounds(double r, double d);

/// exp(-a/2) I0(a/2), a = d^2/4r^2: the angle-averaged inner product of two
/// continuous unit-projection gaussians.
double expected_coherence(double r, double d);

/// G_12 / sqrt(G_11 G_22) for two gaussian motifs a distance d apart (along a
/// grid row), m equispaced angles, grid side chosen to hold both.
double normalized_coherence(double r, double d, std::size_t m);

// ---------------------------------------------------------------------------
// Low-pass spectrum
// ---------------------------------------------------------------------------

/// 2r / (sqrt(pi) |xi|) * exp(-4 pi^2 r^2 |xi|^2), xi in cycles per pixel.
double analytic_spectrum(double r, double xi);
/// Where the analytic spectrum falls to eps.
double analytic_cutoff(double r, double eps);
/// (1/r) * min{2r^2/eps, sqrt|log(8r^2/eps)| + 0.2}.
double cutoff_formula(double r, double eps);

struct SpectrumReport {
  double r = 0.0;
  std::size_t angles = 0;
  std::size_t n = 0;
  double eps = 0.01;
  std::vector<double> frequency;  ///< bin centre, cycles per pixel
  std::vector<double> empirical;  ///< radially averaged |DFT| of the kernel
  std::vector<double> analytic;   ///< analytic spectrum averaged over the same DFT samples
  double cutoff = 0.0;            ///< first frequency with empirical <= eps
  double analytic_cutoff = 0.0;

  /// max |empirical / analytic - 1| over bins with lo <= f <= hi.
  double max_relative_deviation(double lo, double hi) const;
  std::string to_csv() const;
};

/// Kernel D * L*L[D * delta] for a unit-projection gaussian of radius r and
/// `angles` equispaced angles on an n x n grid; requires angles >= 8.
SpectrumReport lowpass_spectrum(double r, std::size_t angles, std::size_t n, double eps = 0.01);

// ---------------------------------------------------------------------------
// Dual certificate
// ---------------------------------------------------------------------------

struct CertificateReport {
  double support_max_deviation = 0.0;  ///< max |F - 1| on the support
  double off_support_max = 0.0;        ///< max |F| elsewhere on the grid
  double lambda_min = 0.0;             ///< of the empirical Gram of the support
  double lambda_max = 0.0;
  bool pass = false;
  Grid field;

  std::string summary() const;
};

/// Evaluates F = D (*) L*[Q] on the pixel grid; PASS needs |F - 1| <= 1e-6 on
/// the support, |F| < 1 - 1e-6 elsewhere, and a Gram with
/// lambda_min > 1e-10 * lambda_max.
CertificateReport check_certificate(const SparseMap& x0, const Motif& motif, const ScanGeometry& geom,
                                    const LineScanSet& q);

/// One weighted spike per (line, motif) at the sweep position of the motif
/// centre, rendered as a band-limited impulse at that fractional position.
/// Spike weights 1/(sqrt(m) beta_ij) are rescaled per motif so F = 1 on the support.
LineScanSet dual_certificate(const SparseMap& x0, const Motif& motif, const ScanGeometry& geom);

}  // namespace lscs::analysis
