#pragma once

#include "lscs/model.hpp"
#include "lscs/motif.hpp"
#include "lscs/ops.hpp"
#include "lscs/psf.hpp"

#include <filesystem>
#include <optional>
#include <vector>

namespace lscs {

/// h(X, p) = sum_i 1/2 |S{psi(p_i) * L_i[D * X]} - R_i|^2 with its gradients.
/// Caches the projector and motif kernel; not thread-safe.
class SmoothObjective {
 public:
  /// `psf_half_width` = 0 renders every line at its own default width.
  SmoothObjective(LineScanSet scans, const Motif& motif, std::size_t stride, int psf_half_width = 0);

  const LineScanSet& scans() const noexcept { return scans_; }
  const ScanGeometry& geometry() const noexcept { return scans_.geometry(); }
  std::size_t n() const noexcept { return scans_.geometry().n; }
  std::size_t stride() const noexcept { return stride_; }
  std::size_t sweep_length() const noexcept;
  int psf_half_width() const noexcept { return half_width_; }
  const MotifKernel& motif_kernel() const noexcept { return kernel_; }

  /// P = L[D * X] at full sweep resolution. h depends on X only through P.
  LineScanSet lines(const Grid& x);
  std::vector<PsfKernel> kernels(const std::optional<PsfParams>& psf) const;

  /// S{psi * P} - R.
  LineScanSet residual(const LineScanSet& lines, const std::vector<PsfKernel>& kernels) const;
  double value(const LineScanSet& lines, const std::vector<PsfKernel>& kernels) const;
  Grid grad_x(const LineScanSet& residual, const std::vector<PsfKernel>& kernels);
  /// Per-line gradient with respect to each coordinate of p_i.
  std::vector<PsfVector> grad_p(const LineScanSet& lines, const LineScanSet& residual, const PsfParams& psf) const;

  double value(const Grid& x, const std::optional<PsfParams>& psf);

 private:
  LineScanSet scans_;
  std::size_t stride_;
  int half_width_;
  MotifKernel kernel_;
  LineProjector projector_;
};

double smooth_objective(const Grid& x, const std::optional<PsfParams>& psf, const LineScanSet& scans,
                        const Motif& motif, std::size_t stride = 1);
Grid grad_X(const Grid& x, const std::optional<PsfParams>& psf, const LineScanSet& scans, const Motif& motif,
            std::size_t stride = 1);
std::vector<PsfVector> grad_p(const Grid& x, const PsfParams& psf, const LineScanSet& scans, const Motif& motif,
                              std::size_t stride = 1);

/// Elementwise max(v - t_lambda, 0).
Grid prox_step(const Grid& v, const Grid& t_lambda);

/// One accepted X step and its sufficient-decrease test.
struct StepRecord {
  int round = 0;
  int iteration = 0;
  double step = 0.0;     ///< accepted t
  double h_new = 0.0;    ///< h(X+, p)
  double bound = 0.0;    ///< h(Y, p) + <grad, X+ - Y> + |X+ - Y|^2 / 2t
  int backtracks = 0;
  bool restarted = false;
};

struct IpalmState {
  SparseMap x;
  std::optional<PsfParams> psf;
  std::vector<double> objective;  ///< sum(lambda X) + h after each iteration
  std::vector<double> smooth;     ///< h after each iteration
  std::vector<StepRecord> steps;
  int iterations = 0;
};

/// L iterations of inertial PALM with backtracking. The p block is skipped
/// when `psf` is absent or its box is a point.
IpalmState ipalm(SmoothObjective& h, const SparseMap& x_init, const std::optional<PsfParams>& psf_init,
                 const Grid& lambda, const SolverConfig& config, int round = 0);

struct SolverResult {
  SparseMap x;
  Image y;                       ///< D * X
  std::optional<PsfParams> psf;
  std::vector<double> objective;
  std::vector<double> smooth;
  std::vector<int> round_of_iteration;
  std::vector<Grid> lambdas;     ///< one per round
  std::vector<StepRecord> steps;
  Grid location_map;             ///< 1{X >= 0.5 max X}
};

Grid location_map(const Grid& x);

/// Reweighted, PSF-calibrating reconstruction. `psf_init` absent means a delta PSF.
SolverResult reconstruct(const LineScanSet& scans, const Motif& motif, const std::optional<PsfParams>& psf_init,
                         const SolverConfig& config, std::size_t stride = 1);

/// Writes Xhat.csv, Yhat.csv, locmap.csv, phat.csv (if calibrated), trace.csv,
/// lambda_<k>.csv and meta.txt into `dir`.
void write_solver_result(const std::filesystem::path& dir, const SolverResult& result, const SolverConfig& config,
                         const Motif& motif);

}  // namespace lscs
