#pragma once

#include "lscs/io.hpp"
#include "lscs/model.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

namespace lscs::harness {

struct MatchReport {
  std::size_t components = 0;
  std::size_t spikes = 0;
  std::size_t matched = 0;
  bool success = false;
};

/// Thresholds X_hat at half its peak, takes 8-connected components and their
/// weighted centroids, and matches them one-to-one to the spikes of X0 within
/// `tol_px` (euclidean).
MatchReport match_support(const Grid& xhat, const SparseMap& x0, double tol_px = 1.0);
bool support_match(const Grid& xhat, const SparseMap& x0, double tol_px = 1.0);

/// |a/|a| - b/|b||_2, with a zero image normalizing to zero.
double normalized_image_error(const Grid& yhat, const Grid& y0);

/// Number of worker threads: `requested` if > 0, else LSCS_THREADS, else the core count.
unsigned resolve_threads(unsigned requested);

/// Runs job(i) for i in [0, count) on `threads` workers. Jobs must only write
/// their own result slot.
void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& job);

/// Per-trial seed from the campaign seed and the cell coordinates.
std::uint64_t trial_seed(std::uint64_t campaign_seed, std::uint64_t lines, std::uint64_t discs,
                         std::uint64_t trial, std::uint64_t stream = 0);

enum class PtMode { fixed_area, fixed_density };
enum class AngleMode { random, equispaced };

std::string to_string(PtMode m);
PtMode parse_pt_mode(const std::string& s);
AngleMode parse_angle_mode(const std::string& s);

/// Parses "2..16", "2..16:2" or "1,2,5".
std::vector<std::size_t> parse_range(const std::string& s);
std::string format_range(const std::vector<std::size_t>& v);

struct Campaign {
  PtMode mode = PtMode::fixed_area;
  std::vector<std::size_t> lines{2, 4, 6, 8};
  std::vector<std::size_t> discs{2, 4, 6, 8};
  std::size_t trials = 20;
  std::uint64_t seed = 0;
  std::size_t n = 60;          ///< image side; in fixed-density mode, the side at k = density_k
  std::size_t density_k = 0;   ///< reference k for fixed density; 0 = largest k in the grid
  double r = 3.0;
  double ratio = 1.0;          ///< minimum d / 2r
  std::string motif = "disc";  ///< motif kind, radius from r
  AngleMode angles = AngleMode::random;
  double tol_px = 1.0;
  bool log_runtime = false;    ///< add wall-clock seconds to the trial log (breaks byte identity)
  SolverConfig solver;
  unsigned threads = 0;

  void validate() const;
  /// Image side used for k discs.
  std::size_t side_for(std::size_t k) const;
  static Campaign from(const io::KeyValues& kv);
  void put(io::KeyValues& kv) const;
};

struct TrialOutcome {
  std::size_t lines = 0;
  std::size_t discs = 0;
  std::size_t trial = 0;
  std::size_t n = 0;
  std::uint64_t seed = 0;
  bool feasible = true;
  bool success = false;
  double relative_error = 0.0;
  double runtime_s = 0.0;
};

struct PtResult {
  Campaign campaign;
  std::vector<double> success;        ///< lines.size() x discs.size(), row-major; NaN = infeasible
  std::vector<TrialOutcome> trials;   ///< cell-major, then trial

  double at(std::size_t li, std::size_t ki) const { return success[li * campaign.discs.size() + ki]; }
};

/// One seeded experiment: sample, delta-PSF scan, reconstruct, match.
TrialOutcome run_trial(const Campaign& c, std::size_t lines, std::size_t discs, std::size_t trial);

PtResult phase_transition(const Campaign& c);

/// Smallest line count whose success fraction reaches `level`, per k; 0 if none.
std::vector<std::size_t> frontier(const PtResult& r, double level = 0.5);

std::string pt_csv(const PtResult& r);
std::string trials_csv(const PtResult& r);
/// k, n, frontier lines, line-probe samples N*n, point-probe samples n^2, ratio.
std::string efficiency_csv(const PtResult& r);
/// Grey-level heatmap of the success matrix (rows = lines, columns = k).
std::string pt_pgm(const PtResult& r);

/// Writes pt_<mode>.csv, efficiency_<mode>.csv, trials_<mode>.csv and pt_<mode>.pgm.
void write_campaign(const std::filesystem::path& dir, const PtResult& r);

// ---------------------------------------------------------------------------
// Reweighting versus vanilla Lasso
// ---------------------------------------------------------------------------

struct ReweightCampaign {
  std::vector<std::size_t> discs{8};
  std::size_t lines = 0;       ///< 0 = 8 below 16 discs, 16 otherwise
  std::size_t trials = 30;
  std::uint64_t seed = 0;
  std::size_t n = 60;
  double r = 3.0;
  double ratio = 1.0;
  double big_scale = 0.5;      ///< C of the single-round big-lambda Lasso
  double small_scale = 0.005;  ///< C of the single-round small-lambda Lasso
  SolverConfig solver;         ///< reweighted run; the Lasso runs use K = 1 and K*L iterations
  unsigned threads = 0;

  void validate() const;
  std::size_t lines_for(std::size_t k) const { return lines ? lines : (k < 16 ? 8 : 16); }
  static ReweightCampaign from(const io::KeyValues& kv);
  void put(io::KeyValues& kv) const;
};

struct ReweightRow {
  std::size_t discs = 0;
  std::size_t lines = 0;
  double reweight = 0.0;
  double lasso_big = 0.0;
  double lasso_small = 0.0;
};

struct ReweightResult {
  ReweightCampaign campaign;
  std::vector<ReweightRow> rows;            ///< mean errors per k
  std::vector<std::array<double, 3>> errors;  ///< per trial (reweight, big, small), k-major
};

ReweightResult reweight_comparison(const ReweightCampaign& c);
std::string reweight_csv(const ReweightResult& r);

}  // namespace lscs::harness
