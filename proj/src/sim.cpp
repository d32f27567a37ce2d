#include "lscs/sim.hpp"

#include "lscs/motif.hpp"
#include "lscs/ops.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <sstream>

namespace lscs {

namespace {

constexpr std::size_t kRestartAfter = 2000;

double dist(const Pixel& a, const Pixel& b) {
  return std::hypot(static_cast<double>(a.row) - static_cast<double>(b.row),
                    static_cast<double>(a.col) - static_cast<double>(b.col));
}

std::vector<Pixel> parse_centers(const std::string& text) {
  std::vector<Pixel> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ';')) {
    if (item.empty()) continue;
    std::size_t r = 0, c = 0;
    char sep = 0;
    std::istringstream is(item);
    if (!(is >> r >> sep >> c) || sep != ':') throw DomainError("centre '" + item + "' is not row:col");
    out.push_back({r, c});
  }
  return out;
}

}  // namespace

void SampleSpec::validate() const {
  if (n < 2) throw DomainError("sample side n must be >= 2");
  if (!(r > 0.0)) throw DomainError("motif radius r must be > 0");
  if (!(min_sep_ratio > 0.0)) throw DomainError("separation ratio must be > 0");
  if (magnitudes == Magnitudes::uniform && !(mag_lo > 0.0 && mag_lo <= mag_hi))
    throw DomainError("magnitude range needs 0 < lo <= hi");
  if (placement == Placement::explicit_list && centers.size() != k)
    throw DomainError("explicit placement needs exactly k centres");
  if (k == 0) throw DomainError("sample needs k >= 1 motifs");
}

SampleSpec SampleSpec::from(const io::KeyValues& kv) {
  SampleSpec s;
  s.n = static_cast<std::size_t>(kv.get("n", static_cast<long>(s.n)));
  s.k = static_cast<std::size_t>(kv.get("k", static_cast<long>(s.k)));
  s.r = kv.get("r", s.r);
  s.min_sep_ratio = kv.get("ratio", s.min_sep_ratio);
  std::string mags = kv.get("magnitudes", std::string("equal"));
  if (mags == "equal")
    s.magnitudes = Magnitudes::equal;
  else if (mags == "uniform")
    s.magnitudes = Magnitudes::uniform;
  else
    throw DomainError("magnitudes must be equal or uniform");
  s.mag_lo = kv.get("mag_lo", s.mag_lo);
  s.mag_hi = kv.get("mag_hi", s.mag_hi);
  std::string place = kv.get("placement", std::string("random"));
  if (place == "random")
    s.placement = Placement::random;
  else if (place == "hexagonal")
    s.placement = Placement::hexagonal;
  else if (place == "explicit")
    s.placement = Placement::explicit_list;
  else
    throw DomainError("placement must be random, hexagonal or explicit");
  s.centers = parse_centers(kv.get("centers", std::string()));
  s.seed = static_cast<std::uint64_t>(kv.get("seed", 0L));
  s.margin = kv.get("margin", s.margin);
  s.validate();
  return s;
}

void SampleSpec::put(io::KeyValues& kv) const {
  std::ostringstream num;
  num.precision(17);
  auto str = [&](double v) {
    num.str("");
    num << v;
    return num.str();
  };
  kv.set("n", std::to_string(n));
  kv.set("k", std::to_string(k));
  kv.set("r", str(r));
  kv.set("ratio", str(min_sep_ratio));
  kv.set("magnitudes", magnitudes == Magnitudes::equal ? "equal" : "uniform");
  kv.set("mag_lo", str(mag_lo));
  kv.set("mag_hi", str(mag_hi));
  kv.set("placement", placement == Placement::random ? "random" : placement == Placement::hexagonal ? "hexagonal" : "explicit");
  std::string cs;
  for (const auto& p : centers) cs += std::to_string(p.row) + ":" + std::to_string(p.col) + ";";
  kv.set("centers", cs);
  kv.set("seed", std::to_string(seed));
  kv.set("margin", std::to_string(margin));
}

SparseMap generate_sample(const SampleSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  const int margin = spec.margin >= 0 ? spec.margin : static_cast<int>(std::ceil(spec.r));
  const double dmin = spec.min_distance();

  std::vector<Pixel> centers;
  if (spec.placement == Placement::explicit_list) {
    centers = spec.centers;
  } else if (spec.placement == Placement::hexagonal) {
    centers = hexagonal_centers(spec.k, dmin, spec.n);
  } else {
    if (static_cast<int>(spec.n) - 2 * margin < 1) throw InfeasibleError("infeasible density");
    std::uniform_int_distribution<std::size_t> pos(margin, spec.n - 1 - margin);
    std::size_t draws = 0, stall = 0;
    while (centers.size() < spec.k) {
      if (++draws > kMaxPlacementDraws) throw InfeasibleError("infeasible density");
      Pixel p{pos(rng), pos(rng)};
      bool ok = std::all_of(centers.begin(), centers.end(), [&](const Pixel& q) { return dist(p, q) >= dmin; });
      if (ok) {
        centers.push_back(p);
        stall = 0;
      } else if (++stall == kRestartAfter) {
        // Early picks can block the rest; start over.
        centers.clear();
        stall = 0;
      }
    }
  }

  SparseMap x(spec.n);
  std::uniform_real_distribution<double> mag(spec.mag_lo, spec.mag_hi);
  for (std::size_t i = 0; i < centers.size(); ++i) {
    const Pixel& p = centers[i];
    if (p.row >= spec.n || p.col >= spec.n) throw DomainError("sample centre outside the grid");
    if (spec.placement == Placement::explicit_list)
      for (std::size_t j = 0; j < i; ++j)
        if (dist(p, centers[j]) < dmin) throw DomainError("explicit centres violate the separation ratio");
    if (x(p.row, p.col) != 0.0) throw DomainError("duplicate sample centre");
    x(p.row, p.col) = spec.magnitudes == Magnitudes::equal ? 1.0 : mag(rng);
  }
  return x;
}

std::vector<Pixel> hexagonal_centers(std::size_t k, double d, std::size_t n) {
  if (!(d > 0.0)) throw DomainError("lattice spacing must be > 0");
  const double c = static_cast<double>(n / 2);
  const double h = d * std::sqrt(3.0) / 2.0;
  const int rows = static_cast<int>(std::ceil(static_cast<double>(n) / h)) + 1;
  const int cols = static_cast<int>(std::ceil(static_cast<double>(n) / d)) + 1;

  struct Site {
    double dist, angle;
    long row, col;
  };
  std::vector<Site> sites;
  for (int i = -rows; i <= rows; ++i)
    for (int j = -cols; j <= cols; ++j) {
      double x = (j + 0.5 * (((i % 2) + 2) % 2)) * d, y = i * h;
      long pr = std::lround(c + y), pc = std::lround(c + x);
      if (pr < 0 || pc < 0 || pr >= static_cast<long>(n) || pc >= static_cast<long>(n)) continue;
      double dd = std::round(std::hypot(x, y) * 1e9) / 1e9;
      sites.push_back({dd, std::atan2(y, x), pr, pc});
    }
  if (sites.size() < k)
    throw DomainError("hexagonal lattice with spacing " + std::to_string(d) + " holds only " +
                      std::to_string(sites.size()) + " sites on a " + std::to_string(n) + " grid");
  std::sort(sites.begin(), sites.end(),
            [](const Site& a, const Site& b) { return a.dist != b.dist ? a.dist < b.dist : a.angle < b.angle; });
  std::vector<Pixel> out;
  for (std::size_t i = 0; i < k; ++i)
    out.push_back({static_cast<std::size_t>(sites[i].row), static_cast<std::size_t>(sites[i].col)});
  return out;
}

ScanGeometry random_geometry(std::size_t m, std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-180.0, 180.0);
  ScanGeometry g;
  g.n = n;
  std::set<double> seen;
  while (g.angles_deg.size() < m) {
    double a = u(rng);
    if (seen.insert(a).second) g.angles_deg.push_back(a);
  }
  return g;
}

LineScanSet downsample(const LineScanSet& r, std::size_t stride) {
  if (stride < 1) throw DomainError("stride must be >= 1");
  if (stride == 1) return r;
  const std::size_t rows = (r.rows() + stride - 1) / stride;
  LineScanSet out(r.geometry(), rows);
  for (std::size_t i = 0; i < r.m(); ++i)
    for (std::size_t t = 0; t < rows; ++t) out(t, i) = r(t * stride, i);
  return out;
}

LineScanSet upsample(const LineScanSet& r, std::size_t stride, std::size_t full_rows) {
  if (stride < 1) throw DomainError("stride must be >= 1");
  if ((full_rows + stride - 1) / stride != r.rows()) throw DomainError("downsampled row count does not match stride");
  if (stride == 1) return r;
  LineScanSet out(r.geometry(), full_rows);
  for (std::size_t i = 0; i < r.m(); ++i)
    for (std::size_t t = 0; t < r.rows(); ++t) out(t * stride, i) = r(t, i);
  return out;
}

std::vector<PsfKernel> render_kernels(const PsfParams& psf, int w, std::size_t sweep_length) {
  psf.validate();
  std::vector<PsfKernel> out;
  out.reserve(psf.m());
  const int cap = static_cast<int>(sweep_length / 2);
  for (const auto& p : psf.lines) out.push_back(render_psf(p, w > 0 ? w : default_half_width(p, cap), psf.box));
  return out;
}

LineScanSet simulate_scan(const SparseMap& x, const Motif& motif, const ScanGeometry& geom,
                          const std::optional<PsfParams>& psf, double noise_std, std::size_t stride,
                          std::uint64_t seed) {
  if (x.n() != geom.n) throw DomainError("sample side does not match the scan geometry");
  if (stride < 1) throw DomainError("stride must be >= 1");
  if (!(noise_std >= 0.0)) throw DomainError("noise std must be >= 0");
  LineScanSet r = line_project(convolve_motif(x, motif), geom);
  if (psf) {
    if (psf->m() != geom.m()) throw DomainError("PSF line count does not match the scan geometry");
    r = apply_psf(r, render_kernels(*psf, 0, r.rows()));
  }
  r = downsample(r, stride);
  if (noise_std > 0.0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, noise_std);
    for (double& v : r.values()) v += noise(rng);
  }
  return r;
}

}  // namespace lscs
