#include "lscs/solver.hpp"

#include "lscs/io.hpp"
#include "lscs/sim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

namespace lscs {

namespace {

void axpy(std::span<double> y, double a, std::span<const double> x) {
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += a * x[i];
}

double half_sq_norm(const LineScanSet& r) {
  double s = 0.0;
  for (double v : r.values()) s += v * v;
  return 0.5 * s;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// Free PSF coordinates. Shared shape: per-line amplitudes then the five shape
// values of line 0. Independent: all six values of every line.
class PsfPacking {
 public:
  PsfPacking(const PsfParams& p) : m_(p.m()), shared_(p.coupling == PsfCoupling::shared_shape) {}

  std::size_t size() const { return shared_ ? m_ + PsfVector::kDim - 1 : m_ * PsfVector::kDim; }
  std::size_t coord(std::size_t j) const {
    if (!shared_) return j % PsfVector::kDim;
    return j < m_ ? 0 : j - m_ + 1;
  }

  std::vector<double> pack(const PsfParams& p) const {
    std::vector<double> v(size());
    if (shared_) {
      for (std::size_t i = 0; i < m_; ++i) v[i] = p.lines[i][0];
      for (std::size_t c = 1; c < PsfVector::kDim; ++c) v[m_ + c - 1] = p.lines[0][c];
    } else {
      for (std::size_t i = 0; i < m_; ++i)
        for (std::size_t c = 0; c < PsfVector::kDim; ++c) v[i * PsfVector::kDim + c] = p.lines[i][c];
    }
    return v;
  }

  void unpack(const std::vector<double>& v, PsfParams& p) const {
    for (std::size_t i = 0; i < m_; ++i)
      for (std::size_t c = 0; c < PsfVector::kDim; ++c)
        p.lines[i][c] = shared_ ? (c == 0 ? v[i] : v[m_ + c - 1]) : v[i * PsfVector::kDim + c];
  }

  std::vector<double> gradient(const std::vector<PsfVector>& g) const {
    std::vector<double> out(size(), 0.0);
    for (std::size_t i = 0; i < m_; ++i)
      for (std::size_t c = 0; c < PsfVector::kDim; ++c) {
        if (shared_)
          out[c == 0 ? i : m_ + c - 1] += g[i][c];
        else
          out[i * PsfVector::kDim + c] = g[i][c];
      }
    return out;
  }

  void project(std::vector<double>& v, const PsfBox& box) const {
    for (std::size_t j = 0; j < v.size(); ++j) v[j] = std::clamp(v[j], box.lower[coord(j)], box.upper[coord(j)]);
  }

 private:
  std::size_t m_;
  bool shared_;
};

// Rounding allowance for comparing values of h: relative plus the error of a
// residual computed against data of norm `data_norm`.
double slack(double h, double data_norm) {
  return 1e-12 * std::abs(h) + 1e-14 * std::sqrt(2.0 * std::abs(h)) * data_norm + 1e-300;
}

// Upper bound on the trial step carried between iterations.
constexpr double kMaxStep = 1e6;

}  // namespace

// ---------------------------------------------------------------------------
// Smooth part
// ---------------------------------------------------------------------------

SmoothObjective::SmoothObjective(LineScanSet scans, const Motif& motif, std::size_t stride, int psf_half_width)
    : scans_(std::move(scans)),
      stride_(stride),
      half_width_(psf_half_width),
      kernel_(motif, scans_.geometry().n),
      projector_(scans_.geometry()) {
  if (stride_ < 1) throw DomainError("stride must be >= 1");
  if (half_width_ < 0) throw DomainError("psf half width must be >= 0");
  const std::size_t expect = (projector_.sweep_length() + stride_ - 1) / stride_;
  if (scans_.rows() != expect)
    throw DomainError("scan set has " + std::to_string(scans_.rows()) + " rows, expected " + std::to_string(expect) +
                      " for n=" + std::to_string(n()) + " and stride " + std::to_string(stride_));
}

std::size_t SmoothObjective::sweep_length() const noexcept { return projector_.sweep_length(); }

LineScanSet SmoothObjective::lines(const Grid& x) {
  if (x.n() != n()) throw DomainError("map side does not match the scan geometry");
  return projector_.project(kernel_.apply(x));
}

std::vector<PsfKernel> SmoothObjective::kernels(const std::optional<PsfParams>& psf) const {
  if (!psf) return {};
  if (psf->m() != scans_.m()) throw DomainError("PSF line count does not match the scan geometry");
  return render_kernels(*psf, half_width_, sweep_length());
}

LineScanSet SmoothObjective::residual(const LineScanSet& lines, const std::vector<PsfKernel>& kernels) const {
  LineScanSet r = downsample(kernels.empty() ? lines : apply_psf(lines, kernels), stride_);
  axpy(r.values(), -1.0, scans_.values());
  return r;
}

double SmoothObjective::value(const LineScanSet& lines, const std::vector<PsfKernel>& kernels) const {
  return half_sq_norm(residual(lines, kernels));
}

double SmoothObjective::value(const Grid& x, const std::optional<PsfParams>& psf) {
  return value(lines(x), kernels(psf));
}

Grid SmoothObjective::grad_x(const LineScanSet& residual, const std::vector<PsfKernel>& kernels) {
  LineScanSet u = upsample(residual, stride_, sweep_length());
  if (!kernels.empty()) u = apply_psf_adjoint(u, kernels);
  return kernel_.apply_adjoint(projector_.back_project(u));
}

std::vector<PsfVector> SmoothObjective::grad_p(const LineScanSet& lines, const LineScanSet& residual,
                                               const PsfParams& psf) const {
  LineScanSet u = upsample(residual, stride_, sweep_length());
  const int cap = static_cast<int>(sweep_length() / 2);
  std::vector<PsfVector> out(psf.m());
  for (std::size_t i = 0; i < psf.m(); ++i) {
    const int w = half_width_ > 0 ? half_width_ : default_half_width(psf.lines[i], cap);
    std::vector<double> g = tap_correlation(u.column(i), lines.column(i), w);
    PsfGradient d = psf_param_gradient(psf.lines[i], w, psf.box);
    for (std::size_t c = 0; c < PsfVector::kDim; ++c) out[i][c] = dot(g, d.d_taps[c]);
  }
  return out;
}

double smooth_objective(const Grid& x, const std::optional<PsfParams>& psf, const LineScanSet& scans,
                        const Motif& motif, std::size_t stride) {
  SmoothObjective h(scans, motif, stride);
  return h.value(x, psf);
}

Grid grad_X(const Grid& x, const std::optional<PsfParams>& psf, const LineScanSet& scans, const Motif& motif,
            std::size_t stride) {
  SmoothObjective h(scans, motif, stride);
  auto k = h.kernels(psf);
  return h.grad_x(h.residual(h.lines(x), k), k);
}

std::vector<PsfVector> grad_p(const Grid& x, const PsfParams& psf, const LineScanSet& scans, const Motif& motif,
                              std::size_t stride) {
  SmoothObjective h(scans, motif, stride);
  LineScanSet p = h.lines(x);
  return h.grad_p(p, h.residual(p, h.kernels(psf)), psf);
}

Grid prox_step(const Grid& v, const Grid& t_lambda) {
  if (v.n() != t_lambda.n()) throw DomainError("prox operands differ in size");
  Grid out(v.n());
  for (std::size_t i = 0; i < v.size(); ++i) out.values()[i] = std::max(v.values()[i] - t_lambda.values()[i], 0.0);
  return out;
}

// ---------------------------------------------------------------------------
// iPALM
// ---------------------------------------------------------------------------

IpalmState ipalm(SmoothObjective& h, const SparseMap& x_init, const std::optional<PsfParams>& psf_init,
                 const Grid& lambda, const SolverConfig& config, int round) {
  config.validate();
  if (x_init.n() != h.n() || lambda.n() != h.n()) throw DomainError("iPALM operands do not match the image side");
  for (double v : lambda.values())
    if (!(v > 0.0) || !std::isfinite(v)) throw DomainError("penalty weights must be positive and finite");
  if (psf_init) psf_init->validate();

  const bool calibrate = psf_init && !psf_init->box.collapsed();
  std::optional<PsfPacking> packing;
  if (calibrate) packing.emplace(*psf_init);

  Grid x = x_init, x_prev = x_init;
  LineScanSet p_lines = h.lines(x), p_lines_prev = p_lines;
  std::optional<PsfParams> psf = psf_init;
  std::vector<double> theta, theta_prev;
  if (calibrate) theta = theta_prev = packing->pack(*psf);
  std::vector<PsfKernel> kernels = h.kernels(psf);
  double f = h.value(p_lines, kernels) + lambda.dot(x);

  const double data_norm = h.scans().norm();
  IpalmState st;
  double tx0 = 1.0, tp0 = 1.0;
  int quiet = 0;
  for (int it = 1; it <= config.iterations; ++it) {
    for (int attempt = 0; attempt < 2; ++attempt) {
      const double alpha = attempt == 0 ? config.inertia : 0.0;

      Grid y = x;
      LineScanSet py = p_lines;
      if (alpha > 0.0) {
        for (std::size_t i = 0; i < y.size(); ++i) y.values()[i] += alpha * (x.values()[i] - x_prev.values()[i]);
        for (std::size_t i = 0; i < py.values().size(); ++i)
          py.values()[i] += alpha * (p_lines.values()[i] - p_lines_prev.values()[i]);
      }
      LineScanSet ry = h.residual(py, kernels);
      const double hy = half_sq_norm(ry);
      const Grid g = h.grad_x(ry, kernels);

      StepRecord rec;
      rec.round = round;
      rec.iteration = it;
      rec.restarted = attempt > 0;
      double t = tx0;
      Grid xn;
      LineScanSet pn;
      double hn = 0.0;
      for (;;) {
        t *= 0.5;
        if (++rec.backtracks > config.max_backtracks)
          throw SolverError("Lipschitz blowup: X step not accepted after " + std::to_string(config.max_backtracks) +
                            " halvings (round " + std::to_string(round) + ", iteration " + std::to_string(it) + ")");
        Grid v = y;
        axpy(v.values(), -t, g.values());
        Grid tl = lambda;
        for (double& e : tl.values()) e *= t;
        xn = prox_step(v, tl);
        pn = h.lines(xn);
        hn = h.value(pn, kernels);
        double lin = 0.0, sq = 0.0;
        for (std::size_t i = 0; i < xn.size(); ++i) {
          const double d = xn.values()[i] - y.values()[i];
          lin += g.values()[i] * d;
          sq += d * d;
        }
        rec.bound = hy + lin + sq / (2.0 * t);
        rec.h_new = hn;
        if (hn <= rec.bound + slack(hy, data_norm)) break;
      }
      rec.step = t;
      const double tx_next = std::min(4.0 * t, kMaxStep);

      std::vector<double> theta_n = theta;
      std::vector<PsfKernel> kn = kernels;
      std::optional<PsfParams> psf_n = psf;
      double hpn = hn;
      double tp_next = tp0;
      if (calibrate) {
        std::vector<double> q = theta;
        for (std::size_t j = 0; j < q.size(); ++j) q[j] += alpha * (theta[j] - theta_prev[j]);
        packing->project(q, psf->box);
        PsfParams pq = *psf;
        packing->unpack(q, pq);
        std::vector<PsfKernel> kq = h.kernels(pq);
        LineScanSet rq = h.residual(pn, kq);
        const double hq = half_sq_norm(rq);
        const std::vector<double> gq = packing->gradient(h.grad_p(pn, rq, pq));
        double tp = tp0;
        int tries = 0;
        for (;;) {
          tp *= 0.5;
          if (++tries > config.max_backtracks)
            throw SolverError("Lipschitz blowup: p step not accepted after " + std::to_string(config.max_backtracks) +
                              " halvings (round " + std::to_string(round) + ", iteration " + std::to_string(it) + ")");
          theta_n = q;
          axpy(theta_n, -tp, gq);
          packing->project(theta_n, psf->box);
          packing->unpack(theta_n, *psf_n);
          kn = h.kernels(psf_n);
          hpn = h.value(pn, kn);
          double lin = 0.0, sq = 0.0;
          for (std::size_t j = 0; j < q.size(); ++j) {
            const double d = theta_n[j] - q[j];
            lin += gq[j] * d;
            sq += d * d;
          }
          if (hpn <= hq + lin + sq / (2.0 * tp) + slack(hq, data_norm)) break;
        }
        tp_next = std::min(4.0 * tp, kMaxStep);
      }

      const double fn = hpn + lambda.dot(xn);
      if (config.monotone_restart && alpha > 0.0 && fn > f + slack(f, data_norm)) continue;

      x_prev = std::move(x);
      x = std::move(xn);
      p_lines_prev = std::move(p_lines);
      p_lines = std::move(pn);
      if (calibrate) {
        theta_prev = std::move(theta);
        theta = std::move(theta_n);
      }
      psf = std::move(psf_n);
      kernels = std::move(kn);
      tx0 = tx_next;
      tp0 = tp_next;
      st.steps.push_back(rec);
      st.smooth.push_back(hpn);
      st.objective.push_back(fn);
      const double change = std::abs(f - fn) / std::max(std::abs(f), 1e-300);
      quiet = change < config.early_stop_tol ? quiet + 1 : 0;
      f = fn;
      break;
    }
    st.iterations = it;
    if (config.early_stop && quiet >= config.early_stop_window) break;
  }
  st.x = SparseMap(std::move(x));
  st.psf = std::move(psf);
  return st;
}

// ---------------------------------------------------------------------------
// Reweighting
// ---------------------------------------------------------------------------

Grid location_map(const Grid& x) {
  Grid out(x.n());
  const double peak = x.max();
  if (!(peak > 0.0)) return out;
  for (std::size_t i = 0; i < x.size(); ++i) out.values()[i] = x.values()[i] >= 0.5 * peak ? 1.0 : 0.0;
  return out;
}

SolverResult reconstruct(const LineScanSet& scans, const Motif& motif, const std::optional<PsfParams>& psf_init,
                         const SolverConfig& config, std::size_t stride) {
  config.validate();
  scans.geometry().validate();
  if (psf_init) psf_init->validate();

  const std::size_t sweep = scans.geometry().sweep_length();
  int w = config.psf_half_width;
  if (w == 0 && psf_init && !psf_init->box.collapsed())
    w = default_half_width(psf_init->box, static_cast<int>(sweep / 2));
  SmoothObjective h(scans, motif, stride, w);

  SolverResult res;
  SparseMap x(h.n());
  std::optional<PsfParams> psf = psf_init;
  for (int k = 1; k <= config.rounds; ++k) {
    Grid lambda(h.n());
    if (k == 1) {
      LineScanSet u = upsample(scans, stride, sweep);
      auto kernels = h.kernels(psf);
      if (!kernels.empty()) u = apply_psf_adjoint(u, kernels);
      const double peak = back_project(u).max();
      for (double& v : lambda.values()) v = config.reweight_scale * std::max(peak, config.epsilon);
    } else {
      const double hk = std::max(h.value(x, psf), config.epsilon);
      for (std::size_t i = 0; i < x.size(); ++i)
        lambda.values()[i] = config.reweight_scale * hk / (x.values()[i] + config.epsilon);
    }
    IpalmState st = ipalm(h, x, psf, lambda, config, k);
    x = std::move(st.x);
    psf = std::move(st.psf);
    res.objective.insert(res.objective.end(), st.objective.begin(), st.objective.end());
    res.smooth.insert(res.smooth.end(), st.smooth.begin(), st.smooth.end());
    res.round_of_iteration.insert(res.round_of_iteration.end(), st.objective.size(), k);
    res.steps.insert(res.steps.end(), st.steps.begin(), st.steps.end());
    res.lambdas.push_back(std::move(lambda));
  }
  res.y = Image(h.motif_kernel().apply(x));
  res.location_map = location_map(x);
  res.x = std::move(x);
  res.psf = std::move(psf);
  return res;
}

void write_solver_result(const std::filesystem::path& dir, const SolverResult& result, const SolverConfig& config,
                         const Motif& motif) {
  std::filesystem::create_directories(dir);
  io::write_grid_csv(dir / "Xhat.csv", result.x);
  io::write_grid_csv(dir / "Yhat.csv", result.y);
  io::write_grid_csv(dir / "locmap.csv", result.location_map);
  for (std::size_t k = 0; k < result.lambdas.size(); ++k)
    io::write_grid_csv(dir / ("lambda_" + std::to_string(k + 1) + ".csv"), result.lambdas[k]);
  {
    std::ofstream out(dir / "trace.csv");
    if (!out) throw Error("cannot write " + (dir / "trace.csv").string());
    out << "iteration,round,objective,smooth,step,backtracks,restarted\n";
    char buf[256];
    for (std::size_t i = 0; i < result.objective.size(); ++i) {
      const StepRecord& s = result.steps[i];
      std::snprintf(buf, sizeof buf, "%zu,%d,%.17g,%.17g,%.17g,%d,%d\n", i + 1, result.round_of_iteration[i],
                    result.objective[i], result.smooth[i], s.step, s.backtracks, s.restarted ? 1 : 0);
      out << buf;
    }
  }
  io::KeyValues meta;
  io::put_solver_config(meta, config);
  meta.set("motif", motif.to_string());
  meta.set("n", std::to_string(result.x.n()));
  meta.set("iterations", std::to_string(result.objective.size()));
  meta.set("trace", "trace.csv");
  if (!result.objective.empty()) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", result.objective.back());
    meta.set("final_objective", buf);
  }
  if (result.psf) {
    io::write_psf_lines(dir / "phat.csv", result.psf->lines);
    io::write_psf_box(dir / "pbox.csv", result.psf->box);
    meta.set("phat", "phat.csv");
    meta.set("coupling", result.psf->coupling == PsfCoupling::shared_shape ? "shared_shape" : "independent");
    for (std::size_t i = 0; i < result.psf->m(); ++i) {
      std::string v;
      char buf[64];
      for (std::size_t c = 0; c < PsfVector::kDim; ++c) {
        std::snprintf(buf, sizeof buf, c ? ",%.17g" : "%.17g", result.psf->lines[i][c]);
        v += buf;
      }
      meta.set("phat." + std::to_string(i), v);
    }
  } else {
    meta.set("phat", "delta");
  }
  std::ofstream out(dir / "meta.txt");
  if (!out) throw Error("cannot write " + (dir / "meta.txt").string());
  out << meta.dump();
}

}  // namespace lscs
