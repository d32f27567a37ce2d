// Acceptance checks: one PASS/FAIL line per criterion.
//   lscs_acceptance [--only 1,4,7] [--full]
// --full runs the phase-transition criterion on the complete 15 x 19 grid
// with 20 trials per cell instead of the reduced default grid.

#include "lscs/analysis.hpp"
#include "lscs/harness.hpp"
#include "lscs/motif.hpp"
#include "lscs/ops.hpp"
#include "lscs/sim.hpp"
#include "lscs/solver.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cstdarg>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <map>
#include <random>
#include <string>

using namespace lscs;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, ...) __attribute__((format(printf, 1, 2)));
std::string fmt(const char* f, ...) {
  char buf[1024];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

Grid random_disc_image(std::size_t n, std::mt19937_64& rng, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  Grid g(n);
  const double c = 0.5 * (n - 1.0), rad = 0.5 * n - 1.0;
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t k = 0; k < n; ++k)
      if ((r - c) * (r - c) + (k - c) * (k - c) <= rad * rad) g(r, k) = u(rng);
  return g;
}

Outcome adjointness() {
  std::mt19937_64 rng(101);
  std::normal_distribution<double> nd;
  double worst = 0.0;
  int cases = 0;
  const std::size_t sides[] = {32, 64}, counts[] = {1, 4, 9};
  for (int t = 0; t < 100; ++t) {
    const std::size_t n = sides[t % 2], m = counts[(t / 2) % 3];
    ScanGeometry g = random_geometry(m, n, rng());
    Grid y(n);
    for (double& v : y.values()) v = nd(rng);
    LineProjector proj(g);
    LineScanSet r(g, proj.sweep_length());
    for (double& v : r.values()) v = nd(rng);
    LineScanSet ly = proj.project(y);
    const double lhs = r.dot(ly), rhs = proj.back_project(r).dot(y);
    worst = std::max(worst, std::abs(lhs - rhs) / (r.norm() * ly.norm()));
    ++cases;
  }
  return {worst <= 1e-10, fmt("max |<R,L[Y]> - <L*[R],Y>| / (|R||L[Y]|) = %.3e over %d cases (limit 1e-10)", worst, cases)};
}

Outcome rotation_fidelity() {
  std::mt19937_64 rng(202);
  double worst = 0.0;
  for (double theta : {5.0, 17.0, 30.0, 44.0})
    for (int t = 0; t < 5; ++t) {
      Grid y = random_disc_image(64, rng, -1.0, 1.0);
      Grid back = rotate(rotate(y, theta), -theta);
      for (std::size_t i = 0; i < y.size(); ++i) worst = std::max(worst, std::abs(back.values()[i] - y.values()[i]));
    }
  return {worst <= 1e-9, fmt("max |rotate(-t) rotate(t) Y - Y| = %.3e for t in {5,17,30,44} deg, n=64 (limit 1e-9)", worst)};
}

Outcome mass_conservation() {
  std::mt19937_64 rng(303);
  double worst = 0.0;
  for (int t = 0; t < 50; ++t) {
    const std::size_t n = 16 + rng() % 49, m = 1 + rng() % 12;
    ScanGeometry g = random_geometry(m, n, rng());
    Grid y = random_disc_image(n, rng, 0.0, 1.0);
    LineScanSet r = line_project(y, g);
    const double mass = y.sum();
    for (std::size_t i = 0; i < m; ++i) {
      double s = 0.0;
      for (double v : r.column(i)) s += v;
      worst = std::max(worst, std::abs(std::sqrt(static_cast<double>(m)) * s - mass) / mass);
    }
  }
  return {worst <= 1e-9, fmt("max relative |sqrt(m) sum_t R_i(t) - mass| = %.3e over 50 cases (limit 1e-9)", worst)};
}

Outcome coherence_bracket() {
  bool ok = true;
  std::string d;
  for (auto [r, dist] : std::vector<std::pair<double, double>>{{2, 4}, {2, 8}, {4, 8}, {4, 32}}) {
    const double v = analysis::normalized_coherence(r, dist, 360);
    const auto b = analysis::coherence_bounds(r, dist);
    const bool in = v >= b.lower - 0.03 && v <= b.upper + 0.03;
    ok = ok && in;
    d += fmt("%s(r=%g,d=%g): %.5f in [%.5f,%.5f]%s", d.empty() ? "" : "; ", r, dist, v, b.lower - 0.03, b.upper + 0.03,
             in ? "" : " OUT");
  }
  return {ok, d};
}

Outcome hex_eigenvalues() {
  struct Ref {
    std::size_t extent;
    double ratio, expect;
  };
  bool ok = true;
  std::string d;
  for (Ref ref : {Ref{2, 0.5, 0.0159}, Ref{2, 2.0, 0.4177}, Ref{30, 0.5, 0.00245}}) {
    const double v = analysis::hex_least_eigenvalue(ref.extent, ref.ratio);
    const std::size_t k = analysis::hex_lattice_square(ref.extent, 1.0).size();
    const bool in = std::abs(v - ref.expect) <= 1e-3;
    ok = ok && in;
    d += fmt("%sk=%zu d/2r=%g: %.5f vs %.5f", d.empty() ? "" : "; ", k, ref.ratio, v, ref.expect);
  }
  return {ok, d + " (tolerance 1e-3)"};
}

Outcome spectrum() {
  analysis::SpectrumReport rep = analysis::lowpass_spectrum(1.0, 360, 128);
  const double dev = rep.max_relative_deviation(0.05, 0.3);
  return {dev <= 0.10, fmt("r=1, n=128, 360 angles: max relative deviation %.4f over 0.05..0.3 cycles/px (limit 0.10); "
                           "cutoff %.3f vs analytic %.3f",
                           dev, rep.cutoff, rep.analytic_cutoff)};
}

Outcome three_line_recovery() {
  const Motif motif = Motif::parse("disc:1");
  SolverConfig cfg;
  int ok = 0;
  const int trials = 50;
  for (int t = 0; t < trials; ++t) {
    SampleSpec spec;
    spec.n = 128;
    spec.k = 3;
    spec.r = 1.0;
    spec.min_sep_ratio = 20.0;
    spec.seed = harness::trial_seed(7, 3, 3, t);
    SparseMap x = generate_sample(spec);
    ScanGeometry g = random_geometry(3, 128, harness::trial_seed(7, 3, 3, t, 1));
    SolverResult res = reconstruct(simulate_scan(x, motif, g, std::nullopt, 0.0, 1), motif, std::nullopt, cfg);
    ok += harness::support_match(res.x, x, 1.0);
  }
  const double rate = static_cast<double>(ok) / trials;
  return {rate >= 0.9, fmt("k=3 disc:1, separation >= 40 px, n=128, 3 random angles: recovery %d/%d = %.2f (limit 0.90)", ok,
                           trials, rate)};
}

Outcome phase_frontier(bool full) {
  harness::Campaign c;
  c.n = 60;
  c.r = 3.0;
  c.ratio = 1.0;
  c.seed = 2024;
  c.threads = 0;
  if (full) {
    c.lines = harness::parse_range("2..16");
    c.discs = harness::parse_range("2..20");
    c.trials = 20;
  } else {
    c.lines = {2, 3, 4, 5, 6, 8, 12, 16};
    c.discs = {2, 4, 8, 12, 16, 20};
    c.trials = 10;
  }
  harness::PtResult r = harness::phase_transition(c);
  bool high = false;
  for (double v : r.success) high = high || v >= 0.9;
  std::vector<std::size_t> f = harness::frontier(r);
  const std::size_t none = std::numeric_limits<std::size_t>::max();
  bool monotone = true;
  std::string fs;
  for (std::size_t i = 0; i < f.size(); ++i) {
    const std::size_t cur = f[i] ? f[i] : none;
    if (i > 0 && cur < (f[i - 1] ? f[i - 1] : none)) monotone = false;
    fs += fmt("%s%zu:%s", i ? "," : "", c.discs[i], f[i] ? std::to_string(f[i]).c_str() : "-");
  }
  const auto k16 = std::find(c.discs.begin(), c.discs.end(), 16) - c.discs.begin();
  const std::size_t line16 = f[k16] ? f[k16] * c.n : none;
  const bool efficient = line16 != none && 3 * line16 <= c.n * c.n;
  return {high && monotone && efficient,
          fmt("%s grid %zux%zu, %zu trials/cell: success>=0.9 region %s; 50%% frontier (k:N) %s %s; line samples at k=16 = %s "
              "vs raster %zu (need <= 1/3)",
              full ? "full" : "reduced", c.lines.size(), c.discs.size(), c.trials, high ? "present" : "absent", fs.c_str(),
              monotone ? "monotone" : "NOT monotone", line16 == none ? "none" : std::to_string(line16).c_str(),
              c.n * c.n)};
}

Outcome reweight_vs_lasso() {
  harness::ReweightCampaign c;
  c.discs = {8};
  c.lines = 8;
  c.trials = 30;
  c.seed = 88;
  harness::ReweightResult r = harness::reweight_comparison(c);
  const auto& row = r.rows.at(0);
  const bool ok = row.reweight < row.lasso_big && row.reweight < row.lasso_small;
  return {ok, fmt("8 discs, 8 lines, 30 trials: mean normalized error reweighted %.4g, small-lambda Lasso %.4g, big-lambda "
                  "Lasso %.4g",
                  row.reweight, row.lasso_small, row.lasso_big)};
}

Outcome calibration_necessity() {
  const Motif motif = Motif::parse("disc:3");
  const PsfVector shape{{1.0, 0.3, 1.5, 0.3, 1.5, 1.0}};
  PsfBox box;
  box.lower = box.upper = shape;
  box.lower[0] = 0.05;
  box.upper[0] = 20.0;
  SolverConfig cfg;
  int both = 0, cal_ok = 0, frozen_fail = 0;
  const int seeds = 20;
  for (int s = 0; s < seeds; ++s) {
    SampleSpec spec;
    spec.n = 64;
    spec.k = 4;
    spec.r = 3.0;
    spec.min_sep_ratio = 1.5;
    spec.seed = harness::trial_seed(10, 6, 4, s);
    SparseMap x = generate_sample(spec);
    ScanGeometry g = ScanGeometry::equispaced(6, 64);
    std::vector<double> amps;
    for (int i = 0; i < 6; ++i) amps.push_back(std::pow(4.0, i / 5.0));
    std::mt19937_64 rng(spec.seed);
    std::shuffle(amps.begin(), amps.end(), rng);
    PsfParams truth = PsfParams::uniform(6, shape, box);
    for (int i = 0; i < 6; ++i) truth.lines[i][0] = amps[i];
    LineScanSet scans = simulate_scan(x, motif, g, truth, 0.0, 1);
    const bool cal = harness::support_match(reconstruct(scans, motif, PsfParams::uniform(6, shape, box), cfg).x, x);
    const bool frozen =
        harness::support_match(reconstruct(scans, motif, PsfParams::uniform(6, shape, PsfBox::point(shape)), cfg).x, x);
    cal_ok += cal;
    frozen_fail += !frozen;
    both += cal && !frozen;
  }
  return {both >= 16, fmt("4 discs, 6 lines, amplitudes 1..4: calibrated pass %d/%d, amplitude-frozen fail %d/%d, both %d/%d "
                          "(need >= 16)",
                          cal_ok, seeds, frozen_fail, seeds, both, seeds)};
}

Outcome gradients() {
  double worst_x = 0.0, worst_p = 0.0;
  for (int prob = 0; prob < 5; ++prob) {
    std::mt19937_64 rng(500 + prob);
    const std::size_t n = 32, m = 2 + prob, stride = 1 + prob % 3;
    SampleSpec spec;
    spec.n = n;
    spec.k = 3;
    spec.r = 2.0;
    spec.seed = rng();
    const Motif motif = Motif::parse(prob % 2 ? "gauss:1.5" : "disc:2");
    ScanGeometry g = random_geometry(m, n, rng());
    std::uniform_real_distribution<double> u(0.0, 1.0);
    PsfBox box;
    box.lower = PsfVector{{0.1, 0.2, 0.5, 0.2, 0.5, 0.0}};
    box.upper = PsfVector{{5.0, 5.0, 5.0, 5.0, 5.0, 3.0}};
    auto draw = [&] {
      PsfVector p;
      for (std::size_t c = 0; c < PsfVector::kDim; ++c) p[c] = 0.5 + 1.5 * u(rng);
      return p;
    };
    PsfParams truth, at;
    truth.box = at.box = box;
    truth.coupling = at.coupling = PsfCoupling::independent;
    for (std::size_t i = 0; i < m; ++i) {
      truth.lines.push_back(draw());
      at.lines.push_back(draw());
    }
    LineScanSet scans = simulate_scan(generate_sample(spec), motif, g, truth, 0.01, stride, rng());
    SmoothObjective h(scans, motif, stride, 14);
    Grid x(n);
    for (double& v : x.values()) v = u(rng);
    LineScanSet lines = h.lines(x);
    auto kernels = h.kernels(at);
    LineScanSet res = h.residual(lines, kernels);
    Grid gx = h.grad_x(res, kernels);
    auto gp = h.grad_p(lines, res, at);
    auto rel = [](double a, double b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300}); };
    for (int t = 0; t < 20; ++t) {
      const std::size_t j = rng() % (n * n);
      Grid a = x, b = x;
      a.values()[j] += 1e-3;
      b.values()[j] -= 1e-3;
      const double fd = (h.value(h.lines(a), kernels) - h.value(h.lines(b), kernels)) / 2e-3;
      worst_x = std::max(worst_x, rel(fd, gx.values()[j]));

      const std::size_t i = rng() % m, c = rng() % PsfVector::kDim;
      const double step = 1e-5 * std::max(1.0, std::abs(at.lines[i][c]));
      PsfParams pa = at, pb = at;
      pa.lines[i][c] += step;
      pb.lines[i][c] -= step;
      const double fdp = (h.value(lines, h.kernels(pa)) - h.value(lines, h.kernels(pb))) / (2 * step);
      worst_p = std::max(worst_p, rel(fdp, gp[i][c]));
    }
  }
  return {worst_x <= 1e-5 && worst_p <= 1e-5,
          fmt("max relative error vs central differences: dh/dX %.3e, dh/dp %.3e (5 problems x 20 coordinates, limit 1e-5)",
              worst_x, worst_p)};
}

Outcome determinism() {
  harness::Campaign c;
  c.lines = {1, 3, 6};
  c.discs = {1, 3};
  c.trials = 3;
  c.n = 40;
  c.r = 2.0;
  c.seed = 12;
  c.solver.rounds = 3;
  c.solver.iterations = 30;
  c.threads = 1;
  harness::PtResult a = harness::phase_transition(c);
  c.threads = 3;
  harness::PtResult b = harness::phase_transition(c);
  c.mode = harness::PtMode::fixed_density;
  harness::PtResult d1 = harness::phase_transition(c);
  harness::PtResult d2 = harness::phase_transition(c);
  harness::ReweightCampaign rc;
  rc.discs = {3};
  rc.trials = 2;
  rc.n = 40;
  rc.r = 2.0;
  rc.solver.rounds = 2;
  rc.solver.iterations = 20;
  const std::string r1 = harness::reweight_csv(harness::reweight_comparison(rc));
  rc.threads = 2;
  const std::string r2 = harness::reweight_csv(harness::reweight_comparison(rc));
  const bool same = harness::pt_csv(a) == harness::pt_csv(b) && harness::trials_csv(a) == harness::trials_csv(b) &&
                    harness::efficiency_csv(a) == harness::efficiency_csv(b) &&
                    harness::pt_csv(d1) == harness::pt_csv(d2) && harness::trials_csv(d1) == harness::trials_csv(d2) &&
                    r1 == r2;
  return {same, fmt("fixed-area (1 vs 3 threads), fixed-density and reweight campaigns repeated: CSVs %s",
                    same ? "byte-identical" : "DIFFER")};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance checks"};
  std::vector<int> only;
  bool full = false;
  app.add_option("--only", only, "criteria to run")->delimiter(',');
  app.add_flag("--full", full, "full phase-transition grid");
  CLI11_PARSE(app, argc, argv);

  struct Criterion {
    const char* name;
    double budget_s;  // 0 = no runtime limit
    std::function<Outcome()> run;
  };
  const std::map<int, Criterion> criteria{
      {1, {"adjointness", 10, adjointness}},
      {2, {"rotation fidelity", 0, rotation_fidelity}},
      {3, {"mass conservation", 0, mass_conservation}},
      {4, {"coherence bracket", 60, coherence_bracket}},
      {5, {"hexagonal least eigenvalues", 30, hex_eigenvalues}},
      {6, {"low-pass spectrum", 0, spectrum}},
      {7, {"three-line recovery", 300, three_line_recovery}},
      {8, {"phase-transition frontier", 7200, [full] { return phase_frontier(full); }}},
      {9, {"reweighting beats Lasso", 0, reweight_vs_lasso}},
      {10, {"calibration necessity", 0, calibration_necessity}},
      {11, {"gradient correctness", 0, gradients}},
      {12, {"determinism", 0, determinism}},
  };

  int failed = 0;
  for (const auto& [id, c] : criteria) {
    if (!only.empty() && std::find(only.begin(), only.end(), id) == only.end()) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    bool pass = o.pass;
    std::string timing = fmt("%.1f s", secs);
    if (c.budget_s > 0) {
      timing += fmt(" of %.0f s", c.budget_s);
      if (secs > c.budget_s) pass = false;
    }
    std::printf("%s criterion %d (%s): %s [%s]\n", pass ? "PASS" : "FAIL", id, c.name, o.detail.c_str(), timing.c_str());
    std::fflush(stdout);
    failed += !pass;
  }
  return failed == 0 ? 0 : 1;
}
