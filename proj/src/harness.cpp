#include "lscs/harness.hpp"

#include "lscs/motif.hpp"
#include "lscs/sim.hpp"
#include "lscs/solver.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

namespace lscs::harness {

namespace {

std::string num(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string short_num(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

Motif campaign_motif(const std::string& kind, double r) { return Motif::parse(kind + ":" + num(r)); }

// Kuhn's augmenting-path matching on a boolean adjacency matrix.
bool augment(std::size_t u, const std::vector<std::vector<bool>>& adj, std::vector<int>& match_right,
             std::vector<bool>& seen) {
  for (std::size_t v = 0; v < adj[u].size(); ++v) {
    if (!adj[u][v] || seen[v]) continue;
    seen[v] = true;
    if (match_right[v] < 0 || augment(static_cast<std::size_t>(match_right[v]), adj, match_right, seen)) {
      match_right[v] = static_cast<int>(u);
      return true;
    }
  }
  return false;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
}

}  // namespace

// ---------------------------------------------------------------------------
// Metrics
// ---------------------------------------------------------------------------

MatchReport match_support(const Grid& xhat, const SparseMap& x0, double tol_px) {
  if (xhat.n() != x0.n()) throw DomainError("support match needs equal grid sides");
  const std::size_t n = xhat.n();
  const Grid mask = location_map(xhat);

  struct Centroid {
    double r = 0.0, c = 0.0;
  };
  std::vector<Centroid> comps;
  std::vector<int> label(n * n, -1);
  std::vector<std::size_t> stack;
  for (std::size_t start = 0; start < n * n; ++start) {
    if (mask.values()[start] == 0.0 || label[start] >= 0) continue;
    const int id = static_cast<int>(comps.size());
    double w = 0.0, sr = 0.0, sc = 0.0;
    stack.assign(1, start);
    label[start] = id;
    while (!stack.empty()) {
      const std::size_t p = stack.back();
      stack.pop_back();
      const std::size_t pr = p / n, pc = p % n;
      const double v = xhat.values()[p];
      w += v;
      sr += v * static_cast<double>(pr);
      sc += v * static_cast<double>(pc);
      for (int dr = -1; dr <= 1; ++dr)
        for (int dc = -1; dc <= 1; ++dc) {
          const long qr = static_cast<long>(pr) + dr, qc = static_cast<long>(pc) + dc;
          if (qr < 0 || qc < 0 || qr >= static_cast<long>(n) || qc >= static_cast<long>(n)) continue;
          const std::size_t q = static_cast<std::size_t>(qr) * n + static_cast<std::size_t>(qc);
          if (mask.values()[q] != 0.0 && label[q] < 0) {
            label[q] = id;
            stack.push_back(q);
          }
        }
    }
    comps.push_back({sr / w, sc / w});
  }

  const std::vector<Pixel> spikes = x0.support();
  MatchReport rep;
  rep.components = comps.size();
  rep.spikes = spikes.size();
  std::vector<std::vector<bool>> adj(comps.size(), std::vector<bool>(spikes.size(), false));
  for (std::size_t i = 0; i < comps.size(); ++i)
    for (std::size_t j = 0; j < spikes.size(); ++j)
      adj[i][j] = std::hypot(comps[i].r - static_cast<double>(spikes[j].row),
                             comps[i].c - static_cast<double>(spikes[j].col)) <= tol_px + 1e-9;
  std::vector<int> match_right(spikes.size(), -1);
  for (std::size_t i = 0; i < comps.size(); ++i) {
    std::vector<bool> seen(spikes.size(), false);
    if (augment(i, adj, match_right, seen)) ++rep.matched;
  }
  rep.success = rep.components == rep.spikes && rep.matched == rep.spikes;
  return rep;
}

bool support_match(const Grid& xhat, const SparseMap& x0, double tol_px) {
  return match_support(xhat, x0, tol_px).success;
}

double normalized_image_error(const Grid& yhat, const Grid& y0) {
  if (yhat.n() != y0.n()) throw DomainError("image error needs equal grid sides");
  const double na = yhat.norm(), nb = y0.norm();
  double s = 0.0;
  for (std::size_t i = 0; i < yhat.size(); ++i) {
    const double a = na > 0.0 ? yhat.values()[i] / na : 0.0;
    const double b = nb > 0.0 ? y0.values()[i] / nb : 0.0;
    s += (a - b) * (a - b);
  }
  return std::sqrt(s);
}

// ---------------------------------------------------------------------------
// Scheduling
// ---------------------------------------------------------------------------

unsigned resolve_threads(unsigned requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("LSCS_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<unsigned>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& job) {
  threads = static_cast<unsigned>(std::min<std::size_t>(std::max(1u, threads), std::max<std::size_t>(count, 1)));
  if (threads == 1) {
    for (std::size_t i = 0; i < count; ++i) job(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < threads; ++t)
    pool.emplace_back([&] {
      for (std::size_t i; (i = next.fetch_add(1)) < count;) {
        try {
          job(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
          next = count;
        }
      }
    });
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

std::uint64_t trial_seed(std::uint64_t campaign_seed, std::uint64_t lines, std::uint64_t discs, std::uint64_t trial,
                         std::uint64_t stream) {
  std::uint64_t h = splitmix(campaign_seed);
  for (std::uint64_t v : {lines, discs, trial, stream}) h = splitmix(h ^ v);
  return h;
}

// ---------------------------------------------------------------------------
// Campaign configuration
// ---------------------------------------------------------------------------

std::string to_string(PtMode m) { return m == PtMode::fixed_area ? "fixed-area" : "fixed-density"; }

PtMode parse_pt_mode(const std::string& s) {
  if (s == "fixed-area" || s == "fixed_area" || s == "area") return PtMode::fixed_area;
  if (s == "fixed-density" || s == "fixed_density" || s == "density") return PtMode::fixed_density;
  throw DomainError("mode must be fixed-area or fixed-density, got '" + s + "'");
}

AngleMode parse_angle_mode(const std::string& s) {
  if (s == "random") return AngleMode::random;
  if (s == "equispaced") return AngleMode::equispaced;
  throw DomainError("angle mode must be random or equispaced, got '" + s + "'");
}

std::vector<std::size_t> parse_range(const std::string& s) {
  auto to_size = [&](const std::string& t) {
    char* end = nullptr;
    const long v = std::strtol(t.c_str(), &end, 10);
    if (t.empty() || *end != '\0' || v < 1) throw DomainError("bad range '" + s + "': expected positive integers");
    return static_cast<std::size_t>(v);
  };
  std::vector<std::size_t> out;
  if (auto dots = s.find(".."); dots != std::string::npos) {
    std::string hi = s.substr(dots + 2);
    std::size_t step = 1;
    if (auto colon = hi.find(':'); colon != std::string::npos) {
      step = to_size(hi.substr(colon + 1));
      hi = hi.substr(0, colon);
    }
    const std::size_t a = to_size(s.substr(0, dots)), b = to_size(hi);
    if (b < a) throw DomainError("bad range '" + s + "': upper end below lower end");
    for (std::size_t v = a; v <= b; v += step) out.push_back(v);
  } else {
    std::stringstream ss(s);
    for (std::string item; std::getline(ss, item, ',');) out.push_back(to_size(item));
  }
  if (out.empty()) throw DomainError("empty range '" + s + "'");
  return out;
}

std::string format_range(const std::vector<std::size_t>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + std::to_string(v[i]);
  return out;
}

void Campaign::validate() const {
  if (lines.empty() || discs.empty()) throw DomainError("campaign grid is empty");
  if (trials < 1) throw DomainError("campaign needs trials >= 1");
  if (n < 8) throw DomainError("campaign image side must be >= 8");
  if (!(r > 0.0)) throw DomainError("campaign motif radius must be positive");
  if (!(ratio >= 0.0)) throw DomainError("campaign separation ratio must be >= 0");
  if (!(tol_px >= 0.0)) throw DomainError("support tolerance must be >= 0");
  campaign_motif(motif, r);
  solver.validate();
}

std::size_t Campaign::side_for(std::size_t k) const {
  if (mode == PtMode::fixed_area) return n;
  const double ref = static_cast<double>(density_k ? density_k : *std::max_element(discs.begin(), discs.end()));
  const auto side = static_cast<std::size_t>(std::lround(static_cast<double>(n) * std::sqrt(k / ref)));
  return std::max<std::size_t>(side, static_cast<std::size_t>(std::ceil(2.0 * r)) + 2);
}

Campaign Campaign::from(const io::KeyValues& kv) {
  Campaign c;
  c.mode = parse_pt_mode(kv.get("mode", to_string(c.mode)));
  c.lines = parse_range(kv.get("lines", format_range(c.lines)));
  c.discs = parse_range(kv.get("discs", format_range(c.discs)));
  c.trials = static_cast<std::size_t>(kv.get("trials", static_cast<long>(c.trials)));
  c.seed = static_cast<std::uint64_t>(kv.get("seed", 0L));
  c.n = static_cast<std::size_t>(kv.get("n", static_cast<long>(c.n)));
  c.density_k = static_cast<std::size_t>(kv.get("density_k", 0L));
  c.r = kv.get("r", c.r);
  c.ratio = kv.get("ratio", c.ratio);
  c.motif = kv.get("motif", c.motif);
  c.angles = parse_angle_mode(kv.get("angles", std::string("random")));
  c.tol_px = kv.get("tol_px", c.tol_px);
  c.log_runtime = kv.get("log_runtime", c.log_runtime);
  c.threads = static_cast<unsigned>(kv.get("threads", 0L));
  c.solver = io::solver_config_from(kv);
  c.validate();
  return c;
}

void Campaign::put(io::KeyValues& kv) const {
  io::put_solver_config(kv, solver);
  kv.set("mode", to_string(mode));
  kv.set("lines", format_range(lines));
  kv.set("discs", format_range(discs));
  kv.set("trials", std::to_string(trials));
  kv.set("seed", std::to_string(seed));
  kv.set("n", std::to_string(n));
  kv.set("density_k", std::to_string(density_k));
  kv.set("r", num(r));
  kv.set("ratio", num(ratio));
  kv.set("motif", motif);
  kv.set("angles", angles == AngleMode::random ? "random" : "equispaced");
  kv.set("tol_px", num(tol_px));
  kv.set("log_runtime", log_runtime ? "1" : "0");
  kv.set("threads", std::to_string(threads));
}

// ---------------------------------------------------------------------------
// Phase transition
// ---------------------------------------------------------------------------

TrialOutcome run_trial(const Campaign& c, std::size_t lines, std::size_t discs, std::size_t trial) {
  const auto start = std::chrono::steady_clock::now();
  TrialOutcome out;
  out.lines = lines;
  out.discs = discs;
  out.trial = trial;
  out.n = c.side_for(discs);
  out.seed = trial_seed(c.seed, lines, discs, trial);

  SampleSpec spec;
  spec.n = out.n;
  spec.k = discs;
  spec.r = c.r;
  spec.min_sep_ratio = c.ratio;
  spec.seed = out.seed;
  SparseMap x;
  try {
    x = generate_sample(spec);
  } catch (const InfeasibleError&) {
    out.feasible = false;
    out.relative_error = std::numeric_limits<double>::quiet_NaN();
    return out;
  }
  const Motif motif = campaign_motif(c.motif, c.r);
  const ScanGeometry geom = c.angles == AngleMode::random
                                ? random_geometry(lines, out.n, trial_seed(c.seed, lines, discs, trial, 1))
                                : ScanGeometry::equispaced(lines, out.n);
  const LineScanSet scans = simulate_scan(x, motif, geom, std::nullopt, 0.0, 1);
  try {
    SolverResult res = reconstruct(scans, motif, std::nullopt, c.solver);
    out.success = support_match(res.x, x, c.tol_px);
    out.relative_error = normalized_image_error(res.y, convolve_motif(x, motif));
  } catch (const SolverError&) {
    out.success = false;
    out.relative_error = std::numeric_limits<double>::quiet_NaN();
  }
  out.runtime_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

PtResult phase_transition(const Campaign& c) {
  c.validate();
  PtResult res;
  res.campaign = c;
  const std::size_t cells = c.lines.size() * c.discs.size();
  res.trials.resize(cells * c.trials);
  parallel_for(res.trials.size(), resolve_threads(c.threads), [&](std::size_t j) {
    const std::size_t cell = j / c.trials, trial = j % c.trials;
    res.trials[j] = run_trial(c, c.lines[cell / c.discs.size()], c.discs[cell % c.discs.size()], trial);
  });
  res.success.assign(cells, 0.0);
  for (std::size_t cell = 0; cell < cells; ++cell) {
    std::size_t ok = 0;
    bool feasible = true;
    for (std::size_t t = 0; t < c.trials; ++t) {
      const TrialOutcome& o = res.trials[cell * c.trials + t];
      feasible = feasible && o.feasible;
      ok += o.success;
    }
    res.success[cell] =
        feasible ? static_cast<double>(ok) / static_cast<double>(c.trials) : std::numeric_limits<double>::quiet_NaN();
  }
  return res;
}

std::vector<std::size_t> frontier(const PtResult& r, double level) {
  const Campaign& c = r.campaign;
  std::vector<std::size_t> out(c.discs.size(), 0);
  for (std::size_t ki = 0; ki < c.discs.size(); ++ki)
    for (std::size_t li = 0; li < c.lines.size(); ++li)
      if (r.at(li, ki) >= level) {
        out[ki] = c.lines[li];
        break;
      }
  return out;
}

std::string pt_csv(const PtResult& r) {
  const Campaign& c = r.campaign;
  std::string out = "lines";
  for (std::size_t k : c.discs) out += ",k=" + std::to_string(k);
  out += '\n';
  for (std::size_t li = 0; li < c.lines.size(); ++li) {
    out += std::to_string(c.lines[li]);
    for (std::size_t ki = 0; ki < c.discs.size(); ++ki) out += "," + short_num(r.at(li, ki));
    out += '\n';
  }
  return out;
}

std::string trials_csv(const PtResult& r) {
  std::string out = "lines,discs,trial,n,seed,feasible,success,relative_error";
  out += r.campaign.log_runtime ? ",runtime_s\n" : "\n";
  for (const TrialOutcome& o : r.trials) {
    out += std::to_string(o.lines) + "," + std::to_string(o.discs) + "," + std::to_string(o.trial) + "," +
           std::to_string(o.n) + "," + std::to_string(o.seed) + "," + (o.feasible ? "1" : "0") + "," +
           (o.success ? "1" : "0") + "," + num(o.relative_error);
    if (r.campaign.log_runtime) out += "," + short_num(o.runtime_s);
    out += '\n';
  }
  return out;
}

std::string efficiency_csv(const PtResult& r) {
  const Campaign& c = r.campaign;
  const std::vector<std::size_t> f = frontier(r);
  std::string out = "k,n,frontier_lines,line_samples,point_samples,ratio\n";
  for (std::size_t ki = 0; ki < c.discs.size(); ++ki) {
    const std::size_t n = c.side_for(c.discs[ki]);
    const std::size_t point = n * n;
    out += std::to_string(c.discs[ki]) + "," + std::to_string(n) + ",";
    if (f[ki] == 0) {
      out += ",," + std::to_string(point) + ",\n";
      continue;
    }
    const std::size_t line = f[ki] * n;
    out += std::to_string(f[ki]) + "," + std::to_string(line) + "," + std::to_string(point) + "," +
           short_num(static_cast<double>(point) / static_cast<double>(line)) + "\n";
  }
  return out;
}

std::string pt_pgm(const PtResult& r) {
  const Campaign& c = r.campaign;
  std::string out = "P2\n" + std::to_string(c.discs.size()) + " " + std::to_string(c.lines.size()) + "\n255\n";
  for (std::size_t li = c.lines.size(); li-- > 0;) {
    for (std::size_t ki = 0; ki < c.discs.size(); ++ki) {
      const double v = r.at(li, ki);
      out += (ki ? " " : "") + std::to_string(std::isnan(v) ? 0 : static_cast<int>(std::lround(255.0 * v)));
    }
    out += '\n';
  }
  return out;
}

void write_campaign(const std::filesystem::path& dir, const PtResult& r) {
  std::filesystem::create_directories(dir);
  const std::string mode = r.campaign.mode == PtMode::fixed_area ? "fixed_area" : "fixed_density";
  write_text(dir / ("pt_" + mode + ".csv"), pt_csv(r));
  write_text(dir / ("efficiency_" + mode + ".csv"), efficiency_csv(r));
  write_text(dir / ("trials_" + mode + ".csv"), trials_csv(r));
  write_text(dir / ("pt_" + mode + ".pgm"), pt_pgm(r));
}

// ---------------------------------------------------------------------------
// Reweighting versus vanilla Lasso
// ---------------------------------------------------------------------------

void ReweightCampaign::validate() const {
  if (discs.empty()) throw DomainError("reweight campaign needs at least one disc count");
  if (trials < 1) throw DomainError("reweight campaign needs trials >= 1");
  if (n < 8) throw DomainError("campaign image side must be >= 8");
  if (!(r > 0.0)) throw DomainError("campaign motif radius must be positive");
  if (!(big_scale > 0.0) || !(small_scale > 0.0)) throw DomainError("Lasso scales must be positive");
  solver.validate();
}

ReweightCampaign ReweightCampaign::from(const io::KeyValues& kv) {
  ReweightCampaign c;
  c.discs = parse_range(kv.get("discs", format_range(c.discs)));
  c.lines = static_cast<std::size_t>(kv.get("lines", 0L));
  c.trials = static_cast<std::size_t>(kv.get("trials", static_cast<long>(c.trials)));
  c.seed = static_cast<std::uint64_t>(kv.get("seed", 0L));
  c.n = static_cast<std::size_t>(kv.get("n", static_cast<long>(c.n)));
  c.r = kv.get("r", c.r);
  c.ratio = kv.get("ratio", c.ratio);
  c.big_scale = kv.get("big_C", c.big_scale);
  c.small_scale = kv.get("small_C", c.small_scale);
  c.threads = static_cast<unsigned>(kv.get("threads", 0L));
  c.solver = io::solver_config_from(kv);
  c.validate();
  return c;
}

void ReweightCampaign::put(io::KeyValues& kv) const {
  io::put_solver_config(kv, solver);
  kv.set("discs", format_range(discs));
  kv.set("lines", std::to_string(lines));
  kv.set("trials", std::to_string(trials));
  kv.set("seed", std::to_string(seed));
  kv.set("n", std::to_string(n));
  kv.set("r", num(r));
  kv.set("ratio", num(ratio));
  kv.set("big_C", num(big_scale));
  kv.set("small_C", num(small_scale));
  kv.set("threads", std::to_string(threads));
}

ReweightResult reweight_comparison(const ReweightCampaign& c) {
  c.validate();
  ReweightResult res;
  res.campaign = c;
  res.errors.resize(c.discs.size() * c.trials);
  const Motif motif = campaign_motif("disc", c.r);
  parallel_for(res.errors.size(), resolve_threads(c.threads), [&](std::size_t j) {
    const std::size_t k = c.discs[j / c.trials], trial = j % c.trials, m = c.lines_for(k);
    SampleSpec spec;
    spec.n = c.n;
    spec.k = k;
    spec.r = c.r;
    spec.min_sep_ratio = c.ratio;
    spec.seed = trial_seed(c.seed, m, k, trial);
    const SparseMap x = generate_sample(spec);
    const Image y0 = convolve_motif(x, motif);
    const LineScanSet scans =
        simulate_scan(x, motif, random_geometry(m, c.n, trial_seed(c.seed, m, k, trial, 1)), std::nullopt, 0.0, 1);
    SolverConfig lasso = c.solver;
    lasso.rounds = 1;
    lasso.iterations = c.solver.rounds * c.solver.iterations;
    auto err = [&](const SolverConfig& cfg) {
      return normalized_image_error(reconstruct(scans, motif, std::nullopt, cfg).y, y0);
    };
    auto& e = res.errors[j];
    e[0] = err(c.solver);
    lasso.reweight_scale = c.big_scale;
    e[1] = err(lasso);
    lasso.reweight_scale = c.small_scale;
    e[2] = err(lasso);
  });
  for (std::size_t ki = 0; ki < c.discs.size(); ++ki) {
    ReweightRow row;
    row.discs = c.discs[ki];
    row.lines = c.lines_for(row.discs);
    for (std::size_t t = 0; t < c.trials; ++t) {
      const auto& e = res.errors[ki * c.trials + t];
      row.reweight += e[0];
      row.lasso_big += e[1];
      row.lasso_small += e[2];
    }
    const double inv = 1.0 / static_cast<double>(c.trials);
    row.reweight *= inv;
    row.lasso_big *= inv;
    row.lasso_small *= inv;
    res.rows.push_back(row);
  }
  return res;
}

std::string reweight_csv(const ReweightResult& r) {
  std::string out = "discs,lines,reweight,lasso_big,lasso_small\n";
  for (const ReweightRow& row : r.rows)
    out += std::to_string(row.discs) + "," + std::to_string(row.lines) + "," + num(row.reweight) + "," +
           num(row.lasso_big) + "," + num(row.lasso_small) + "\n";
  return out;
}

}  // namespace lscs::harness
