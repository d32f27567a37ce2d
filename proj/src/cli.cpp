#include "lscs/cli.hpp"

#include "lscs/analysis.hpp"
#include "lscs/harness.hpp"
#include "lscs/io.hpp"
#include "lscs/motif.hpp"
#include "lscs/sim.hpp"
#include "lscs/solver.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <ostream>

namespace lscs::cli {

namespace {

namespace fs = std::filesystem;

// Options that feed a key=value configuration. Values given on the command
// line override the file named by --config.
class KeyOptions {
 public:
  explicit KeyOptions(CLI::App* app) : app_(app) {
    app_->add_option("--config", config_, "key=value configuration file");
  }

  void add(const std::string& flag, const std::string& key, const std::string& help) {
    CLI::Option* opt = app_->add_option(flag, values_[key], help);
    options_.emplace_back(opt, key);
  }

  io::KeyValues collect() const {
    io::KeyValues kv = config_.empty() ? io::KeyValues() : io::KeyValues::load(config_);
    for (const auto& [opt, key] : options_)
      if (opt->count() > 0) kv.set(key, values_.at(key));
    return kv;
  }

 private:
  CLI::App* app_;
  std::string config_;
  std::map<std::string, std::string> values_;
  std::vector<std::pair<CLI::Option*, std::string>> options_;
};

struct AngleOptions {
  std::vector<double> angles;
  std::size_t m = 0;
  std::string mode = "equispaced";

  void add(CLI::App* app) {
    app->add_option("--angles", angles, "comma-separated scan angles in degrees")->delimiter(',');
    app->add_option("--m", m, "number of scan angles when --angles is absent");
    app->add_option("--angle-mode", mode, "random or equispaced")->check(CLI::IsMember({"random", "equispaced"}));
  }

  ScanGeometry geometry(std::size_t n, std::uint64_t seed) const {
    ScanGeometry g;
    if (!angles.empty()) {
      if (m != 0 && m != angles.size()) throw DomainError("--m disagrees with the number of --angles");
      g.n = n;
      for (double a : angles) g.angles_deg.push_back(wrap_degrees(a));
    } else {
      if (m == 0) throw DomainError("give --angles or --m");
      g = mode == "random" ? random_geometry(m, n, seed) : ScanGeometry::equispaced(m, n);
    }
    g.validate();
    return g;
  }
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
}

void require_parent(const fs::path& path) {
  const fs::path parent = path.parent_path();
  if (!parent.empty() && !fs::is_directory(parent)) throw Error("output directory " + parent.string() + " does not exist");
}

// Per-line PSF rows; a single row applies to every line.
std::vector<PsfVector> psf_rows(const fs::path& path, std::size_t m) {
  std::vector<PsfVector> rows = io::read_psf_lines(path);
  if (rows.size() == 1) rows.assign(m, rows[0]);
  if (rows.size() != m)
    throw DomainError(path.string() + " has " + std::to_string(rows.size()) + " PSF rows for " + std::to_string(m) +
                      " scan lines");
  return rows;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Line-scan sparse imaging: simulate, reconstruct and analyse line-probe measurements", "lscs"};
  app.require_subcommand(1);
  app.fallthrough();
  unsigned threads = 0;
  app.add_option("--threads", threads, "worker threads for campaigns (default LSCS_THREADS or all cores)");

  std::function<void()> action;

  // generate
  CLI::App* gen = app.add_subcommand("generate", "draw a random sparse sample");
  KeyOptions gen_kv(gen);
  gen_kv.add("--n", "n", "image side");
  gen_kv.add("--k", "k", "number of discs");
  gen_kv.add("--r", "r", "disc radius in pixels");
  gen_kv.add("--ratio", "ratio", "minimum separation d/2r");
  gen_kv.add("--seed", "seed", "random seed");
  gen_kv.add("--placement", "placement", "random, hexagonal or explicit");
  gen_kv.add("--centers", "centers", "explicit centres r:c;r:c");
  gen_kv.add("--magnitudes", "magnitudes", "equal or uniform");
  gen_kv.add("--mag-lo", "mag_lo", "lowest magnitude");
  gen_kv.add("--mag-hi", "mag_hi", "highest magnitude");
  gen_kv.add("--margin", "margin", "border kept free of centres (-1 = ceil(r))");
  fs::path gen_out;
  gen->add_option("-o,--output", gen_out, "sparse map file (.csv or .lscs)")->required();
  gen->callback([&] {
    action = [&] {
      io::KeyValues kv = gen_kv.collect();
      SampleSpec spec = SampleSpec::from(kv);
      kv.require_all_used();
      require_parent(gen_out);
      SparseMap x = generate_sample(spec);
      io::write_grid(gen_out, x);
      out << "wrote " << gen_out.string() << " (" << x.support().size() << " spikes, n=" << x.n() << ")\n";
    };
  });

  // scan
  CLI::App* scan = app.add_subcommand("scan", "simulate line scans of a sample");
  fs::path scan_sample, scan_psf, scan_box, scan_out;
  std::string scan_motif = "disc:3";
  AngleOptions scan_angles;
  double noise = 0.0;
  std::size_t stride = 1;
  std::uint64_t scan_seed = 0;
  scan->add_option("--sample", scan_sample, "sparse map file")->required();
  scan->add_option("--motif", scan_motif, "motif kind:radius[:mass|line]");
  scan_angles.add(scan);
  scan->add_option("--psf", scan_psf, "PSF parameter rows (one row or one per line)");
  scan->add_option("--psf-box", scan_box, "PSF box file");
  scan->add_option("--noise", noise, "gaussian noise standard deviation");
  scan->add_option("--stride", stride, "keep every stride-th sample");
  scan->add_option("--seed", scan_seed, "seed for random angles and noise");
  scan->add_option("-o,--output", scan_out, "scan CSV")->required();
  scan->callback([&] {
    action = [&] {
      SparseMap x = io::read_sparse_map(scan_sample);
      Motif motif = Motif::parse(scan_motif);
      ScanGeometry geom = scan_angles.geometry(x.n(), scan_seed);
      std::optional<PsfParams> psf;
      if (!scan_psf.empty()) {
        PsfParams p;
        p.lines = psf_rows(scan_psf, geom.m());
        if (!scan_box.empty()) p.box = io::read_psf_box(scan_box);
        p.coupling = PsfCoupling::independent;
        p.validate();
        psf = p;
      }
      require_parent(scan_out);
      LineScanSet r = simulate_scan(x, motif, geom, psf, noise, stride, scan_seed);
      io::write_scanset(scan_out, r, stride);
      out << "wrote " << scan_out.string() << " (" << r.m() << " lines x " << r.rows() << " samples)\n";
    };
  });

  // reconstruct
  CLI::App* rec = app.add_subcommand("reconstruct", "reweighted, PSF-calibrating reconstruction");
  fs::path rec_scans, rec_psf, rec_box, rec_out;
  std::string rec_motif = "disc:3", coupling = "shared";
  std::size_t rec_n = 0;
  KeyOptions rec_kv(rec);
  rec->add_option("--scans", rec_scans, "scan CSV")->required();
  rec->add_option("--motif", rec_motif, "motif kind:radius[:mass|line]");
  rec->add_option("--n", rec_n, "image side when the scan file does not record it");
  rec->add_option("--psf-init", rec_psf, "initial PSF rows; absent = delta PSF");
  rec->add_option("--psf-box", rec_box, "PSF box; absent = PSF held at --psf-init");
  rec->add_option("--coupling", coupling, "shared (per-line amplitude) or independent")
      ->check(CLI::IsMember({"shared", "independent"}));
  rec_kv.add("--K", "K", "reweighting rounds");
  rec_kv.add("--L", "L", "iterations per round");
  rec_kv.add("--C", "C", "reweight scale");
  rec_kv.add("--eps", "eps", "reweight floor");
  rec_kv.add("--alpha", "alpha", "inertia");
  rec_kv.add("--seed", "seed", "recorded seed");
  rec_kv.add("--psf-half-width", "psf_half_width", "PSF half width (0 = from the box)");
  rec->add_option("-o,--output", rec_out, "output directory")->required();
  rec->callback([&] {
    action = [&] {
      io::KeyValues kv = rec_kv.collect();
      SolverConfig cfg = io::solver_config_from(kv);
      kv.require_all_used();
      io::ScanFile file = io::read_scanset(rec_scans, rec_n ? std::optional<std::size_t>(rec_n) : std::nullopt);
      Motif motif = Motif::parse(rec_motif);
      std::optional<PsfParams> psf;
      if (!rec_psf.empty()) {
        PsfParams p;
        p.lines = psf_rows(rec_psf, file.scans.m());
        p.coupling = coupling == "shared" ? PsfCoupling::shared_shape : PsfCoupling::independent;
        p.box = rec_box.empty() ? PsfBox{} : io::read_psf_box(rec_box);
        if (rec_box.empty()) {
          p.box.lower = p.box.upper = p.lines[0];
          for (const auto& line : p.lines)
            for (std::size_t c = 0; c < PsfVector::kDim; ++c) {
              p.box.lower[c] = std::min(p.box.lower[c], line[c]);
              p.box.upper[c] = std::max(p.box.upper[c], line[c]);
            }
          p.box.validate();
          if (!p.box.collapsed()) throw DomainError("--psf-init rows differ; give --psf-box to calibrate them");
        }
        p.validate();
        psf = p;
      } else if (!rec_box.empty()) {
        throw DomainError("--psf-box needs --psf-init");
      }
      if (fs::exists(rec_out) && !fs::is_directory(rec_out)) throw Error(rec_out.string() + " is not a directory");
      SolverResult res = reconstruct(file.scans, motif, psf, cfg, file.stride);
      write_solver_result(rec_out, res, cfg, motif);
      out << "wrote " << rec_out.string() << " (" << res.objective.size() << " iterations, objective "
          << fmt("%.6g", res.objective.empty() ? 0.0 : res.objective.back()) << ", "
          << static_cast<std::size_t>(res.location_map.sum()) << " map pixels)\n";
    };
  });

  // analyze-coherence
  CLI::App* coh = app.add_subcommand("analyze-coherence", "coherence of two gaussian motifs");
  double coh_r = 2.0, coh_d = 4.0;
  std::size_t coh_m = 360;
  coh->add_option("--r", coh_r, "gaussian width")->required();
  coh->add_option("--d", coh_d, "centre distance")->required();
  coh->add_option("--m", coh_m, "equispaced angles for the empirical value (0 = skip)");
  coh->callback([&] {
    action = [&] {
      analysis::CoherenceBounds b = analysis::coherence_bounds(coh_r, coh_d);
      out << "r=" << fmt("%.17g", coh_r) << "\nd=" << fmt("%.17g", coh_d) << "\nlower=" << fmt("%.17g", b.lower)
          << "\nupper=" << fmt("%.17g", b.upper)
          << "\nexpected=" << fmt("%.17g", analysis::expected_coherence(coh_r, coh_d)) << "\n";
      if (coh_m > 0)
        out << "empirical=" << fmt("%.17g", analysis::normalized_coherence(coh_r, coh_d, coh_m)) << "\nm=" << coh_m
            << "\n";
    };
  });

  // analyze-spectrum
  CLI::App* spec = app.add_subcommand("analyze-spectrum", "radial spectrum of the averaged line operator");
  double spec_r = 1.0, spec_eps = 0.01;
  std::size_t spec_angles = 360, spec_n = 128;
  fs::path spec_out;
  spec->add_option("--r", spec_r, "gaussian width");
  spec->add_option("--angles", spec_angles, "equispaced angles");
  spec->add_option("--n", spec_n, "image side");
  spec->add_option("--eps", spec_eps, "cutoff level");
  spec->add_option("-o,--output", spec_out, "spectrum CSV");
  spec->callback([&] {
    action = [&] {
      if (!spec_out.empty()) require_parent(spec_out);
      analysis::SpectrumReport rep = analysis::lowpass_spectrum(spec_r, spec_angles, spec_n, spec_eps);
      if (!spec_out.empty()) write_text(spec_out, rep.to_csv());
      out << "cutoff=" << fmt("%.6g", rep.cutoff) << "\nanalytic_cutoff=" << fmt("%.6g", rep.analytic_cutoff)
          << "\nmax_relative_deviation=" << fmt("%.6g", rep.max_relative_deviation(0.05, 0.3)) << "\n";
    };
  });

  // certify
  CLI::App* cert = app.add_subcommand("certify", "build and check a dual certificate for a sample");
  fs::path cert_sample, cert_out;
  std::string cert_motif = "disc:1";
  AngleOptions cert_angles;
  std::uint64_t cert_seed = 0;
  cert->add_option("--sample", cert_sample, "sparse map file")->required();
  cert->add_option("--motif", cert_motif, "motif kind:radius[:mass|line]");
  cert_angles.add(cert);
  cert->add_option("--seed", cert_seed, "seed for random angles");
  cert->add_option("-o,--output", cert_out, "certificate field file");
  cert->callback([&] {
    action = [&] {
      SparseMap x = io::read_sparse_map(cert_sample);
      Motif motif = Motif::parse(cert_motif);
      ScanGeometry geom = cert_angles.geometry(x.n(), cert_seed);
      if (!cert_out.empty()) require_parent(cert_out);
      analysis::CertificateReport rep =
          analysis::check_certificate(x, motif, geom, analysis::dual_certificate(x, motif, geom));
      if (!cert_out.empty()) io::write_grid(cert_out, rep.field);
      out << rep.summary() << "\n";
    };
  });

  // bench-pt
  CLI::App* pt = app.add_subcommand("bench-pt", "phase-transition campaign");
  KeyOptions pt_kv(pt);
  pt_kv.add("--mode", "mode", "fixed-area or fixed-density");
  pt_kv.add("--lines", "lines", "line counts, e.g. 2..16");
  pt_kv.add("--discs", "discs", "disc counts, e.g. 2..20");
  pt_kv.add("--trials", "trials", "trials per cell");
  pt_kv.add("--seed", "seed", "campaign seed");
  pt_kv.add("--n", "n", "image side");
  pt_kv.add("--r", "r", "disc radius");
  pt_kv.add("--ratio", "ratio", "minimum separation d/2r");
  pt_kv.add("--angle-mode", "angles", "random or equispaced");
  pt_kv.add("--K", "K", "reweighting rounds");
  pt_kv.add("--L", "L", "iterations per round");
  fs::path pt_out;
  pt->add_option("-o,--output", pt_out, "output directory")->required();
  pt->callback([&] {
    action = [&] {
      io::KeyValues kv = pt_kv.collect();
      harness::Campaign c = harness::Campaign::from(kv);
      kv.require_all_used();
      if (threads) c.threads = threads;
      if (fs::exists(pt_out) && !fs::is_directory(pt_out)) throw Error(pt_out.string() + " is not a directory");
      harness::PtResult r = harness::phase_transition(c);
      harness::write_campaign(pt_out, r);
      out << harness::pt_csv(r);
    };
  });

  // bench-reweight
  CLI::App* rw = app.add_subcommand("bench-reweight", "reweighting versus vanilla Lasso campaign");
  KeyOptions rw_kv(rw);
  rw_kv.add("--discs", "discs", "disc counts");
  rw_kv.add("--lines", "lines", "line count (0 = 8 below 16 discs, else 16)");
  rw_kv.add("--trials", "trials", "trials per disc count");
  rw_kv.add("--seed", "seed", "campaign seed");
  rw_kv.add("--n", "n", "image side");
  rw_kv.add("--r", "r", "disc radius");
  rw_kv.add("--big-C", "big_C", "scale of the big-lambda Lasso");
  rw_kv.add("--small-C", "small_C", "scale of the small-lambda Lasso");
  rw_kv.add("--K", "K", "reweighting rounds");
  rw_kv.add("--L", "L", "iterations per round");
  fs::path rw_out;
  rw->add_option("-o,--output", rw_out, "output directory")->required();
  rw->callback([&] {
    action = [&] {
      io::KeyValues kv = rw_kv.collect();
      harness::ReweightCampaign c = harness::ReweightCampaign::from(kv);
      kv.require_all_used();
      if (threads) c.threads = threads;
      if (fs::exists(rw_out) && !fs::is_directory(rw_out)) throw Error(rw_out.string() + " is not a directory");
      harness::ReweightResult r = harness::reweight_comparison(c);
      fs::create_directories(rw_out);
      write_text(rw_out / "reweight.csv", harness::reweight_csv(r));
      out << harness::reweight_csv(r);
    };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }
  try {
    action();
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kDataError;
  }
  return kOk;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv{"lscs"};
  for (const auto& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace lscs::cli
