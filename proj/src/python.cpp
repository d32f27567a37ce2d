#include "lscs/analysis.hpp"
#include "lscs/harness.hpp"
#include "lscs/ops.hpp"
#include "lscs/psf.hpp"
#include "lscs/sim.hpp"
#include "lscs/solver.hpp"

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <algorithm>

namespace py = pybind11;
using namespace lscs;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Grid to_grid(const Array& a) {
  if (a.ndim() != 2 || a.shape(0) != a.shape(1)) throw DomainError("expected a square 2-D array");
  const std::size_t n = static_cast<std::size_t>(a.shape(0));
  return Grid(n, std::vector<double>(a.data(), a.data() + n * n));
}

Array from_grid(const Grid& g) {
  Array out({g.n(), g.n()});
  std::copy(g.values().begin(), g.values().end(), out.mutable_data());
  return out;
}

ScanGeometry geometry(const std::vector<double>& angles, std::size_t n, bool normalize = true) {
  ScanGeometry g{angles, n, normalize};
  g.validate();
  return g;
}

/// (rows, m) array; column i is the sweep at angle i.
LineScanSet to_scans(const Array& a, const ScanGeometry& g) {
  if (a.ndim() != 2 || static_cast<std::size_t>(a.shape(1)) != g.m())
    throw DomainError("expected a (rows, m) array with one column per angle");
  const std::size_t rows = static_cast<std::size_t>(a.shape(0));
  LineScanSet r(g, rows);
  for (std::size_t t = 0; t < rows; ++t)
    for (std::size_t i = 0; i < g.m(); ++i) r.column(i)[t] = a.data()[t * g.m() + i];
  return r;
}

Array from_scans(const LineScanSet& r) {
  Array out({r.rows(), r.m()});
  for (std::size_t t = 0; t < r.rows(); ++t)
    for (std::size_t i = 0; i < r.m(); ++i) out.mutable_data()[t * r.m() + i] = r(t, i);
  return out;
}

PsfVector to_vector(const std::vector<double>& v) {
  if (v.size() != PsfVector::kDim) throw DomainError("PSF vectors have 6 entries (a, c_l, alpha_l, c_r, alpha_r, sigma)");
  PsfVector p;
  std::copy(v.begin(), v.end(), p.v.begin());
  return p;
}

/// Rows of an (m, 6) array, or one 6-vector broadcast to m lines.
std::vector<PsfVector> to_vectors(const Array& a, std::size_t m) {
  std::vector<PsfVector> out;
  if (a.ndim() == 1) {
    out.assign(m, to_vector(std::vector<double>(a.data(), a.data() + a.shape(0))));
  } else if (a.ndim() == 2 && a.shape(1) == 6 && static_cast<std::size_t>(a.shape(0)) == m) {
    for (std::size_t i = 0; i < m; ++i) out.push_back(to_vector(std::vector<double>(a.data() + 6 * i, a.data() + 6 * i + 6)));
  } else {
    throw DomainError("expected a 6-vector or an (m, 6) array of PSF parameters");
  }
  return out;
}

Array from_vectors(const std::vector<PsfVector>& v) {
  Array out({v.size(), PsfVector::kDim});
  for (std::size_t i = 0; i < v.size(); ++i) std::copy(v[i].v.begin(), v[i].v.end(), out.mutable_data() + 6 * i);
  return out;
}

PsfCoupling parse_coupling(const std::string& s) {
  if (s == "shared" || s == "shared_shape") return PsfCoupling::shared_shape;
  if (s == "independent") return PsfCoupling::independent;
  throw DomainError("coupling must be shared or independent, got " + s);
}

std::optional<PsfParams> make_psf(const std::optional<Array>& params, const std::optional<std::vector<double>>& lower,
                                  const std::optional<std::vector<double>>& upper, const std::string& coupling,
                                  std::size_t m) {
  if (!params) {
    if (lower || upper) throw DomainError("a PSF box needs initial PSF parameters");
    return std::nullopt;
  }
  PsfParams p;
  p.lines = to_vectors(*params, m);
  p.coupling = parse_coupling(coupling);
  if (lower || upper) {
    if (!lower || !upper) throw DomainError("give both psf_lower and psf_upper");
    p.box.lower = to_vector(*lower);
    p.box.upper = to_vector(*upper);
  } else {
    if (!std::all_of(p.lines.begin(), p.lines.end(), [&](const PsfVector& v) { return v == p.lines[0]; }))
      throw DomainError("a fixed PSF must be identical on every line; give a box to calibrate");
    p.box = PsfBox::point(p.lines[0]);
  }
  p.validate();
  return p;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Line-scan convolutional sparse coding";

  py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
  py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);
  py::register_exception<InfeasibleError>(m, "InfeasibleError", PyExc_RuntimeError);
  py::register_exception<SolverError>(m, "SolverError", PyExc_RuntimeError);

  m.def(
      "generate_sample",
      [](std::size_t n, std::size_t k, double r, double min_sep_ratio, std::uint64_t seed, double mag_lo, double mag_hi) {
        SampleSpec s;
        s.n = n;
        s.k = k;
        s.r = r;
        s.min_sep_ratio = min_sep_ratio;
        s.seed = seed;
        if (mag_lo != 1.0 || mag_hi != 1.0) {
          s.magnitudes = Magnitudes::uniform;
          s.mag_lo = mag_lo;
          s.mag_hi = mag_hi;
        }
        return from_grid(generate_sample(s));
      },
      py::arg("n"), py::arg("k"), py::arg("r") = 3.0, py::arg("min_sep_ratio") = 1.0, py::arg("seed") = 0,
      py::arg("mag_lo") = 1.0, py::arg("mag_hi") = 1.0, "Random sparse activation map X.");

  m.def(
      "render_motif", [](const std::string& motif, std::size_t n) { return from_grid(render_motif(Motif::parse(motif), n)); },
      py::arg("motif"), py::arg("n"));

  m.def(
      "convolve_motif",
      [](const Array& x, const std::string& motif) { return from_grid(convolve_motif(SparseMap(to_grid(x)), Motif::parse(motif))); },
      py::arg("x"), py::arg("motif"), "D * X.");

  m.def("equispaced_angles", [](std::size_t k) { return ScanGeometry::equispaced(k, 2).angles_deg; }, py::arg("m"));
  m.def(
      "random_angles", [](std::size_t k, std::uint64_t seed) { return random_geometry(k, 2, seed).angles_deg; },
      py::arg("m"), py::arg("seed") = 0);

  m.def(
      "rotate", [](const Array& y, double degrees) { return from_grid(rotate(to_grid(y), degrees)); }, py::arg("y"),
      py::arg("degrees"), "Three-shear rotation about the grid centre.");

  m.def(
      "line_project",
      [](const Array& y, const std::vector<double>& angles, bool normalize) {
        Grid g = to_grid(y);
        return from_scans(line_project(g, geometry(angles, g.n(), normalize)));
      },
      py::arg("y"), py::arg("angles"), py::arg("normalize") = true, "L_Theta[Y] as a (rows, m) array.");

  m.def(
      "back_project",
      [](const Array& r, const std::vector<double>& angles, std::size_t n, bool normalize) {
        return from_grid(back_project(to_scans(r, geometry(angles, n, normalize))));
      },
      py::arg("r"), py::arg("angles"), py::arg("n"), py::arg("normalize") = true, "Adjoint L*_Theta[R].");

  m.def(
      "render_psf", [](const std::vector<double>& p, int w) { return render_psf(to_vector(p), w).taps; }, py::arg("p"),
      py::arg("half_width"), "PSF taps for offsets -w..w.");

  m.def(
      "simulate_scan",
      [](const Array& x, const std::string& motif, const std::vector<double>& angles, const std::optional<Array>& psf,
         double noise, std::size_t stride, std::uint64_t seed) {
        SparseMap xs(to_grid(x));
        ScanGeometry g = geometry(angles, xs.n());
        std::optional<PsfParams> p;
        if (psf) {
          PsfParams q;
          q.lines = to_vectors(*psf, g.m());
          q.coupling = PsfCoupling::independent;
          p = q;
        }
        return from_scans(simulate_scan(xs, Motif::parse(motif), g, p, noise, stride, seed));
      },
      py::arg("x"), py::arg("motif"), py::arg("angles"), py::arg("psf") = py::none(), py::arg("noise") = 0.0,
      py::arg("stride") = 1, py::arg("seed") = 0, "Simulated line scans, (rows, m).");

  m.def(
      "reconstruct",
      [](const Array& scans, const std::vector<double>& angles, std::size_t n, const std::string& motif,
         const std::optional<Array>& psf_init, const std::optional<std::vector<double>>& psf_lower,
         const std::optional<std::vector<double>>& psf_upper, const std::string& coupling, int rounds, int iterations,
         double C, double epsilon, double inertia, std::size_t stride, int psf_half_width, std::uint64_t seed) {
        ScanGeometry g = geometry(angles, n);
        LineScanSet r = to_scans(scans, g);
        SolverConfig cfg;
        cfg.rounds = rounds;
        cfg.iterations = iterations;
        cfg.reweight_scale = C;
        cfg.epsilon = epsilon;
        cfg.inertia = inertia;
        cfg.psf_half_width = psf_half_width;
        cfg.seed = seed;
        std::optional<PsfParams> p = make_psf(psf_init, psf_lower, psf_upper, coupling, g.m());
        SolverResult res;
        {
          py::gil_scoped_release release;
          res = reconstruct(r, Motif::parse(motif), p, cfg, stride);
        }
        py::dict out;
        out["x"] = from_grid(res.x);
        out["y"] = from_grid(res.y);
        out["location_map"] = from_grid(res.location_map);
        out["objective"] = res.objective;
        out["smooth"] = res.smooth;
        out["round"] = res.round_of_iteration;
        out["psf"] = res.psf ? py::object(from_vectors(res.psf->lines)) : py::object(py::none());
        return out;
      },
      py::arg("scans"), py::arg("angles"), py::arg("n"), py::arg("motif"), py::arg("psf_init") = py::none(),
      py::arg("psf_lower") = py::none(), py::arg("psf_upper") = py::none(), py::arg("coupling") = "shared",
      py::arg("rounds") = 6, py::arg("iterations") = 50, py::arg("C") = 0.1, py::arg("epsilon") = 1e-12,
      py::arg("inertia") = 0.9, py::arg("stride") = 1, py::arg("psf_half_width") = 0, py::arg("seed") = 0,
      "Reweighted reconstruction; returns a dict with x, y, location_map, objective, smooth, round, psf.");

  m.def(
      "support_match",
      [](const Array& xhat, const Array& x0, double tol) {
        return harness::support_match(to_grid(xhat), SparseMap(to_grid(x0)), tol);
      },
      py::arg("xhat"), py::arg("x0"), py::arg("tol_px") = 1.0);

  m.def(
      "coherence_bounds",
      [](double r, double d) {
        auto b = analysis::coherence_bounds(r, d);
        return std::make_pair(b.lower, b.upper);
      },
      py::arg("r"), py::arg("d"));
  m.def("expected_coherence", &analysis::expected_coherence, py::arg("r"), py::arg("d"));
  m.def("normalized_coherence", &analysis::normalized_coherence, py::arg("r"), py::arg("d"), py::arg("m") = 360);
  m.def("hex_least_eigenvalue", &analysis::hex_least_eigenvalue, py::arg("extent"), py::arg("ratio"));
  m.def(
      "lowpass_spectrum",
      [](double r, std::size_t angles, std::size_t n, double eps) {
        auto rep = analysis::lowpass_spectrum(r, angles, n, eps);
        py::dict out;
        out["frequency"] = rep.frequency;
        out["empirical"] = rep.empirical;
        out["analytic"] = rep.analytic;
        out["cutoff"] = rep.cutoff;
        out["analytic_cutoff"] = rep.analytic_cutoff;
        return out;
      },
      py::arg("r"), py::arg("angles"), py::arg("n"), py::arg("eps") = 0.01);
}
