#include <doctest.h>

#include "helpers.hpp"
#include "lscs/io.hpp"
#include "lscs/motif.hpp"
#include "lscs/ops.hpp"

#include <fstream>

using namespace lscs;

TEST_CASE("unit-mass disc of radius 1 is a centre cross") {
  Image d = render_motif(Motif{MotifKind::disc, 1.0, MotifNormalization::unit_mass}, 5);
  CHECK(d.sum() == doctest::Approx(1.0).epsilon(1e-15));
  for (std::size_t r = 0; r < 5; ++r)
    for (std::size_t c = 0; c < 5; ++c) {
      bool cross = (r == 2 && c >= 1 && c <= 3) || (c == 2 && r >= 1 && r <= 3);
      CHECK(d(r, c) == (cross ? 0.2 : 0.0));
    }
}

TEST_CASE("gaussian with unit line projection") {
  Motif g{MotifKind::gaussian, 2.0, MotifNormalization::unit_line_projection};
  Image d = render_motif(g, 64);
  LineScanSet r = line_project(d, ScanGeometry{{0.0}, 64, true});
  CHECK(r.norm() == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("gaussian motif is symmetric under quarter turns about its centre") {
  Image d = render_motif(Motif{MotifKind::gaussian, 2.5, MotifNormalization::unit_mass}, 33);
  CHECK(rotate(static_cast<const Grid&>(d), 90.0) == static_cast<const Grid&>(d));
}

TEST_CASE("motif larger than the grid is rejected") {
  CHECK_THROWS_WITH_AS(render_motif(Motif{MotifKind::disc, 40.0}, 64), "motif exceeds grid", DomainError);
  CHECK_THROWS_AS(render_motif(Motif{MotifKind::disc, 32.0}, 64), DomainError);
}

TEST_CASE("motif grammar") {
  Motif a = Motif::parse("disc:3");
  CHECK(a.kind == MotifKind::disc);
  CHECK(a.radius == 3.0);
  CHECK(a.normalization == MotifNormalization::unit_mass);
  Motif b = Motif::parse("gauss:2");
  CHECK(b.kind == MotifKind::gaussian);
  CHECK(b.normalization == MotifNormalization::unit_line_projection);
  CHECK(Motif::parse("gauss:1.5:mass").normalization == MotifNormalization::unit_mass);
  CHECK(Motif::parse(b.to_string()).radius == 2.0);
  CHECK_THROWS_AS(Motif::parse("square:3"), DomainError);
  CHECK_THROWS_AS(Motif::parse("disc:-1"), DomainError);
  CHECK_THROWS_AS(Motif::parse("disc:x"), DomainError);
  CHECK_THROWS_AS(Motif::parse("disc"), DomainError);
}

TEST_CASE("convolving a centred spike reproduces the motif") {
  for (const char* spec : {"disc:3", "gauss:2", "disc:2.5"}) {
    Motif m = Motif::parse(spec);
    SparseMap x(32);
    x(16, 16) = 1.0;
    CHECK(static_cast<const Grid&>(convolve_motif(x, m)) == static_cast<const Grid&>(render_motif(m, 32)));
    CHECK(convolve_motif(SparseMap(32), m).norm() == 0.0);
  }
}

TEST_CASE("two separated discs give two disjoint discs of the summed mass") {
  Motif m = Motif::parse("disc:3");
  SparseMap x(40);
  x(10, 20) = 1.0;
  x(22, 20) = 1.0;
  Image y = convolve_motif(x, m);
  Image single = render_motif(m, 40);
  // Direct summation: each pixel sees only the disc around the nearer spike.
  for (std::size_t r = 0; r < 40; ++r)
    for (std::size_t c = 0; c < 40; ++c) {
      double d1 = std::hypot(r - 10.0, c - 20.0), d2 = std::hypot(r - 22.0, c - 20.0);
      double expect = (d1 <= 3.0 ? single(20, 20) : 0.0) + (d2 <= 3.0 ? single(20, 20) : 0.0);
      CHECK(y(r, c) == doctest::Approx(expect));
      CHECK(!(d1 <= 3.0 && d2 <= 3.0));
    }
  CHECK(y.sum() == doctest::Approx(2.0 * single.sum()));
}

TEST_CASE("motif convolution is linear and its correlation is the adjoint") {
  std::mt19937_64 rng(11);
  for (const char* spec : {"disc:3", "gauss:1.5"}) {
    MotifKernel k(Motif::parse(spec), 24);
    Grid a = testing::random_grid(24, rng), b = testing::random_grid(24, rng);
    Grid comb(24);
    for (std::size_t i = 0; i < comb.size(); ++i) comb.values()[i] = 3.0 * a.values()[i] + 0.25 * b.values()[i];
    Grid ka = k.apply(a), kb = k.apply(b), kc = k.apply(comb);
    for (std::size_t i = 0; i < kc.size(); ++i)
      CHECK(std::abs(kc.values()[i] - 3.0 * ka.values()[i] - 0.25 * kb.values()[i]) <= 1e-10);
    CHECK(std::abs(k.apply(a).dot(b) - a.dot(k.apply_adjoint(b))) <= 1e-12 * ka.norm() * b.norm());
  }
}

TEST_CASE("supersampled disc has fractional edge coverage") {
  Motif m{MotifKind::disc, 2.5, MotifNormalization::unit_mass, 4};
  Image d = render_motif(m, 16);
  CHECK(d.sum() == doctest::Approx(1.0));
  int fractional = 0;
  for (double v : d.values())
    if (v > 0.0 && v < d(8, 8)) ++fractional;
  CHECK(fractional > 0);
}

TEST_CASE("image CSV output") {
  auto path = testing::temp_path("zeros.csv");
  io::write_grid_csv(path, Grid(3));
  std::ifstream in(path);
  std::string l1, l2, l3, l4;
  std::getline(in, l1);
  std::getline(in, l2);
  std::getline(in, l3);
  CHECK(l1 == "0,0,0");
  CHECK(l2 == "0,0,0");
  CHECK(l3 == "0,0,0");
  CHECK(!std::getline(in, l4));
}

TEST_CASE("grid round trips") {
  std::mt19937_64 rng(12);
  Grid g = testing::random_grid(16, rng, 0.0, 1e3);
  auto csv = testing::temp_path("rt.csv");
  auto bin = testing::temp_path("rt.lscs");
  io::write_grid(csv, g);
  io::write_grid(bin, g);
  CHECK(testing::max_abs_diff(io::read_grid(csv).values(), g.values()) <= 1e-12);
  CHECK(io::read_grid(bin) == g);
  CHECK(io::read_grid_binary(bin) == g);
  SparseMap x(16);
  x(3, 4) = 2.5;
  io::write_grid(csv, x);
  CHECK(io::read_sparse_map(csv) == x);
}

TEST_CASE("grid parse errors name the line") {
  auto path = testing::temp_path("bad.csv");
  {
    std::ofstream out(path);
    out << "1,2\n3,abc\n";
  }
  CHECK_THROWS_WITH_AS(io::read_grid_csv(path), "row 2: non-numeric cell 'abc'", ParseError);
  {
    std::ofstream out(path);
    out << "1,2,3\n4,5,6\n7,8\n";
  }
  CHECK_THROWS_WITH_AS(io::read_grid_csv(path), "row 3: expected 3 columns", ParseError);
  {
    std::ofstream out(path);
    out << "1,-2\n3,4\n";
  }
  CHECK_THROWS_AS(io::read_sparse_map(path), DomainError);
}

TEST_CASE("scan set round trip and header") {
  std::mt19937_64 rng(13);
  ScanGeometry geom{{0.0, 30.0, -60.5}, 10, true};
  LineScanSet r(geom, padded_size(10));
  std::uniform_real_distribution<double> u(-5, 5);
  for (double& v : r.values()) v = u(rng);
  auto path = testing::temp_path("scan.csv");
  io::write_scanset(path, r);
  io::ScanFile back = io::read_scanset(path);
  CHECK(back.stride == 1);
  CHECK(back.scans.geometry().n == 10);
  CHECK(back.scans.geometry().angles_deg == geom.angles_deg);
  CHECK(testing::max_abs_diff(back.scans.values(), r.values()) <= 1e-12);

  std::ifstream in(path);
  std::string comment, header;
  std::getline(in, comment);
  std::getline(in, header);
  CHECK(header == "0,30,-60.5");
}

TEST_CASE("scan CSV with a short row reports its line") {
  auto path = testing::temp_path("short.csv");
  {
    std::ofstream out(path);
    out << "0,45,90\n";
    for (int i = 0; i < 7; ++i) out << (i == 3 ? "1,2\n" : "1,2,3\n");
  }
  CHECK_THROWS_WITH_AS(io::read_scanset(path, std::size_t{4}), "row 5: expected 3 columns", ParseError);
}

TEST_CASE("scan CSV without the comment infers the image side") {
  auto path = testing::temp_path("nocomment.csv");
  {
    std::ofstream out(path);
    out << "0,90\n";
    for (std::size_t i = 0; i < padded_size(60); ++i) out << "0,0\n";
  }
  CHECK(io::read_scanset(path).scans.geometry().n == 60);
  CHECK(io::read_scanset(path, std::size_t{62}).scans.geometry().n == 62);
}

TEST_CASE("PSF and box files") {
  PsfVector p{{2.0, 0.5, 1.5, 3.0, 2.0, 0.7}};
  auto path = testing::temp_path("psf.csv");
  io::write_psf_lines(path, {p, p});
  auto lines = io::read_psf_lines(path);
  REQUIRE(lines.size() == 2);
  CHECK(lines[1] == p);
  PsfBox box;
  box.upper[PsfVector::sigma] = 3.0;
  io::write_psf_box(path, box);
  PsfBox b2 = io::read_psf_box(path);
  CHECK(b2.lower == box.lower);
  CHECK(b2.upper == box.upper);
  {
    std::ofstream out(path);
    out << "1,1,1,1,1,0\n2,0.5,1,1,1,0\n";
  }
  CHECK_THROWS_AS(io::read_psf_box(path), ParseError);
}

TEST_CASE("key=value files") {
  auto kv = io::KeyValues::parse("# solver\nK=3\nL = 20\nC=0.25\nearly_stop=off\n");
  SolverConfig c = io::solver_config_from(kv);
  CHECK(c.rounds == 3);
  CHECK(c.iterations == 20);
  CHECK(c.reweight_scale == 0.25);
  CHECK(!c.early_stop);
  kv.require_all_used();
  CHECK_THROWS_WITH_AS(io::KeyValues::parse("K=1\nnonsense\n"), "row 2: expected key=value", ParseError);
  auto extra = io::KeyValues::parse("K=1\nbogus=2\n");
  io::solver_config_from(extra);
  CHECK_THROWS_WITH_AS(extra.require_all_used(), "row 2: unknown key 'bogus'", ParseError);
  CHECK_THROWS_AS(io::solver_config_from(io::KeyValues::parse("alpha=1.0")), DomainError);
  io::KeyValues out;
  io::put_solver_config(out, c);
  SolverConfig c2 = io::solver_config_from(io::KeyValues::parse(out.dump()));
  CHECK(c2.rounds == c.rounds);
  CHECK(c2.reweight_scale == c.reweight_scale);
}

TEST_CASE("value type invariants") {
  CHECK_THROWS_AS(Image(1), DomainError);
  CHECK_THROWS_AS(Image(2, {0, 1, 2}), DomainError);
  CHECK_THROWS_AS(Image(2, {0, 1, 2, NAN}), DomainError);
  CHECK_THROWS_AS((ScanGeometry{{0.0, 0.0}, 8, true}.validate()), DomainError);
  CHECK_THROWS_AS((ScanGeometry{{180.0}, 8, true}.validate()), DomainError);
  CHECK_THROWS_AS((ScanGeometry{{}, 8, true}.validate()), DomainError);
  SparseMap x(3);
  x(1, 2) = 0.5;
  auto s = x.support();
  REQUIRE(s.size() == 1);
  CHECK(s[0] == Pixel{1, 2});
  PsfBox bad;
  bad.lower[0] = 0.0;
  CHECK_THROWS_AS(bad.validate(), DomainError);
  CHECK_THROWS_AS(PsfParams::uniform(2, PsfVector{{0.0, 1, 1, 1, 1, 0}}, PsfBox{}).validate(), DomainError);
  SolverConfig cfg;
  cfg.rounds = 0;
  CHECK_THROWS_AS(cfg.validate(), DomainError);
}
