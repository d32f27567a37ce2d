#include <doctest.h>

#include "helpers.hpp"
#include "lscs/motif.hpp"
#include "lscs/ops.hpp"
#include "lscs/sim.hpp"

using namespace lscs;

namespace {

double min_pair_distance(const std::vector<Pixel>& s) {
  double best = 1e300;
  for (std::size_t i = 0; i < s.size(); ++i)
    for (std::size_t j = i + 1; j < s.size(); ++j)
      best = std::min(best, std::hypot(double(s[i].row) - double(s[j].row), double(s[i].col) - double(s[j].col)));
  return best;
}

}  // namespace

TEST_CASE("single random spike") {
  SampleSpec spec;
  spec.n = 16;
  spec.k = 1;
  spec.seed = 4;
  SparseMap x = generate_sample(spec);
  auto s = x.support();
  REQUIRE(s.size() == 1);
  CHECK(x.sum() == 1.0);
  CHECK(s[0].row < 16);
}

TEST_CASE("rejection sampler respects the separation") {
  SampleSpec spec;
  spec.n = 64;
  spec.k = 20;
  spec.r = 3;
  spec.min_sep_ratio = 1.0;
  spec.seed = 7;
  SparseMap x = generate_sample(spec);
  auto s = x.support();
  REQUIRE(s.size() == 20);
  CHECK(min_pair_distance(s) >= 6.0);
  CHECK(generate_sample(spec) == x);
  spec.seed = 8;
  CHECK(!(generate_sample(spec) == x));
}

TEST_CASE("overfull sample is infeasible") {
  SampleSpec spec;
  spec.n = 32;
  spec.k = 500;
  spec.r = 3;
  // Packing bound: at most (32 / 6 + 1)^2 / (sqrt(3)/2) ~ 50 discs fit.
  CHECK_THROWS_WITH_AS(generate_sample(spec), "infeasible density", InfeasibleError);
}

TEST_CASE("uniform magnitudes stay in range") {
  SampleSpec spec;
  spec.n = 48;
  spec.k = 6;
  spec.magnitudes = Magnitudes::uniform;
  spec.mag_lo = 0.5;
  spec.mag_hi = 2.0;
  SparseMap x = generate_sample(spec);
  for (auto p : x.support()) {
    CHECK(x(p.row, p.col) >= 0.5);
    CHECK(x(p.row, p.col) <= 2.0);
  }
}

TEST_CASE("sample spec key=value form") {
  auto kv = io::KeyValues::parse("n=64\nk=20\nr=3\nratio=1.0\nplacement=random\nseed=7\n");
  SampleSpec spec = SampleSpec::from(kv);
  kv.require_all_used();
  CHECK(spec.n == 64);
  CHECK(spec.k == 20);
  CHECK(spec.seed == 7);
  io::KeyValues out;
  spec.put(out);
  SampleSpec back = SampleSpec::from(io::KeyValues::parse(out.dump()));
  CHECK(generate_sample(back) == generate_sample(spec));

  auto ex = SampleSpec::from(io::KeyValues::parse("n=20\nk=2\nplacement=explicit\ncenters=5:5;12:14\n"));
  SparseMap x = generate_sample(ex);
  CHECK(x(5, 5) == 1.0);
  CHECK(x(12, 14) == 1.0);
  CHECK_THROWS_AS(generate_sample(SampleSpec::from(io::KeyValues::parse("n=20\nk=2\nplacement=explicit\ncenters=5:5;6:6\n"))),
                  DomainError);
}

TEST_CASE("hexagonal centres") {
  auto one = hexagonal_centers(1, 10.0, 64);
  REQUIRE(one.size() == 1);
  CHECK(one[0] == Pixel{32, 32});
  auto seven = hexagonal_centers(7, 10.0, 64);
  REQUIRE(seven.size() == 7);
  CHECK(seven[0] == Pixel{32, 32});
  for (std::size_t i = 1; i < 7; ++i) {
    double d = std::hypot(double(seven[i].row) - 32.0, double(seven[i].col) - 32.0);
    CHECK(std::abs(d - 10.0) <= 0.51);
  }
  for (std::size_t i = 0; i < 7; ++i) {
    double nearest = 1e9;
    for (std::size_t j = 0; j < 7; ++j)
      if (i != j) nearest = std::min(nearest, std::hypot(double(seven[i].row) - double(seven[j].row), double(seven[i].col) - double(seven[j].col)));
    CHECK(std::abs(nearest - 10.0) <= 0.51);
  }
  CHECK_THROWS_AS(hexagonal_centers(10000, 10.0, 64), DomainError);
}

TEST_CASE("simulate_scan composition") {
  SampleSpec spec;
  spec.n = 40;
  spec.k = 3;
  spec.seed = 3;
  SparseMap x = generate_sample(spec);
  Motif d = Motif::parse("disc:3");
  ScanGeometry geom{{0.0, 33.0, 120.0}, 40, true};

  LineScanSet zero = simulate_scan(SparseMap(40), d, geom, std::nullopt, 0.0, 1);
  CHECK(zero.norm() == 0.0);
  LineScanSet noise = simulate_scan(SparseMap(40), d, geom, std::nullopt, 0.5, 1, 9);
  CHECK(noise.norm() > 0.0);
  CHECK(simulate_scan(SparseMap(40), d, geom, std::nullopt, 0.5, 1, 9).values()[5] == noise.values()[5]);

  LineScanSet plain = simulate_scan(x, d, geom, std::nullopt, 0.0, 1);
  LineScanSet direct = line_project(convolve_motif(x, d), geom);
  CHECK(testing::max_abs_diff(plain.values(), direct.values()) <= 1e-12);

  PsfParams psf = PsfParams::uniform(3, PsfVector{{1, 1, 1, 1, 1, 0}}, PsfBox::point(PsfVector{{1, 1, 1, 1, 1, 0}}));
  LineScanSet blurred = simulate_scan(x, d, geom, psf, 0.0, 2);
  CHECK(blurred.rows() == (padded_size(40) + 1) / 2);
  LineScanSet full = apply_psf(direct, render_kernels(psf, 0, direct.rows()));
  for (std::size_t t = 0; t < blurred.rows(); ++t) CHECK(blurred(t, 1) == full(2 * t, 1));

  // Linearity in X.
  SparseMap x2 = x;
  for (double& v : x2.values()) v *= 3.0;
  LineScanSet lin = simulate_scan(x2, d, geom, psf, 0.0, 1);
  LineScanSet base = simulate_scan(x, d, geom, psf, 0.0, 1);
  for (std::size_t i = 0; i < lin.values().size(); ++i) CHECK(std::abs(lin.values()[i] - 3.0 * base.values()[i]) <= 1e-10);
}

TEST_CASE("centred disc looks the same at 0 and 90 degrees") {
  const std::size_t n = 41;
  SparseMap x(n);
  x(n / 2, n / 2) = 1.0;
  LineScanSet r = simulate_scan(x, Motif::parse("disc:5"), ScanGeometry{{0.0, 90.0}, n, true}, std::nullopt, 0.0, 1);
  CHECK(testing::max_abs_diff(r.column(0), r.column(1)) <= 1e-6);
}

TEST_CASE("downsampling and its adjoint") {
  std::mt19937_64 rng(5);
  ScanGeometry geom = ScanGeometry::equispaced(2, 8);
  LineScanSet r(geom, 13), s(geom, 5);
  std::uniform_real_distribution<double> u(-1, 1);
  for (double& v : r.values()) v = u(rng);
  for (double& v : s.values()) v = u(rng);
  LineScanSet d = downsample(r, 3);
  CHECK(d.rows() == 5);
  CHECK(d(4, 1) == r(12, 1));
  CHECK(d.dot(s) == doctest::Approx(r.dot(upsample(s, 3, 13))));
}

TEST_CASE("random geometry is reproducible and distinct") {
  ScanGeometry a = random_geometry(6, 32, 11), b = random_geometry(6, 32, 11);
  CHECK(a.angles_deg == b.angles_deg);
  a.validate();
}
