#include <doctest.h>

#include "helpers.hpp"
#include "lscs/harness.hpp"

#include <atomic>
#include <cmath>

using namespace lscs;
using namespace lscs::harness;

TEST_CASE("support matching") {
  SparseMap x0(32);
  x0(5, 5) = 1.0;
  x0(20, 12) = 1.0;
  x0(10, 25) = 2.0;
  CHECK(support_match(x0, x0));

  Grid missing = x0;
  missing(20, 12) = 0.0;
  CHECK(!support_match(missing, x0));

  Grid split(32);
  split(5, 5) = 0.5;
  split(5, 6) = 0.5;
  split(20, 12) = 0.6;
  split(21, 12) = 0.6;
  split(10, 25) = 1.0;
  split(11, 26) = 0.9;
  CHECK(support_match(split, x0, 1));

  Grid spurious = x0;
  spurious(28, 28) = 1.5;
  MatchReport rep = match_support(spurious, x0);
  CHECK(!rep.success);
  CHECK(rep.components == 4);
  CHECK(rep.matched == 3);

  Grid shifted(32);
  shifted(7, 5) = 1.0;
  shifted(20, 12) = 1.0;
  shifted(10, 25) = 1.0;
  CHECK(!support_match(shifted, x0, 1));
  CHECK(support_match(shifted, x0, 2));

  // Components below half the peak are ignored.
  Grid faint = x0;
  faint(28, 28) = 0.9;
  CHECK(support_match(faint, x0));
}

TEST_CASE("normalized image error") {
  std::mt19937_64 rng(1);
  Grid a = testing::random_grid(16, rng);
  CHECK(normalized_image_error(a, a) == doctest::Approx(0.0));
  Grid twice = a;
  for (double& v : twice.values()) v *= 2.0;
  CHECK(normalized_image_error(twice, a) == doctest::Approx(0.0).epsilon(1e-15));
  Grid e1(4), e2(4);
  e1(0, 0) = 3.0;
  e2(1, 2) = 0.2;
  CHECK(normalized_image_error(e1, e2) == doctest::Approx(std::sqrt(2.0)));
  CHECK(normalized_image_error(Grid(4), e2) == doctest::Approx(1.0));
  Grid neg = a;
  for (double& v : neg.values()) v = -v;
  CHECK(normalized_image_error(neg, a) == doctest::Approx(2.0));
}

TEST_CASE("ranges, seeds and threads") {
  CHECK(parse_range("2..6") == std::vector<std::size_t>{2, 3, 4, 5, 6});
  CHECK(parse_range("2..9:3") == std::vector<std::size_t>{2, 5, 8});
  CHECK(parse_range("4,1,7") == std::vector<std::size_t>{4, 1, 7});
  CHECK(format_range({1, 2, 5}) == "1,2,5");
  CHECK_THROWS_AS(parse_range("5..2"), DomainError);
  CHECK_THROWS_AS(parse_range("a,b"), DomainError);

  CHECK(trial_seed(1, 2, 3, 4) == trial_seed(1, 2, 3, 4));
  CHECK(trial_seed(1, 2, 3, 4) != trial_seed(1, 3, 2, 4));
  CHECK(trial_seed(1, 2, 3, 4) != trial_seed(2, 2, 3, 4));
  CHECK(trial_seed(1, 2, 3, 4) != trial_seed(1, 2, 3, 4, 1));

  CHECK(resolve_threads(3) == 3);
  CHECK(resolve_threads(0) >= 1);

  for (unsigned t : {1u, 4u}) {
    std::vector<std::size_t> out(100, 0);
    parallel_for(out.size(), t, [&](std::size_t i) { out[i] = i * i; });
    for (std::size_t i = 0; i < out.size(); ++i) CHECK(out[i] == i * i);
    CHECK_THROWS_AS(parallel_for(10, t, [](std::size_t i) {
                      if (i == 7) throw DomainError("job failed");
                    }),
                    DomainError);
  }
}

TEST_CASE("campaign configuration") {
  io::KeyValues kv = io::KeyValues::parse(
      "mode=fixed-density\nlines=1..3\ndiscs=2,4\ntrials=3\nseed=9\nn=40\nr=2\nratio=1.5\nK=2\nL=20\n");
  Campaign c = Campaign::from(kv);
  kv.require_all_used();
  CHECK(c.mode == PtMode::fixed_density);
  CHECK(c.lines == std::vector<std::size_t>{1, 2, 3});
  CHECK(c.solver.rounds == 2);
  CHECK(c.side_for(4) == 40);
  CHECK(c.side_for(2) == 28);
  io::KeyValues back;
  c.put(back);
  Campaign d = Campaign::from(back);
  CHECK(d.lines == c.lines);
  CHECK(d.discs == c.discs);
  CHECK(d.seed == 9);
  CHECK(d.ratio == 1.5);
  CHECK_THROWS_AS(Campaign::from(io::KeyValues::parse("mode=sideways\n")), DomainError);
}

TEST_CASE("small phase transition") {
  Campaign c;
  c.lines = {1, 6};
  c.discs = {1, 2};
  c.trials = 6;
  c.n = 32;
  c.r = 2.0;
  c.ratio = 1.5;
  c.seed = 3;
  c.solver.rounds = 4;
  c.solver.iterations = 40;
  c.threads = 1;
  PtResult r = phase_transition(c);
  CHECK(r.at(1, 0) == 1.0);
  CHECK(r.at(0, 1) <= 1.0 / 6.0);
  for (std::size_t ki = 0; ki < 2; ++ki) CHECK(r.at(1, ki) >= r.at(0, ki));
  CHECK(r.trials.size() == 24);
  for (const TrialOutcome& o : r.trials) {
    CHECK(o.relative_error >= 0.0);
    CHECK(o.relative_error <= 2.0);
  }
  CHECK(frontier(r) == std::vector<std::size_t>{6, 6});

  c.threads = 3;
  PtResult again = phase_transition(c);
  CHECK(pt_csv(again) == pt_csv(r));
  CHECK(trials_csv(again) == trials_csv(r));
  CHECK(efficiency_csv(again) == efficiency_csv(r));

  CHECK(pt_csv(r).rfind("lines,k=1,k=2\n", 0) == 0);
  CHECK(efficiency_csv(r) == "k,n,frontier_lines,line_samples,point_samples,ratio\n1,32,6,192,1024,5.33333\n"
                             "2,32,6,192,1024,5.33333\n");
  CHECK(pt_pgm(r).rfind("P2\n2 2\n255\n", 0) == 0);

  auto dir = testing::temp_path("campaign");
  write_campaign(dir, r);
  for (const char* f : {"pt_fixed_area.csv", "efficiency_fixed_area.csv", "trials_fixed_area.csv", "pt_fixed_area.pgm"})
    CHECK(std::filesystem::exists(dir / f));
}

TEST_CASE("infeasible cells are NaN") {
  Campaign c;
  c.lines = {2};
  c.discs = {40};
  c.trials = 2;
  c.n = 16;
  c.r = 3.0;
  PtResult r = phase_transition(c);
  CHECK(std::isnan(r.at(0, 0)));
  CHECK(pt_csv(r) == "lines,k=40\n2,nan\n");
  CHECK(!r.trials[0].feasible);
}

TEST_CASE("reweight campaign configuration") {
  ReweightCampaign c = ReweightCampaign::from(io::KeyValues::parse("discs=4..20:8\ntrials=2\nbig_C=0.7\n"));
  CHECK(c.discs == std::vector<std::size_t>{4, 12, 20});
  CHECK(c.lines_for(12) == 8);
  CHECK(c.lines_for(20) == 16);
  CHECK(c.big_scale == 0.7);
  io::KeyValues back;
  c.put(back);
  CHECK(ReweightCampaign::from(back).discs == c.discs);

  ReweightCampaign small;
  small.discs = {2};
  small.trials = 2;
  small.n = 32;
  small.r = 2.0;
  small.solver.rounds = 3;
  small.solver.iterations = 30;
  small.threads = 1;
  ReweightResult res = reweight_comparison(small);
  REQUIRE(res.rows.size() == 1);
  CHECK(res.rows[0].lines == 8);
  CHECK(res.rows[0].reweight < res.rows[0].lasso_big);
  CHECK(reweight_csv(res).rfind("discs,lines,reweight,lasso_big,lasso_small\n2,8,", 0) == 0);
}
