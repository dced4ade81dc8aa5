#include <random>

#include "cohort/calibration.hpp"
#include "cohort/error.hpp"
#include "doctest.h"
#include "fixtures.hpp"

using namespace cohort;
using namespace cohort::testing;

namespace {

// Recall given in hundredths so that comparisons stay exact.
SweepPoint pt(std::size_t size, std::size_t hits, std::size_t f = 0, std::size_t d = 0) {
  return SweepPoint{f, d, size, hits, 100};
}

bool dominates_or_equals(const SweepPoint& a, const SweepPoint& b) {
  return a.group_size <= b.group_size && a.holdout_hits * b.holdout_size >= b.holdout_hits * a.holdout_size;
}

struct TenPatient {
  EventLog log = log_from_rows(ten_patient_rows());
  std::vector<std::string> train{"p01", "p02", "p03", "p06", "p10"};
  std::vector<std::string> holdout{"p04", "p05"};
  GroupDefinition def = build_definition(log, project_some(log, train), 0.8, 0.8);
};

}  // namespace

TEST_CASE("sweep on the ten-patient log matches the hand-computed grid") {
  const TenPatient t;
  const auto scores = score_population(t.log, t.def);
  const auto points = sweep(scores, t.holdout, 3, 1);
  REQUIRE(points.size() == 8);
  // (alpha_f, alpha_d) -> (group size, holdout hits)
  const std::vector<std::tuple<std::size_t, std::size_t, std::size_t, std::size_t>> expected{
      {0, 0, 4, 0}, {0, 1, 4, 0}, {1, 0, 6, 1}, {1, 1, 8, 2},
      {2, 0, 6, 1}, {2, 1, 9, 2}, {3, 0, 6, 1}, {3, 1, 10, 2},
  };
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto [f, d, size, hits] = expected[i];
    CAPTURE(i);
    CHECK(points[i] == SweepPoint{f, d, size, hits, 2});
  }
  CHECK(points.back().recall_bar() == 1.0);
  CHECK(points.front().recall_bar() == 0.0);

  const auto frontier = pareto_frontier(points);
  REQUIRE(frontier.size() == 3);
  CHECK(frontier[0] == points[0]);
  CHECK(frontier[1] == points[2]);
  CHECK(frontier[2] == points[3]);
}

TEST_CASE("sweep preconditions") {
  const std::vector<PatientScore> scores{{"p1", 0, 0}, {"p2", 1, 0}};
  const std::vector<std::string> none;
  CHECK_THROWS_AS(sweep(scores, none, 1, 0), Error);
  const std::vector<std::string> stranger{"p9"};
  CHECK_THROWS_AS(sweep(scores, stranger, 1, 0), Error);
  const std::vector<std::string> ok{"p2"};
  const auto points = sweep(scores, ok, 1, 0);
  CHECK(points[0] == SweepPoint{0, 0, 1, 0, 1});
  CHECK(points[1] == SweepPoint{1, 0, 2, 1, 1});
}

TEST_CASE("recall_bar is non-decreasing in each cut-off") {
  std::mt19937_64 rng(5150);
  std::uniform_int_distribution<std::uint32_t> f(0, 4), d(0, 3);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<PatientScore> scores;
    std::vector<std::string> holdout;
    for (int i = 0; i < 30; ++i) {
      scores.push_back({"q" + std::to_string(100 + i), f(rng), d(rng)});
      if (i % 3 == 0) holdout.push_back(scores.back().patient_id);
    }
    const auto points = sweep(scores, holdout, 4, 3);
    auto at = [&](std::size_t a, std::size_t b) { return points[a * 4 + b]; };
    for (std::size_t a = 0; a <= 4; ++a) {
      for (std::size_t b = 0; b <= 3; ++b) {
        const auto p = at(a, b);
        CHECK(p.group_size == classify(scores, a, b).size());
        if (a < 4) CHECK(at(a + 1, b).holdout_hits >= p.holdout_hits);
        if (b < 3) CHECK(at(a, b + 1).holdout_hits >= p.holdout_hits);
      }
    }
    CHECK(at(4, 3).group_size == scores.size());
    CHECK(at(4, 3).recall_bar() == 1.0);
  }
}

TEST_CASE("pareto_frontier examples") {
  const std::vector<SweepPoint> points{pt(10, 50, 0), pt(12, 50, 1), pt(20, 90, 2)};
  CHECK(pareto_frontier(points) == std::vector<SweepPoint>{points[0], points[2]});
  const std::vector<SweepPoint> one{pt(5, 10)};
  CHECK(pareto_frontier(one) == one);
  // Equal size: higher recall wins, then smaller alpha_f, then smaller alpha_d.
  const std::vector<SweepPoint> ties{pt(10, 50, 2, 0), pt(10, 70, 3, 1), pt(10, 70, 1, 2),
                                     pt(10, 70, 1, 1)};
  CHECK(pareto_frontier(ties) == std::vector<SweepPoint>{pt(10, 70, 1, 1)});
}

TEST_CASE("pareto_frontier property over random 5x5 grids") {
  std::mt19937_64 rng(1000);
  std::uniform_int_distribution<std::size_t> size(0, 40), hits(0, 10);
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<SweepPoint> points;
    for (std::size_t f = 0; f < 5; ++f) {
      for (std::size_t d = 0; d < 5; ++d) points.push_back({f, d, size(rng), hits(rng), 10});
    }
    const auto frontier = pareto_frontier(points);
    REQUIRE_FALSE(frontier.empty());
    for (std::size_t i = 1; i < frontier.size(); ++i) {
      CHECK(frontier[i].group_size > frontier[i - 1].group_size);
      CHECK(frontier[i].holdout_hits > frontier[i - 1].holdout_hits);
    }
    for (const auto& p : points) {
      // Every point is matched or beaten by the frontier...
      CHECK(std::any_of(frontier.begin(), frontier.end(),
                        [&](const SweepPoint& q) { return dominates_or_equals(q, p); }));
    }
    for (const auto& q : frontier) {
      // ...and each frontier point is the smallest group reaching its recall.
      CHECK(std::find(points.begin(), points.end(), q) != points.end());
      for (const auto& p : points) {
        if (p.holdout_hits >= q.holdout_hits) CHECK(p.group_size >= q.group_size);
      }
    }
    auto shuffled = points;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    CHECK(pareto_frontier(shuffled) == frontier);
  }
}

TEST_CASE("elbow examples") {
  const std::vector<SweepPoint> curve{pt(10, 50), pt(20, 90), pt(30, 92), pt(40, 93)};
  const auto knee = elbow(curve);
  CHECK(knee.point == curve[1]);
  CHECK_FALSE(knee.degenerate);

  const std::vector<SweepPoint> linear{pt(10, 10), pt(20, 20), pt(30, 30), pt(40, 40)};
  const auto flat = elbow(linear);
  CHECK(flat.point == linear[1]);
  CHECK(flat.degenerate);

  const std::vector<SweepPoint> two{pt(30, 90), pt(10, 50)};
  CHECK(elbow(two).point == two[1]);
  CHECK(elbow(two).degenerate);

  const std::vector<SweepPoint> one{pt(7, 20)};
  CHECK(elbow(one).point == one[0]);
  CHECK(elbow(one).degenerate);

  CHECK_THROWS_AS(elbow(std::span<const SweepPoint>{}), Error);
}

TEST_CASE("elbow matches a direct chord-distance computation") {
  std::mt19937_64 rng(271828);
  std::uniform_int_distribution<std::size_t> gap(1, 30), rise(1, 15);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<SweepPoint> curve;
    std::size_t size = gap(rng), hits = 0;
    const std::size_t n = 3 + trial % 6;
    for (std::size_t i = 0; i < n; ++i) {
      curve.push_back({i, 0, size, hits, 200});
      size += gap(rng);
      hits += rise(rng);
    }
    // Distance from (x, y) to the line through the end points, unnormalized by
    // sqrt(2): cross product of the chord with the point offset.
    const double x0 = static_cast<double>(curve.front().group_size);
    const double y0 = curve.front().recall_bar();
    const double dx = static_cast<double>(curve.back().group_size) - x0;
    const double dy = curve.back().recall_bar() - y0;
    std::size_t best = 1;
    double best_d = -1;
    for (std::size_t i = 1; i + 1 < n; ++i) {
      const double u = (static_cast<double>(curve[i].group_size) - x0) / dx;
      const double v = (curve[i].recall_bar() - y0) / dy;
      const double dist = std::abs(u - v);
      if (dist > best_d + 1e-12) {
        best = i;
        best_d = dist;
      }
    }
    auto reversed = curve;
    std::reverse(reversed.begin(), reversed.end());
    CHECK(elbow(curve).point == curve[best]);
    CHECK(elbow(reversed).point == curve[best]);
  }
}

TEST_CASE("lee_liu examples") {
  const std::vector<SweepPoint> pair{pt(100, 100), pt(10, 50)};
  CHECK(lee_liu(pair) == pair[1]);
  const std::vector<SweepPoint> one{pt(3, 30)};
  CHECK(lee_liu(one) == one[0]);
  const std::vector<SweepPoint> tie{pt(16, 100), pt(4, 50)};  // 1/16 == 0.25/4
  CHECK(lee_liu(tie) == tie[1]);
  const std::vector<SweepPoint> empty_groups{pt(0, 0), pt(0, 0)};
  CHECK_THROWS_AS(lee_liu(empty_groups), Error);
  const std::vector<SweepPoint> skip{pt(0, 0), pt(5, 20)};
  CHECK(lee_liu(skip) == skip[1]);
}

TEST_CASE("lee_liu is invariant to group-size scaling and order") {
  std::mt19937_64 rng(31);
  std::uniform_int_distribution<std::size_t> size(1, 60), hits(0, 100);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<SweepPoint> points;
    for (std::size_t i = 0; i < 8; ++i) points.push_back(pt(size(rng), hits(rng), i));
    const auto chosen = lee_liu(points);
    // Oracle: exact comparison of hits^2 * other_size.
    for (const auto& p : points) {
      const auto lhs = chosen.holdout_hits * chosen.holdout_hits * p.group_size;
      const auto rhs = p.holdout_hits * p.holdout_hits * chosen.group_size;
      CHECK(lhs >= rhs);
      if (lhs == rhs) CHECK(chosen.group_size <= p.group_size);
    }
    auto scaled = points;
    for (auto& p : scaled) p.group_size *= 7;
    CHECK(lee_liu(scaled).alpha_f == chosen.alpha_f);
    std::shuffle(points.begin(), points.end(), rng);
    const auto again = lee_liu(points);
    CHECK(again.group_size == chosen.group_size);
    CHECK(again.holdout_hits == chosen.holdout_hits);
  }
}

TEST_CASE("calibrate on the ten-patient log") {
  const TenPatient t;
  const auto elbowed = calibrate(t.log, t.def, t.holdout, CutoffMethod::elbow);
  CHECK(elbowed.degenerate);
  CHECK(elbowed.chosen == SweepPoint{1, 0, 6, 1, 2});
  CHECK(elbowed.definition.alpha_f == 1);
  CHECK(elbowed.definition.alpha_d == 0);
  CHECK_FALSE(elbowed.optimistic);
  CHECK(elbowed.definition.provenance.holdout == t.holdout);
  CHECK(elbowed.definition.provenance.calibration_method == "elbow");
  CHECK(std::find(elbowed.frontier.begin(), elbowed.frontier.end(), elbowed.chosen) !=
        elbowed.frontier.end());

  const auto ll = calibrate(t.log, t.def, t.holdout, CutoffMethod::lee_liu);
  CHECK(ll.chosen == SweepPoint{1, 1, 8, 2, 2});
  CHECK(ll.elbow_point == elbowed.chosen);
  CHECK(ll.definition.provenance.calibration_method == "lee_liu");

  const auto manual = with_manual_cutoffs(ll, 3, 1);
  CHECK(manual.method == CutoffMethod::manual);
  CHECK(manual.chosen.group_size == 10);
  CHECK(manual.definition.alpha_f == 3);
  CHECK(manual.definition.provenance.calibration_method == "manual");
  CHECK_THROWS_AS(with_manual_cutoffs(ll, 4, 0), Error);

  const auto optimistic = calibrate(t.log, t.def, t.train, CutoffMethod::elbow);
  CHECK(optimistic.optimistic);
  CHECK(optimistic.definition.provenance.optimistic);
  CHECK_THROWS_AS(calibrate(t.log, t.def, t.holdout, CutoffMethod::manual), Error);
}

TEST_CASE("cut-off method names") {
  CHECK(parse_cutoff_method("elbow") == CutoffMethod::elbow);
  CHECK(parse_cutoff_method("lee_liu") == CutoffMethod::lee_liu);
  CHECK(parse_cutoff_method("manual") == CutoffMethod::manual);
  CHECK(to_string(CutoffMethod::lee_liu) == "lee_liu");
  CHECK_THROWS_AS(parse_cutoff_method("knee"), Error);
}
