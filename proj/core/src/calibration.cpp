#include "cohort/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "cohort/error.hpp"

namespace cohort {

std::string_view to_string(CutoffMethod method) {
  switch (method) {
    case CutoffMethod::elbow: return "elbow";
    case CutoffMethod::lee_liu: return "lee_liu";
    case CutoffMethod::manual: return "manual";
  }
  return "unknown";
}

CutoffMethod parse_cutoff_method(std::string_view name) {
  if (name == "elbow") return CutoffMethod::elbow;
  if (name == "lee_liu" || name == "lee-liu") return CutoffMethod::lee_liu;
  if (name == "manual") return CutoffMethod::manual;
  fail(ErrorKind::input, "unknown cut-off method '" + std::string(name) + "'");
}

namespace {

__extension__ typedef unsigned __int128 Wide;

// Exact comparison of hits_x/size_x against hits_y/size_y.
int compare_recall(const SweepPoint& x, const SweepPoint& y) {
  const Wide lhs = Wide{x.holdout_hits} * y.holdout_size;
  const Wide rhs = Wide{y.holdout_hits} * x.holdout_size;
  return lhs < rhs ? -1 : (lhs > rhs ? 1 : 0);
}

}  // namespace

std::vector<SweepPoint> sweep(std::span<const PatientScore> scores,
                              std::span<const std::string> holdout, std::size_t max_f,
                              std::size_t max_d) {
  if (holdout.empty()) fail(ErrorKind::input, "sweep: holdout is empty");

  std::unordered_map<std::string_view, const PatientScore*> by_id;
  by_id.reserve(scores.size());
  for (const auto& s : scores) by_id.emplace(s.patient_id, &s);

  // Histograms over clamped scores, then 2-D prefix sums give |Ĝ| per cell.
  const std::size_t width = max_d + 1;
  std::vector<std::size_t> population((max_f + 1) * width, 0);
  std::vector<std::size_t> held((max_f + 1) * width, 0);
  auto bucket = [&](const PatientScore& s) -> std::size_t* {
    if (s.activity_score > max_f || s.dbc_score > max_d) return nullptr;
    return &population[s.activity_score * width + s.dbc_score];
  };
  for (const auto& s : scores) {
    if (auto* b = bucket(s)) ++*b;
  }
  std::vector<std::string_view> distinct(holdout.begin(), holdout.end());
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  for (auto id : distinct) {
    const auto it = by_id.find(id);
    if (it == by_id.end()) {
      fail(ErrorKind::input, "holdout patient '" + std::string(id) + "' is not in the population");
    }
    const auto& s = *it->second;
    if (s.activity_score <= max_f && s.dbc_score <= max_d) {
      ++held[s.activity_score * width + s.dbc_score];
    }
  }

  auto prefix = [&](std::vector<std::size_t>& grid) {
    for (std::size_t f = 0; f <= max_f; ++f) {
      for (std::size_t d = 0; d <= max_d; ++d) {
        std::size_t& cell = grid[f * width + d];
        if (f > 0) cell += grid[(f - 1) * width + d];
        if (d > 0) cell += grid[f * width + d - 1];
        if (f > 0 && d > 0) cell -= grid[(f - 1) * width + d - 1];
      }
    }
  };
  prefix(population);
  prefix(held);

  std::vector<SweepPoint> points;
  points.reserve(population.size());
  for (std::size_t f = 0; f <= max_f; ++f) {
    for (std::size_t d = 0; d <= max_d; ++d) {
      points.push_back(SweepPoint{f, d, population[f * width + d], held[f * width + d],
                                  distinct.size()});
    }
  }
  return points;
}

std::vector<SweepPoint> pareto_frontier(std::span<const SweepPoint> points) {
  std::vector<SweepPoint> sorted(points.begin(), points.end());
  std::sort(sorted.begin(), sorted.end(), [](const SweepPoint& x, const SweepPoint& y) {
    if (x.group_size != y.group_size) return x.group_size < y.group_size;
    if (const int c = compare_recall(x, y); c != 0) return c > 0;
    if (x.alpha_f != y.alpha_f) return x.alpha_f < y.alpha_f;
    return x.alpha_d < y.alpha_d;
  });
  std::vector<SweepPoint> frontier;
  for (const auto& p : sorted) {
    if (frontier.empty() || compare_recall(p, frontier.back()) > 0) frontier.push_back(p);
  }
  return frontier;
}

ElbowChoice elbow(std::span<const SweepPoint> frontier) {
  if (frontier.empty()) fail(ErrorKind::input, "elbow: empty frontier");
  if (frontier.size() == 1) return {frontier.front(), true};
  if (frontier.size() == 2) {
    const auto& lower =
        frontier[0].group_size <= frontier[1].group_size ? frontier[0] : frontier[1];
    return {lower, true};
  }

  std::vector<SweepPoint> curve(frontier.begin(), frontier.end());
  std::sort(curve.begin(), curve.end(), [](const SweepPoint& x, const SweepPoint& y) {
    return x.group_size != y.group_size ? x.group_size < y.group_size
                                        : compare_recall(x, y) < 0;
  });
  const auto& first = curve.front();
  const auto& last = curve.back();
  const double x_span = static_cast<double>(last.group_size) - static_cast<double>(first.group_size);
  const double y_span = last.recall_bar() - first.recall_bar();
  auto normalized = [](double v, double v0, double span) {
    return span > 0.0 ? (v - v0) / span : 0.0;
  };

  // In the unit square the chord runs from (0,0) to (1,1); distance is |x - y| / sqrt(2).
  constexpr double kTie = 1e-12;
  std::size_t best = 1;
  double best_distance = -1.0;
  for (std::size_t i = 1; i + 1 < curve.size(); ++i) {
    const double x = normalized(static_cast<double>(curve[i].group_size),
                                static_cast<double>(first.group_size), x_span);
    const double y = normalized(curve[i].recall_bar(), first.recall_bar(), y_span);
    const double distance = std::abs(x - y) / std::sqrt(2.0);
    if (distance > best_distance + kTie) {
      best = i;
      best_distance = distance;
    }
  }
  return {curve[best], best_distance <= kTie};
}

SweepPoint lee_liu(std::span<const SweepPoint> points) {
  const SweepPoint* best = nullptr;
  for (const auto& p : points) {
    if (p.group_size == 0) continue;
    if (best == nullptr) {
      best = &p;
      continue;
    }
    // Compare hits_p^2 / (H_p^2 * n_p) against the incumbent without rounding.
    const Wide lhs = Wide{p.holdout_hits} * p.holdout_hits * best->holdout_size *
                     best->holdout_size * best->group_size;
    const Wide rhs = Wide{best->holdout_hits} * best->holdout_hits * p.holdout_size *
                     p.holdout_size * p.group_size;
    if (lhs > rhs || (lhs == rhs && p.group_size < best->group_size)) best = &p;
  }
  if (best == nullptr) fail(ErrorKind::input, "lee_liu: every point has an empty group");
  return *best;
}

CalibrationResult calibrate(std::span<const PatientScore> scores, const GroupDefinition& def,
                            std::span<const std::string> holdout, CutoffMethod method) {
  if (method == CutoffMethod::manual) {
    fail(ErrorKind::input, "calibrate: use with_manual_cutoffs for manual cut-offs");
  }
  CalibrationResult result;
  result.method = method;
  result.points = sweep(scores, holdout, def.pattern.size(), def.dbcs.size());
  result.frontier = pareto_frontier(result.points);
  const ElbowChoice knee = elbow(result.frontier);
  result.elbow_point = knee.point;
  result.degenerate = knee.degenerate;
  result.lee_liu_point = lee_liu(result.frontier);
  result.chosen = method == CutoffMethod::elbow ? result.elbow_point : result.lee_liu_point;

  std::vector<std::string> held(holdout.begin(), holdout.end());
  std::sort(held.begin(), held.end());
  held.erase(std::unique(held.begin(), held.end()), held.end());
  const auto& sample = def.provenance.sample;
  result.optimistic = std::any_of(held.begin(), held.end(), [&](const std::string& id) {
    return std::binary_search(sample.begin(), sample.end(), id);
  });

  result.definition = def;
  result.definition.alpha_f = result.chosen.alpha_f;
  result.definition.alpha_d = result.chosen.alpha_d;
  result.definition.provenance.holdout = std::move(held);
  result.definition.provenance.calibration_method = std::string(to_string(method));
  result.definition.provenance.optimistic = result.optimistic;
  return result;
}

CalibrationResult calibrate(const EventLog& log, const GroupDefinition& def,
                            std::span<const std::string> holdout, CutoffMethod method) {
  const auto scores = score_population(log, def);
  return calibrate(scores, def, holdout, method);
}

CalibrationResult with_manual_cutoffs(CalibrationResult result, std::size_t alpha_f,
                                      std::size_t alpha_d) {
  const auto it = std::find_if(result.points.begin(), result.points.end(),
                               [&](const SweepPoint& p) {
                                 return p.alpha_f == alpha_f && p.alpha_d == alpha_d;
                               });
  if (it == result.points.end()) {
    fail(ErrorKind::input, "cut-offs (" + std::to_string(alpha_f) + ", " +
                               std::to_string(alpha_d) + ") are outside the sweep grid");
  }
  result.chosen = *it;
  result.method = CutoffMethod::manual;
  result.definition.alpha_f = alpha_f;
  result.definition.alpha_d = alpha_d;
  result.definition.provenance.calibration_method = "manual";
  return result;
}

}  // namespace cohort
