#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cohort/eventlog.hpp"
#include "cohort/groupdef.hpp"
#include "cohort/scoring.hpp"

namespace cohort {

/// One (alpha_f, alpha_d) cell of the cut-off grid.
struct SweepPoint {
  std::size_t alpha_f = 0;
  std::size_t alpha_d = 0;
  std::size_t group_size = 0;    // |Ĝ|
  std::size_t holdout_hits = 0;  // |Ĝ ∩ holdout|
  std::size_t holdout_size = 0;

  /// Recall estimated on the held-out positives.
  double recall_bar() const noexcept {
    return holdout_size == 0
               ? 0.0
               : static_cast<double>(holdout_hits) / static_cast<double>(holdout_size);
  }

  friend bool operator==(const SweepPoint&, const SweepPoint&) = default;
};

enum class CutoffMethod { elbow, lee_liu, manual };

std::string_view to_string(CutoffMethod method);
/// Throws Error(input) for unknown names.
CutoffMethod parse_cutoff_method(std::string_view name);

/// Every cell of [0..max_f] x [0..max_d], ordered by alpha_f then alpha_d.
/// Holdout ids must all be scored; throws Error(input) otherwise or when empty.
std::vector<SweepPoint> sweep(std::span<const PatientScore> scores,
                              std::span<const std::string> holdout, std::size_t max_f,
                              std::size_t max_d);

/// Smallest group for each achievable recall level, ascending group_size with
/// strictly increasing recall. Equal group sizes keep the higher recall, then
/// the smaller alpha_f, then the smaller alpha_d.
std::vector<SweepPoint> pareto_frontier(std::span<const SweepPoint> points);

struct ElbowChoice {
  SweepPoint point;
  bool degenerate = false;  // fewer than three points, or no interior bend
};

/// Normalizes the frontier to the unit square and returns the interior point
/// farthest from the chord between its end points; ties go to the smaller
/// group. Throws Error(input) on an empty frontier.
ElbowChoice elbow(std::span<const SweepPoint> frontier);

/// argmax recall_bar^2 / group_size over points with a non-empty group; ties go
/// to the smaller group. Throws Error(input) when every group is empty.
SweepPoint lee_liu(std::span<const SweepPoint> points);

struct CalibrationResult {
  SweepPoint chosen;
  CutoffMethod method = CutoffMethod::elbow;
  std::vector<SweepPoint> points;
  std::vector<SweepPoint> frontier;
  SweepPoint elbow_point;
  SweepPoint lee_liu_point;
  bool degenerate = false;
  bool optimistic = false;
  GroupDefinition definition;  // copy with alpha_f / alpha_d filled in
};

/// Scores the population, sweeps the full cut-off grid against the holdout,
/// and picks the elbow or Lee-Liu point of the frontier.
CalibrationResult calibrate(const EventLog& log, const GroupDefinition& def,
                            std::span<const std::string> holdout, CutoffMethod method);

/// Same, on scores computed earlier.
CalibrationResult calibrate(std::span<const PatientScore> scores, const GroupDefinition& def,
                            std::span<const std::string> holdout, CutoffMethod method);

/// Applies explicit cut-offs chosen by an expert. Throws Error(input) when they
/// fall outside the grid.
CalibrationResult with_manual_cutoffs(CalibrationResult result, std::size_t alpha_f,
                                      std::size_t alpha_d);

}  // namespace cohort
