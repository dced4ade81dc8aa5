#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "cohort/calibration.hpp"
#include "cohort/eval.hpp"
#include "cohort/eventlog.hpp"
#include "cohort/groupdef.hpp"
#include "cohort/mining.hpp"
#include "cohort/scoring.hpp"

namespace cohort {

/// Defaults follow the evaluation protocol: 30 labelled patients split 15/15,
/// both support thresholds at 0.8, F1.
struct PipelineConfig {
  double phi_a = 0.8;
  double phi_d = 0.8;
  std::size_t sample_size = 30;
  double split = 0.5;
  double step = 0.05;
  CutoffMethod method = CutoffMethod::elbow;
  std::uint64_t seed = 1;
  double n = 1.0;
};

/// Throws Error(input) for out-of-range values.
void validate(const PipelineConfig& config);

struct PipelineResult {
  SamplePlan plan;
  MiningResult mining;
  GroupDefinition definition;  // calibrated
  CalibrationResult calibration;
  std::vector<PatientScore> scores;
  std::vector<std::string> predicted;
  EvalReport report;
};

/// Sample -> mine -> define -> score -> calibrate -> classify -> evaluate.
PipelineResult run_pipeline(const EventLog& log, const Manifest& truth,
                            const PipelineConfig& config);

/// Definition step alone: mines the plan's training patients.
GroupDefinition define_from_plan(const EventLog& log, const SamplePlan& plan, double phi_a,
                                 double phi_d, const std::string& group_name = {});

/// Estimated versus true recall at one grid cell.
struct RecallPair {
  std::size_t alpha_f = 0;
  std::size_t alpha_d = 0;
  double recall_bar = 0.0;
  double true_recall = 0.0;
};

/// True recall of every sweep point against the full ground truth.
std::vector<RecallPair> recall_pairs(std::span<const PatientScore> scores,
                                     std::span<const SweepPoint> points,
                                     std::span<const std::string> truth);

/// Spearman rho between recall_bar and true recall over the grid.
double recall_estimate_correlation(std::span<const RecallPair> pairs);

struct PeriodInput {
  std::string period;
  const EventLog* log = nullptr;
  Manifest truth;
};

struct PeriodReport {
  std::string period;
  std::string group;
  EvalReport report;
  std::size_t pattern_size = 0;
  std::size_t dbc_count = 0;
  std::size_t alpha_f = 0;
  std::size_t alpha_d = 0;
};

/// Runs the pipeline independently per period; period i uses seed + i.
std::vector<PeriodReport> yearly_report(std::span<const PeriodInput> periods,
                                        const PipelineConfig& config);

/// Aligned plain-text comparison table.
std::string render_table(std::span<const PeriodReport> reports);

}  // namespace cohort
