#include "cohort/pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

#include "cohort/error.hpp"

namespace cohort {

void validate(const PipelineConfig& config) {
  auto in_unit = [](double v) { return v > 0.0 && v <= 1.0; };
  if (!in_unit(config.phi_a) || !in_unit(config.phi_d)) {
    fail(ErrorKind::input, "support thresholds must lie in (0, 1]");
  }
  if (!in_unit(config.split)) fail(ErrorKind::input, "split must lie in (0, 1]");
  if (!(config.step > 0.0 && config.step < 1.0)) fail(ErrorKind::input, "step must lie in (0, 1)");
  if (config.sample_size < 2) fail(ErrorKind::input, "sample size must be at least 2");
  if (!(config.n >= 0.0)) fail(ErrorKind::input, "F-measure weight must be non-negative");
  if (config.method == CutoffMethod::manual) {
    fail(ErrorKind::input, "the pipeline needs an automatic cut-off method");
  }
}

GroupDefinition define_from_plan(const EventLog& log, const SamplePlan& plan, double phi_a,
                                 double phi_d, const std::string& group_name) {
  const auto train = project_some(log, plan.train);
  GroupDefinition def = build_definition(log, train, phi_a, phi_d);
  def.provenance.seed = plan.seed;
  def.provenance.group_name = group_name;
  def.provenance.holdout = plan.holdout;
  def.provenance.optimistic = plan.optimistic;
  return def;
}

PipelineResult run_pipeline(const EventLog& log, const Manifest& truth,
                            const PipelineConfig& config) {
  validate(config);
  PipelineResult r;
  r.plan = draw_sample(truth.members, config.sample_size, config.seed, config.split);
  const auto train = project_some(log, r.plan.train);
  r.mining = fp_growth(train, config.phi_a);
  const GroupDefinition def =
      define_from_plan(log, r.plan, config.phi_a, config.phi_d, truth.group_name);
  r.scores = score_population(log, def);
  r.calibration = calibrate(r.scores, def, r.plan.holdout, config.method);
  r.definition = r.calibration.definition;
  r.predicted = classify(r.scores, r.definition.alpha_f, r.definition.alpha_d);
  r.report = evaluate(r.predicted, truth.members, config.n);
  return r;
}

std::vector<RecallPair> recall_pairs(std::span<const PatientScore> scores,
                                     std::span<const SweepPoint> points,
                                     std::span<const std::string> truth) {
  if (truth.empty()) fail(ErrorKind::input, "recall_pairs: ground truth is empty");
  std::vector<std::string> gold(truth.begin(), truth.end());
  std::sort(gold.begin(), gold.end());
  gold.erase(std::unique(gold.begin(), gold.end()), gold.end());

  std::vector<const PatientScore*> members;
  for (const auto& s : scores) {
    if (std::binary_search(gold.begin(), gold.end(), s.patient_id)) members.push_back(&s);
  }
  std::vector<RecallPair> out;
  out.reserve(points.size());
  for (const auto& p : points) {
    const auto hits = std::count_if(members.begin(), members.end(), [&](const PatientScore* s) {
      return is_member(*s, p.alpha_f, p.alpha_d);
    });
    out.push_back(RecallPair{p.alpha_f, p.alpha_d, p.recall_bar(),
                             static_cast<double>(hits) / static_cast<double>(gold.size())});
  }
  return out;
}

double recall_estimate_correlation(std::span<const RecallPair> pairs) {
  std::vector<double> estimated, actual;
  for (const auto& p : pairs) {
    estimated.push_back(p.recall_bar);
    actual.push_back(p.true_recall);
  }
  return spearman(estimated, actual);
}

std::vector<PeriodReport> yearly_report(std::span<const PeriodInput> periods,
                                        const PipelineConfig& config) {
  std::vector<PeriodReport> out;
  for (std::size_t i = 0; i < periods.size(); ++i) {
    const auto& period = periods[i];
    if (period.log == nullptr) fail(ErrorKind::input, "period '" + period.period + "' has no log");
    if (period.truth.members.empty()) {
      fail(ErrorKind::input, "period '" + period.period + "' has an empty ground truth");
    }
    PipelineConfig c = config;
    c.seed = config.seed + i;
    const auto result = run_pipeline(*period.log, period.truth, c);
    out.push_back(PeriodReport{period.period, period.truth.group_name, result.report,
                               result.definition.pattern.size(), result.definition.dbcs.size(),
                               result.definition.alpha_f, result.definition.alpha_d});
  }
  return out;
}

std::string render_table(std::span<const PeriodReport> reports) {
  const std::vector<std::string> header{"period", "group", "|F|", "|D|", "alpha_f",
                                        "alpha_d", "|G^|", "|G|", "precision", "recall", "F"};
  std::vector<std::vector<std::string>> rows;
  auto fixed = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", v);
    return std::string(buf);
  };
  for (const auto& r : reports) {
    rows.push_back({r.period, r.group, std::to_string(r.pattern_size), std::to_string(r.dbc_count),
                    std::to_string(r.alpha_f), std::to_string(r.alpha_d),
                    std::to_string(r.report.group_size), std::to_string(r.report.truth_size),
                    fixed(r.report.precision), fixed(r.report.recall), fixed(r.report.f_measure)});
  }
  std::vector<std::size_t> width(header.size());
  for (std::size_t c = 0; c < header.size(); ++c) {
    width[c] = header[c].size();
    for (const auto& row : rows) width[c] = std::max(width[c], row[c].size());
  }
  std::ostringstream out;
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t c = 0; c < cells.size(); ++c) {
      if (c > 0) out << "  ";
      // Text columns left-aligned, numbers right-aligned.
      if (c < 2) {
        out << cells[c] << std::string(width[c] - cells[c].size(), ' ');
      } else {
        out << std::string(width[c] - cells[c].size(), ' ') << cells[c];
      }
    }
    out << '\n';
  };
  line(header);
  std::vector<std::string> rule;
  for (auto w : width) rule.emplace_back(w, '-');
  line(rule);
  for (const auto& row : rows) line(row);
  return out.str();
}

}  // namespace cohort
