#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cohort/eventlog.hpp"
#include "cohort/mining.hpp"

namespace cohort {

/// Audit trail carried inside every serialized definition.
struct Provenance {
  std::string tool = "cohortmine";
  std::string version;
  std::string group_name;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> sample;   // patients the pattern was mined from
  std::vector<std::string> holdout;  // patients used for recall estimation
  std::string calibration_method;    // empty until calibrated
  bool optimistic = false;           // holdout overlaps the mining sample

  friend bool operator==(const Provenance&, const Provenance&) = default;
};

/// Interpretable group definition: one activity pattern, a co-occurring code
/// set, the thresholds that produced them, and the membership cut-offs.
struct GroupDefinition {
  std::vector<std::string> pattern;  // sorted labels, non-empty
  std::vector<std::string> dbcs;     // sorted labels
  double phi_a = 0.8;
  double phi_d = 0.8;
  std::size_t alpha_f = 0;
  std::size_t alpha_d = 0;
  Provenance provenance;

  friend bool operator==(const GroupDefinition&, const GroupDefinition&) = default;
};

/// Checks the GroupDefinition invariants; throws Error(input).
void validate(const GroupDefinition& def);

/// Items of the first pattern in the result's canonical order (longest, then
/// highest support, then lexicographic). Throws Error(empty_pattern).
Itemset select_pattern(const MiningResult& result);

/// Fraction of sample patients with at least one event pairing `code` with a
/// pattern activity.
Fraction dbc_support(CodeId code, std::span<const ActivityId> pattern,
                     std::span<const PatientProjection> sample);

/// Codes seen in the sample whose dbc_support reaches phi_d (inclusive).
std::vector<CodeId> select_dbcs(std::span<const ActivityId> pattern,
                                std::span<const PatientProjection> sample, double phi_d);

struct RelaxationOptions {
  double start = 1.0;
  double step = 0.05;
  double floor = 0.05;
};

template <typename Id>
struct RelaxationStep {
  double threshold = 1.0;
  std::vector<Id> added_items;        // in current_selection, not in the previous step's
  std::vector<Id> removed_items;      // in the previous step's, no longer selected
  std::vector<Id> current_selection;  // what would be selected at this threshold
};

using ActivityStep = RelaxationStep<ActivityId>;
using DbcStep = RelaxationStep<CodeId>;

/// Threshold of the k-th step, rounded to 1e-9 so repeated subtraction never
/// leaves 0.30000000000000004 behind.
double relaxation_threshold(const RelaxationOptions& options, std::size_t k);
/// Number of thresholds from start down to floor (inclusive).
std::size_t relaxation_steps(const RelaxationOptions& options);

/// Lazily walks thresholds start, start - step, ... down to floor. Each step is
/// recomputable on its own, so a caller can stop at any point. The sample must
/// outlive the relaxation.
class ActivityRelaxation {
 public:
  ActivityRelaxation(std::span<const PatientProjection> sample, RelaxationOptions options);

  std::size_t size() const noexcept { return count_; }
  ActivityStep at(std::size_t k) const;
  /// Selection at threshold(k): the longest frequent pattern, empty when none.
  Itemset selection_at(std::size_t k) const;

 private:
  std::span<const PatientProjection> sample_;
  RelaxationOptions options_;
  std::size_t count_;
};

class DbcRelaxation {
 public:
  DbcRelaxation(Itemset pattern, std::span<const PatientProjection> sample,
                RelaxationOptions options);

  std::size_t size() const noexcept { return count_; }
  DbcStep at(std::size_t k) const;
  std::vector<CodeId> selection_at(std::size_t k) const;

 private:
  Itemset pattern_;
  std::span<const PatientProjection> sample_;
  RelaxationOptions options_;
  std::size_t count_;
};

/// Throws Error(input) when step is outside (0, 1) or the floor/start are invalid.
void validate(const RelaxationOptions& options);

std::vector<ActivityStep> relax_activities(std::span<const PatientProjection> sample,
                                           RelaxationOptions options = {});
std::vector<DbcStep> relax_dbcs(std::span<const ActivityId> pattern,
                                std::span<const PatientProjection> sample,
                                RelaxationOptions options = {});

/// Mines the sample at phi_a, keeps the selected pattern, and adds the codes
/// reaching phi_d. Cut-offs start at zero; provenance.sample lists the sample ids.
/// Throws Error(empty_pattern) when nothing is frequent at phi_a.
GroupDefinition build_definition(const EventLog& log, std::span<const PatientProjection> sample,
                                 double phi_a, double phi_d);

/// Definition labels mapped back to ids of `log`; labels absent from the log
/// are dropped (they can never match, but still count towards |F| and |D|).
Itemset resolve_pattern(const GroupDefinition& def, const EventLog& log);
std::vector<CodeId> resolve_dbcs(const GroupDefinition& def, const EventLog& log);

template <typename Id>
std::vector<std::string> labels_of(const EventLog& log, std::span<const Id> ids) {
  std::vector<std::string> out;
  out.reserve(ids.size());
  for (Id id : ids) out.push_back(log.label(id));
  return out;
}

}  // namespace cohort
