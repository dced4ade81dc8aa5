#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "cohort/eventlog.hpp"
#include "cohort/groupdef.hpp"

namespace cohort {

/// Number of definition items a patient lacks; 0 means a perfect match.
struct PatientScore {
  std::string patient_id;
  std::uint32_t activity_score = 0;
  std::uint32_t dbc_score = 0;

  friend bool operator==(const PatientScore&, const PatientScore&) = default;
};

/// A definition bound to one log's id space, for repeated scoring.
class DefinitionIndex {
 public:
  DefinitionIndex(const GroupDefinition& def, const EventLog& log);

  std::size_t pattern_size() const noexcept { return pattern_size_; }
  std::size_t dbc_count() const noexcept { return dbc_count_; }

  PatientScore score(const PatientProjection& projection) const;
  /// Scans the raw trace, no projection allocated.
  PatientScore score(const Trace& trace) const;

 private:
  std::size_t pattern_size_;
  std::size_t dbc_count_;
  // Slot of each activity / code in the definition, -1 when absent.
  std::vector<std::int32_t> activity_slot_;
  std::vector<std::int32_t> dbc_slot_;
};

/// activity_score = |F| - |A_p ∩ F|, dbc_score = |D| - |D_p ∩ D|, using plain
/// code presence (co-occurrence only matters when D is built).
PatientScore score_patient(const PatientProjection& projection, const GroupDefinition& def,
                           const EventLog& log);

/// One score per patient, in patient_id order.
std::vector<PatientScore> score_population(const EventLog& log, const GroupDefinition& def);

/// Patients whose scores are both within the cut-offs, sorted by id.
std::vector<std::string> classify(std::span<const PatientScore> scores, std::size_t alpha_f,
                                  std::size_t alpha_d);

inline bool is_member(const PatientScore& s, std::size_t alpha_f, std::size_t alpha_d) {
  return s.activity_score <= alpha_f && s.dbc_score <= alpha_d;
}

/// patient_id,activity_score,dbc_score,member
void write_scores(std::ostream& out, std::span<const PatientScore> scores, std::size_t alpha_f,
                  std::size_t alpha_d);

}  // namespace cohort
