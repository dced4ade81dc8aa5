#include "cohort/scoring.hpp"

#include <algorithm>
#include <ostream>

#include "cohort/csv.hpp"

namespace cohort {

DefinitionIndex::DefinitionIndex(const GroupDefinition& def, const EventLog& log)
    : pattern_size_(def.pattern.size()),
      dbc_count_(def.dbcs.size()),
      activity_slot_(log.activities().size(), -1),
      dbc_slot_(log.dbcs().size(), -1) {
  std::int32_t slot = 0;
  for (ActivityId a : resolve_pattern(def, log)) activity_slot_[index(a)] = slot++;
  slot = 0;
  for (CodeId d : resolve_dbcs(def, log)) dbc_slot_[index(d)] = slot++;
}

PatientScore DefinitionIndex::score(const PatientProjection& projection) const {
  std::size_t activities = 0;
  for (ActivityId a : projection.activities) activities += activity_slot_[index(a)] >= 0;
  std::size_t codes = 0;
  for (CodeId d : projection.dbcs) codes += dbc_slot_[index(d)] >= 0;
  return PatientScore{projection.patient_id,
                      static_cast<std::uint32_t>(pattern_size_ - activities),
                      static_cast<std::uint32_t>(dbc_count_ - codes)};
}

PatientScore DefinitionIndex::score(const Trace& trace) const {
  // Definitions are small, so a bitmask per trace is enough to count distinct hits.
  std::vector<bool> seen_activity(pattern_size_, false);
  std::vector<bool> seen_dbc(dbc_count_, false);
  std::size_t activities = 0;
  std::size_t codes = 0;
  for (const auto& e : trace.events) {
    if (const auto s = activity_slot_[index(e.activity)]; s >= 0 && !seen_activity[s]) {
      seen_activity[s] = true;
      ++activities;
    }
    if (const auto s = dbc_slot_[index(e.dbc)]; s >= 0 && !seen_dbc[s]) {
      seen_dbc[s] = true;
      ++codes;
    }
  }
  return PatientScore{trace.patient_id, static_cast<std::uint32_t>(pattern_size_ - activities),
                      static_cast<std::uint32_t>(dbc_count_ - codes)};
}

PatientScore score_patient(const PatientProjection& projection, const GroupDefinition& def,
                           const EventLog& log) {
  return DefinitionIndex(def, log).score(projection);
}

std::vector<PatientScore> score_population(const EventLog& log, const GroupDefinition& def) {
  const DefinitionIndex index(def, log);
  std::vector<PatientScore> scores;
  scores.reserve(log.patient_count());
  for (const auto& trace : log.traces()) scores.push_back(index.score(trace));
  return scores;
}

std::vector<std::string> classify(std::span<const PatientScore> scores, std::size_t alpha_f,
                                  std::size_t alpha_d) {
  std::vector<std::string> members;
  for (const auto& s : scores) {
    if (is_member(s, alpha_f, alpha_d)) members.push_back(s.patient_id);
  }
  std::sort(members.begin(), members.end());
  return members;
}

void write_scores(std::ostream& out, std::span<const PatientScore> scores, std::size_t alpha_f,
                  std::size_t alpha_d) {
  out << "patient_id,activity_score,dbc_score,member\n";
  for (const auto& s : scores) {
    csv::write_field(out, s.patient_id);
    out << ',' << s.activity_score << ',' << s.dbc_score << ','
        << (is_member(s, alpha_f, alpha_d) ? 1 : 0) << '\n';
  }
}

}  // namespace cohort
