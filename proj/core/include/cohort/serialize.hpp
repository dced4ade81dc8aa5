#pragma once

#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "cohort/calibration.hpp"
#include "cohort/eval.hpp"
#include "cohort/eventlog.hpp"
#include "cohort/groupdef.hpp"
#include "cohort/mining.hpp"
#include "cohort/synth.hpp"

namespace cohort {

/// Key order is fixed so that artifacts are byte-stable across runs.
using Json = nlohmann::ordered_json;

Json to_json(const MiningResult& result, const EventLog& log);

Json to_json(const GroupDefinition& def);
/// Throws Error(input) on missing fields or violated invariants.
GroupDefinition definition_from_json(const Json& j);

Json to_json(const SweepPoint& point);
/// Sweep dump: points, frontier, chosen, method, plus both suggestions.
Json to_json(const CalibrationResult& result);

Json to_json(const EvalReport& report);
Json to_json(const SamplePlan& plan);
SamplePlan sample_plan_from_json(const Json& j);

Json to_json(const GeneratorSpec& spec);
GeneratorSpec generator_spec_from_json(const Json& j);
Json to_json(const GeneratorStats& stats);
Json to_json(const SpecSummary& summary);

template <typename Id>
Json to_json(const RelaxationStep<Id>& step, const EventLog& log) {
  Json j;
  j["threshold"] = step.threshold;
  j["added_items"] = labels_of<Id>(log, step.added_items);
  j["removed_items"] = labels_of<Id>(log, step.removed_items);
  j["current_selection"] = labels_of<Id>(log, step.current_selection);
  return j;
}

/// Two-space indentation plus a trailing newline.
std::string dump(const Json& j);

Json read_json_file(const std::filesystem::path& path);
/// Writes through a temporary file and renames it into place.
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace cohort
