#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "cohort/eventlog.hpp"

namespace cohort {

/// A cohort embedded in a synthetic log. Members exhibit each of k signature
/// activities independently with emission_prob; a signature event carries the
/// group's own code with signature_dbc_prob, otherwise a background code.
/// Non-members exhibit each signature activity with leak_prob.
struct PlantedGroup {
  std::string name = "G1";
  std::size_t size = 500;
  std::size_t signature_activities = 6;
  double emission_prob = 0.9;
  double signature_dbc_prob = 0.9;
  double leak_prob = 0.02;
};

struct GeneratorSpec {
  std::size_t population = 10'000;
  std::size_t background_activities = 200;
  std::size_t background_dbcs = 100;
  std::vector<PlantedGroup> groups{PlantedGroup{}};
  double events_per_patient = 20.0;  // Poisson mean of background events, at least one
  double zipf_exponent = 1.0;
  std::uint64_t seed = 1;
};

/// Throws Error(input) when a count is zero, a probability leaves [0, 1],
/// a group has fewer than two members, or the groups outgrow the population.
void validate(const GeneratorSpec& spec);

struct GeneratorStats {
  std::size_t rows = 0;
  std::size_t declared_activities = 0;  // background + signature
  std::size_t declared_dbcs = 0;        // background + one per group
  std::vector<std::string> pruned_activities;  // declared but never emitted
  std::vector<std::string> pruned_dbcs;
};

struct GeneratedLog {
  EventLog log;
  std::vector<Manifest> manifests;  // one per planted group, in spec order
  GeneratorStats stats;
};

/// Deterministic for a fixed spec (seed included).
GeneratedLog generate(const GeneratorSpec& spec);

/// Labels the generator uses, exposed for tests and tooling.
std::string signature_activity_label(const PlantedGroup& group, std::size_t j);
std::string group_code_label(const PlantedGroup& group);

struct GroupExpectation {
  std::string name;
  std::size_t size = 0;
  std::vector<double> member_support;  // [m-1]: expected support of m signature activities
  std::vector<double> leak_support;    // same, among non-members
  double expected_signature_events = 0.0;
};

struct SpecSummary {
  double expected_background_events = 0.0;
  double expected_rows = 0.0;
  std::vector<GroupExpectation> groups;
};

/// Expected support of an m-item signature itemset among members: q^m.
double expected_member_support(const PlantedGroup& group, std::size_t itemset_size);
/// Same among non-members: leak^m.
double expected_leak_support(const PlantedGroup& group, std::size_t itemset_size);

/// Analytic expectations under independent emissions.
SpecSummary describe(const GeneratorSpec& spec);

}  // namespace cohort
