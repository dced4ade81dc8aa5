#include "cohort/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>

#include "cohort/error.hpp"

namespace cohort {

namespace {

constexpr Timestamp kBaseTime = 1'483'228'800'000;  // 2017-01-01T00:00:00Z
constexpr std::int64_t kYearSeconds = 365LL * 24 * 3600;

std::string padded(std::string_view prefix, std::size_t value, std::size_t of) {
  const int width = static_cast<int>(std::to_string(of).size());
  char buf[32];
  std::snprintf(buf, sizeof buf, "%0*zu", width, value);
  return std::string(prefix) + buf;
}

std::vector<double> zipf_weights(std::size_t n, double exponent) {
  std::vector<double> w(n);
  for (std::size_t k = 0; k < n; ++k) w[k] = 1.0 / std::pow(static_cast<double>(k + 1), exponent);
  return w;
}

bool is_probability(double p) { return p >= 0.0 && p <= 1.0; }

}  // namespace

void validate(const GeneratorSpec& spec) {
  if (spec.population == 0 || spec.background_activities == 0 || spec.background_dbcs == 0) {
    fail(ErrorKind::input, "generator counts must be positive");
  }
  if (!(spec.events_per_patient > 0.0)) {
    fail(ErrorKind::input, "events_per_patient must be positive");
  }
  if (!(spec.zipf_exponent > 0.0)) fail(ErrorKind::input, "zipf_exponent must be positive");
  std::size_t members = 0;
  std::vector<std::string> names;
  for (const auto& g : spec.groups) {
    if (g.name.empty()) fail(ErrorKind::input, "planted group needs a name");
    if (g.size < 2) fail(ErrorKind::input, "planted group '" + g.name + "' needs at least 2 members");
    if (g.signature_activities == 0) {
      fail(ErrorKind::input, "planted group '" + g.name + "' needs signature activities");
    }
    if (!is_probability(g.emission_prob) || !is_probability(g.signature_dbc_prob) ||
        !is_probability(g.leak_prob)) {
      fail(ErrorKind::input, "planted group '" + g.name + "' has a probability outside [0, 1]");
    }
    members += g.size;
    names.push_back(g.name);
  }
  if (members > spec.population) {
    fail(ErrorKind::input, "planted groups hold more members than the population");
  }
  std::sort(names.begin(), names.end());
  if (std::adjacent_find(names.begin(), names.end()) != names.end()) {
    fail(ErrorKind::input, "planted group names must be unique");
  }
}

std::string signature_activity_label(const PlantedGroup& group, std::size_t j) {
  return padded(group.name + "_SIG", j + 1, std::max<std::size_t>(group.signature_activities, 10));
}

std::string group_code_label(const PlantedGroup& group) { return group.name + "_DBC"; }

GeneratedLog generate(const GeneratorSpec& spec) {
  validate(spec);
  std::mt19937_64 rng(spec.seed);

  std::vector<std::string> patients;
  patients.reserve(spec.population);
  for (std::size_t i = 0; i < spec.population; ++i) patients.push_back(padded("P", i + 1, spec.population));
  std::vector<std::string> activities;
  for (std::size_t k = 0; k < spec.background_activities; ++k) {
    activities.push_back(padded("ACT", k + 1, spec.background_activities));
  }
  std::vector<std::string> codes;
  for (std::size_t k = 0; k < spec.background_dbcs; ++k) {
    codes.push_back(padded("DBC", k + 1, spec.background_dbcs));
  }

  // membership[i] = index of the patient's group, or -1.
  std::vector<int> membership(spec.population, -1);
  {
    std::vector<std::size_t> order(spec.population);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    std::size_t next = 0;
    for (std::size_t g = 0; g < spec.groups.size(); ++g) {
      for (std::size_t m = 0; m < spec.groups[g].size; ++m) membership[order[next++]] = static_cast<int>(g);
    }
  }

  std::vector<std::vector<std::string>> signatures;
  std::vector<std::string> group_codes;
  for (const auto& g : spec.groups) {
    auto& labels = signatures.emplace_back();
    for (std::size_t j = 0; j < g.signature_activities; ++j) labels.push_back(signature_activity_label(g, j));
    group_codes.push_back(group_code_label(g));
  }

  const auto activity_weights = zipf_weights(spec.background_activities, spec.zipf_exponent);
  const auto code_weights = zipf_weights(spec.background_dbcs, spec.zipf_exponent);
  std::discrete_distribution<std::size_t> pick_activity(activity_weights.begin(), activity_weights.end());
  std::discrete_distribution<std::size_t> pick_code(code_weights.begin(), code_weights.end());
  std::poisson_distribution<std::size_t> event_count(spec.events_per_patient);
  std::uniform_int_distribution<std::int64_t> offset(0, kYearSeconds - 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto when = [&] { return kBaseTime + offset(rng) * 1000; };

  std::vector<char> activity_used(spec.background_activities, 0);
  std::vector<char> code_used(spec.background_dbcs, 0);
  std::vector<std::vector<char>> signature_used;
  for (const auto& s : signatures) signature_used.emplace_back(s.size(), 0);
  std::vector<char> group_code_used(spec.groups.size(), 0);

  EventLogBuilder builder;
  for (std::size_t i = 0; i < spec.population; ++i) {
    const std::size_t n = std::max<std::size_t>(1, event_count(rng));
    for (std::size_t e = 0; e < n; ++e) {
      const std::size_t a = pick_activity(rng);
      const std::size_t d = pick_code(rng);
      activity_used[a] = code_used[d] = 1;
      builder.add(patients[i], activities[a], codes[d], when());
    }
    for (std::size_t g = 0; g < spec.groups.size(); ++g) {
      const auto& group = spec.groups[g];
      const bool member = membership[i] == static_cast<int>(g);
      const double p = member ? group.emission_prob : group.leak_prob;
      for (std::size_t j = 0; j < group.signature_activities; ++j) {
        if (unit(rng) >= p) continue;
        signature_used[g][j] = 1;
        if (member && unit(rng) < group.signature_dbc_prob) {
          group_code_used[g] = 1;
          builder.add(patients[i], signatures[g][j], group_codes[g], when());
        } else {
          const std::size_t d = pick_code(rng);
          code_used[d] = 1;
          builder.add(patients[i], signatures[g][j], codes[d], when());
        }
      }
    }
  }

  GeneratedLog out;
  out.stats.rows = builder.rows();
  out.stats.declared_activities = spec.background_activities;
  out.stats.declared_dbcs = spec.background_dbcs + spec.groups.size();
  for (std::size_t k = 0; k < activities.size(); ++k) {
    if (!activity_used[k]) out.stats.pruned_activities.push_back(activities[k]);
  }
  for (std::size_t k = 0; k < codes.size(); ++k) {
    if (!code_used[k]) out.stats.pruned_dbcs.push_back(codes[k]);
  }
  for (std::size_t g = 0; g < spec.groups.size(); ++g) {
    out.stats.declared_activities += signatures[g].size();
    for (std::size_t j = 0; j < signatures[g].size(); ++j) {
      if (!signature_used[g][j]) out.stats.pruned_activities.push_back(signatures[g][j]);
    }
    if (!group_code_used[g]) out.stats.pruned_dbcs.push_back(group_codes[g]);
  }
  std::sort(out.stats.pruned_activities.begin(), out.stats.pruned_activities.end());
  std::sort(out.stats.pruned_dbcs.begin(), out.stats.pruned_dbcs.end());

  for (std::size_t g = 0; g < spec.groups.size(); ++g) {
    Manifest m;
    m.group_name = spec.groups[g].name;
    for (std::size_t i = 0; i < spec.population; ++i) {
      if (membership[i] == static_cast<int>(g)) m.members.push_back(patients[i]);
    }
    out.manifests.push_back(std::move(m));
  }
  out.log = std::move(builder).build();
  return out;
}

double expected_member_support(const PlantedGroup& group, std::size_t itemset_size) {
  return std::pow(group.emission_prob, static_cast<double>(itemset_size));
}

double expected_leak_support(const PlantedGroup& group, std::size_t itemset_size) {
  return std::pow(group.leak_prob, static_cast<double>(itemset_size));
}

SpecSummary describe(const GeneratorSpec& spec) {
  validate(spec);
  SpecSummary summary;
  // Background count is max(1, Poisson(mean)): the zero outcome is bumped to one.
  const double per_patient = spec.events_per_patient + std::exp(-spec.events_per_patient);
  summary.expected_background_events = per_patient * static_cast<double>(spec.population);
  summary.expected_rows = summary.expected_background_events;
  for (const auto& g : spec.groups) {
    GroupExpectation e;
    e.name = g.name;
    e.size = g.size;
    for (std::size_t m = 1; m <= g.signature_activities; ++m) {
      e.member_support.push_back(expected_member_support(g, m));
      e.leak_support.push_back(expected_leak_support(g, m));
    }
    const auto k = static_cast<double>(g.signature_activities);
    e.expected_signature_events =
        static_cast<double>(g.size) * k * g.emission_prob +
        static_cast<double>(spec.population - g.size) * k * g.leak_prob;
    summary.expected_rows += e.expected_signature_events;
    summary.groups.push_back(std::move(e));
  }
  return summary;
}

}  // namespace cohort
