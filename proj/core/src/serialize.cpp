#include "cohort/serialize.hpp"

#include <fstream>
#include <sstream>

#include "cohort/error.hpp"

namespace cohort {

namespace {

template <typename T>
T field(const Json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) {
    fail(ErrorKind::input, std::string("missing field '") + key + "'");
  }
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    fail(ErrorKind::input, std::string("field '") + key + "' has the wrong type");
  }
}

template <typename T>
T field_or(const Json& j, const char* key, T fallback) {
  if (!j.is_object() || !j.contains(key) || j.at(key).is_null()) return fallback;
  return field<T>(j, key);
}

}  // namespace

Json to_json(const MiningResult& result, const EventLog& log) {
  Json j;
  j["threshold"] = result.threshold;
  j["sample_size"] = result.sample_size;
  Json patterns = Json::array();
  for (const auto& p : result.patterns) {
    Json entry;
    entry["items"] = labels_of<ActivityId>(log, p.items);
    entry["support"] = p.support.value();
    patterns.push_back(std::move(entry));
  }
  j["patterns"] = std::move(patterns);
  return j;
}

Json to_json(const GroupDefinition& def) {
  Json j;
  j["pattern"] = def.pattern;
  j["dbcs"] = def.dbcs;
  j["phi_a"] = def.phi_a;
  j["phi_d"] = def.phi_d;
  j["alpha_f"] = def.alpha_f;
  j["alpha_d"] = def.alpha_d;
  Json p;
  p["tool"] = def.provenance.tool;
  p["version"] = def.provenance.version;
  p["group_name"] = def.provenance.group_name;
  p["seed"] = def.provenance.seed ? Json(*def.provenance.seed) : Json(nullptr);
  p["sample"] = def.provenance.sample;
  p["holdout"] = def.provenance.holdout;
  p["calibration_method"] = def.provenance.calibration_method;
  p["optimistic"] = def.provenance.optimistic;
  j["provenance"] = std::move(p);
  return j;
}

GroupDefinition definition_from_json(const Json& j) {
  GroupDefinition def;
  def.pattern = field<std::vector<std::string>>(j, "pattern");
  def.dbcs = field<std::vector<std::string>>(j, "dbcs");
  def.phi_a = field<double>(j, "phi_a");
  def.phi_d = field<double>(j, "phi_d");
  def.alpha_f = field_or<std::size_t>(j, "alpha_f", 0);
  def.alpha_d = field_or<std::size_t>(j, "alpha_d", 0);
  if (j.contains("provenance")) {
    const Json& p = j.at("provenance");
    def.provenance.tool = field_or<std::string>(p, "tool", "cohortmine");
    def.provenance.version = field_or<std::string>(p, "version", "");
    def.provenance.group_name = field_or<std::string>(p, "group_name", "");
    if (p.contains("seed") && !p.at("seed").is_null()) def.provenance.seed = field<std::uint64_t>(p, "seed");
    def.provenance.sample = field_or<std::vector<std::string>>(p, "sample", {});
    def.provenance.holdout = field_or<std::vector<std::string>>(p, "holdout", {});
    def.provenance.calibration_method = field_or<std::string>(p, "calibration_method", "");
    def.provenance.optimistic = field_or<bool>(p, "optimistic", false);
  }
  validate(def);
  return def;
}

Json to_json(const SweepPoint& point) {
  Json j;
  j["alpha_f"] = point.alpha_f;
  j["alpha_d"] = point.alpha_d;
  j["group_size"] = point.group_size;
  j["recall_bar"] = point.recall_bar();
  j["holdout_hits"] = point.holdout_hits;
  j["holdout_size"] = point.holdout_size;
  return j;
}

Json to_json(const CalibrationResult& result) {
  auto list = [](const std::vector<SweepPoint>& points) {
    Json a = Json::array();
    for (const auto& p : points) a.push_back(to_json(p));
    return a;
  };
  Json j;
  j["points"] = list(result.points);
  j["frontier"] = list(result.frontier);
  j["chosen"] = to_json(result.chosen);
  j["method"] = std::string(to_string(result.method));
  j["elbow"] = to_json(result.elbow_point);
  j["lee_liu"] = to_json(result.lee_liu_point);
  j["degenerate"] = result.degenerate;
  j["optimistic"] = result.optimistic;
  return j;
}

Json to_json(const EvalReport& r) {
  Json j;
  j["precision"] = r.precision;
  j["recall"] = r.recall;
  j["f_measure"] = r.f_measure;
  j["n"] = r.n;
  j["true_positives"] = r.true_positives;
  j["false_positives"] = r.false_positives;
  j["false_negatives"] = r.false_negatives;
  j["group_size"] = r.group_size;
  j["truth_size"] = r.truth_size;
  j["empty_prediction"] = r.empty_prediction;
  return j;
}

Json to_json(const SamplePlan& plan) {
  Json j;
  j["seed"] = plan.seed;
  j["split"] = plan.split;
  j["optimistic"] = plan.optimistic;
  j["sample"] = plan.sample;
  j["train"] = plan.train;
  j["holdout"] = plan.holdout;
  return j;
}

SamplePlan sample_plan_from_json(const Json& j) {
  SamplePlan plan;
  plan.seed = field_or<std::uint64_t>(j, "seed", 0);
  plan.split = field_or<double>(j, "split", 0.5);
  plan.optimistic = field_or<bool>(j, "optimistic", false);
  plan.sample = field<std::vector<std::string>>(j, "sample");
  plan.train = field<std::vector<std::string>>(j, "train");
  plan.holdout = field<std::vector<std::string>>(j, "holdout");
  if (plan.train.empty() || plan.holdout.empty()) {
    fail(ErrorKind::input, "sample plan needs non-empty train and holdout lists");
  }
  return plan;
}

Json to_json(const GeneratorSpec& spec) {
  Json j;
  j["population"] = spec.population;
  j["background_activities"] = spec.background_activities;
  j["background_dbcs"] = spec.background_dbcs;
  j["events_per_patient"] = spec.events_per_patient;
  j["zipf_exponent"] = spec.zipf_exponent;
  j["seed"] = spec.seed;
  Json groups = Json::array();
  for (const auto& g : spec.groups) {
    Json e;
    e["name"] = g.name;
    e["size"] = g.size;
    e["signature_activities"] = g.signature_activities;
    e["emission_prob"] = g.emission_prob;
    e["signature_dbc_prob"] = g.signature_dbc_prob;
    e["leak_prob"] = g.leak_prob;
    groups.push_back(std::move(e));
  }
  j["groups"] = std::move(groups);
  return j;
}

GeneratorSpec generator_spec_from_json(const Json& j) {
  const GeneratorSpec defaults;
  GeneratorSpec spec;
  spec.population = field_or(j, "population", defaults.population);
  spec.background_activities = field_or(j, "background_activities", defaults.background_activities);
  spec.background_dbcs = field_or(j, "background_dbcs", defaults.background_dbcs);
  spec.events_per_patient = field_or(j, "events_per_patient", defaults.events_per_patient);
  spec.zipf_exponent = field_or(j, "zipf_exponent", defaults.zipf_exponent);
  spec.seed = field_or(j, "seed", defaults.seed);
  if (j.contains("groups")) {
    if (!j.at("groups").is_array()) fail(ErrorKind::input, "field 'groups' must be an array");
    spec.groups.clear();
    const PlantedGroup g0;
    for (const auto& e : j.at("groups")) {
      PlantedGroup g;
      g.name = field_or(e, "name", g0.name);
      g.size = field_or(e, "size", g0.size);
      g.signature_activities = field_or(e, "signature_activities", g0.signature_activities);
      g.emission_prob = field_or(e, "emission_prob", g0.emission_prob);
      g.signature_dbc_prob = field_or(e, "signature_dbc_prob", g0.signature_dbc_prob);
      g.leak_prob = field_or(e, "leak_prob", g0.leak_prob);
      spec.groups.push_back(std::move(g));
    }
  }
  validate(spec);
  return spec;
}

Json to_json(const GeneratorStats& stats) {
  Json j;
  j["rows"] = stats.rows;
  j["declared_activities"] = stats.declared_activities;
  j["declared_dbcs"] = stats.declared_dbcs;
  j["pruned_activities"] = stats.pruned_activities;
  j["pruned_dbcs"] = stats.pruned_dbcs;
  return j;
}

Json to_json(const SpecSummary& summary) {
  Json j;
  j["expected_background_events"] = summary.expected_background_events;
  j["expected_rows"] = summary.expected_rows;
  Json groups = Json::array();
  for (const auto& g : summary.groups) {
    Json e;
    e["name"] = g.name;
    e["size"] = g.size;
    e["member_support"] = g.member_support;
    e["leak_support"] = g.leak_support;
    e["expected_signature_events"] = g.expected_signature_events;
    groups.push_back(std::move(e));
  }
  j["groups"] = std::move(groups);
  return j;
}

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::input, "cannot open '" + path.string() + "'");
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::input, path.string() + ": invalid JSON: " + e.what());
  }
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorKind::input, "cannot write '" + path.string() + "'");
    out << text;
    if (!out) fail(ErrorKind::input, "write failed for '" + path.string() + "'");
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace cohort
