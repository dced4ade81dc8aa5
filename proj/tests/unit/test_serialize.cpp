#include <filesystem>
#include <fstream>

#include "cohort/error.hpp"
#include "cohort/serialize.hpp"
#include "doctest.h"
#include "fixtures.hpp"

using namespace cohort;
using namespace cohort::testing;

namespace {

std::vector<std::string> keys(const Json& j) {
  std::vector<std::string> out;
  for (auto it = j.begin(); it != j.end(); ++it) out.push_back(it.key());
  return out;
}

GroupDefinition sample_definition() {
  GroupDefinition def;
  def.pattern = {"a", "b", "c"};
  def.dbcs = {"x"};
  def.phi_a = 0.8;
  def.phi_d = 0.75;
  def.alpha_f = 1;
  def.alpha_d = 1;
  def.provenance.version = "0.3.0";
  def.provenance.group_name = "kidney";
  def.provenance.seed = 42;
  def.provenance.sample = {"p01", "p02"};
  def.provenance.holdout = {"p03"};
  def.provenance.calibration_method = "elbow";
  return def;
}

}  // namespace

TEST_CASE("definition JSON layout and round trip") {
  const auto def = sample_definition();
  const auto j = to_json(def);
  CHECK(keys(j) == std::vector<std::string>{"pattern", "dbcs", "phi_a", "phi_d", "alpha_f",
                                            "alpha_d", "provenance"});
  CHECK(j["pattern"] == Json::array({"a", "b", "c"}));
  CHECK(j["alpha_f"] == 1);
  CHECK(j["provenance"]["seed"] == 42);
  CHECK(definition_from_json(j) == def);
  CHECK(definition_from_json(Json::parse(dump(j))) == def);

  auto unseeded = def;
  unseeded.provenance.seed.reset();
  CHECK(to_json(unseeded)["provenance"]["seed"].is_null());
  CHECK(definition_from_json(to_json(unseeded)) == unseeded);
}

TEST_CASE("definition_from_json rejects malformed input") {
  auto j = to_json(sample_definition());
  auto missing = j;
  missing.erase("pattern");
  CHECK_THROWS_AS(definition_from_json(missing), Error);
  auto wrong = j;
  wrong["phi_a"] = "high";
  CHECK_THROWS_AS(definition_from_json(wrong), Error);
  auto invalid = j;
  invalid["alpha_f"] = 9;
  CHECK_THROWS_AS(definition_from_json(invalid), Error);
  CHECK_THROWS_AS(definition_from_json(Json::array()), Error);

  // Minimal hand-written definition: cut-offs and provenance optional.
  const auto minimal = definition_from_json(Json::parse(R"({"pattern":["a"],"dbcs":[],"phi_a":1,"phi_d":1})"));
  CHECK(minimal.alpha_f == 0);
  CHECK(minimal.provenance.tool == "cohortmine");
}

TEST_CASE("calibration dump carries what the recall-curve view needs") {
  const auto log = log_from_rows(ten_patient_rows());
  const std::vector<std::string> train{"p01", "p02", "p03", "p06", "p10"};
  const std::vector<std::string> holdout{"p04", "p05"};
  const auto def = build_definition(log, project_some(log, train), 0.8, 0.8);
  const auto cal = calibrate(log, def, holdout, CutoffMethod::elbow);
  const auto j = to_json(cal);
  CHECK(keys(j) == std::vector<std::string>{"points", "frontier", "chosen", "method", "elbow",
                                            "lee_liu", "degenerate", "optimistic"});
  CHECK(j["points"].size() == 8);
  CHECK(j["frontier"].size() == 3);
  CHECK(j["method"] == "elbow");
  CHECK(j["degenerate"] == true);
  const auto& p = j["points"][3];
  CHECK(keys(p) == std::vector<std::string>{"alpha_f", "alpha_d", "group_size", "recall_bar",
                                            "holdout_hits", "holdout_size"});
  CHECK(p["alpha_f"] == 1);
  CHECK(p["alpha_d"] == 1);
  CHECK(p["group_size"] == 8);
  CHECK(p["recall_bar"] == 1.0);
  CHECK(j["chosen"]["group_size"] == 6);
  CHECK(j["lee_liu"]["group_size"] == 8);
}

TEST_CASE("mining and relaxation JSON use labels") {
  const auto log = log_from_sets({"a b c", "a b", "a"});
  const auto sample = project_all(log);
  const auto j = to_json(fp_growth(sample, 2.0 / 3.0), log);
  CHECK(j["sample_size"] == 3);
  CHECK(j["patterns"][0]["items"] == Json::array({"a", "b"}));
  CHECK(j["patterns"][0]["support"] == doctest::Approx(2.0 / 3.0));

  const auto steps = relax_activities(sample, {1.0, 1.0 / 3.0, 1.0 / 3.0});
  const auto s = to_json(steps[1], log);
  CHECK(keys(s) == std::vector<std::string>{"threshold", "added_items", "removed_items",
                                            "current_selection"});
  CHECK(s["added_items"] == Json::array({"b"}));
  CHECK(s["current_selection"] == Json::array({"a", "b"}));
}

TEST_CASE("sample plan and generator spec round trips") {
  const std::vector<std::string> truth{"m1", "m2", "m3", "m4", "m5", "m6"};
  const auto plan = draw_sample(truth, 4, 9);
  const auto back = sample_plan_from_json(to_json(plan));
  CHECK(back.sample == plan.sample);
  CHECK(back.train == plan.train);
  CHECK(back.holdout == plan.holdout);
  CHECK(back.seed == 9);
  CHECK_THROWS_AS(sample_plan_from_json(Json::parse(R"({"sample":["a"],"train":[],"holdout":["a"]})")),
                  Error);

  GeneratorSpec spec;
  spec.population = 777;
  spec.groups = {PlantedGroup{"A", 20, 3, 1.0, 0.5, 0.0}, PlantedGroup{"B", 30, 2, 0.8, 0.8, 0.1}};
  const auto round = generator_spec_from_json(to_json(spec));
  CHECK(dump(to_json(round)) == dump(to_json(spec)));

  const auto partial = generator_spec_from_json(Json::parse(R"({"population": 2000, "seed": 5})"));
  CHECK(partial.population == 2000);
  CHECK(partial.seed == 5);
  CHECK(partial.groups.size() == 1);
  CHECK_THROWS_AS(generator_spec_from_json(Json::parse(R"({"population": 0})")), Error);
  CHECK_THROWS_AS(generator_spec_from_json(Json::parse(R"({"groups": 3})")), Error);
}

TEST_CASE("eval report JSON") {
  const std::vector<std::string> truth{"a", "b"}, predicted{"a", "c"};
  const auto j = to_json(evaluate(predicted, truth));
  CHECK(j["precision"] == 0.5);
  CHECK(j["true_positives"] == 1);
  CHECK(j["empty_prediction"] == false);
}

TEST_CASE("file helpers") {
  const auto dir = std::filesystem::temp_directory_path() / "cohortmine_serialize_test";
  std::filesystem::remove_all(dir);
  const auto path = dir / "nested" / "definition.json";
  write_text_file(path, dump(to_json(sample_definition())));
  CHECK(std::filesystem::exists(path));
  CHECK_FALSE(std::filesystem::exists(path.string() + ".tmp"));
  CHECK(definition_from_json(read_json_file(path)) == sample_definition());

  std::ofstream(dir / "bad.json") << "{not json";
  CHECK_THROWS_AS(read_json_file(dir / "bad.json"), Error);
  CHECK_THROWS_AS(read_json_file(dir / "absent.json"), Error);
  std::filesystem::remove_all(dir);
}
