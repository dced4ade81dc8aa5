#include <filesystem>
#include <fstream>
#include <thread>

#include <httplib.h>

#include "cohort/pipeline.hpp"
#include "cohort/serialize.hpp"
#include "cohort/service.hpp"
#include "cohort/synth.hpp"
#include "doctest.h"
#include "fixtures.hpp"

using namespace cohort;
using namespace cohort::testing;

namespace {

struct Reply {
  int status;
  Json body;
  std::string raw;
};

Reply call(Service& service, const std::string& method, const std::string& path,
           const std::string& body = {}, std::map<std::string, std::string> query = {}) {
  const auto r = service.handle(ServiceRequest{method, path, std::move(query), body});
  Json j;
  if (r.content_type == "application/json") j = Json::parse(r.body);
  return Reply{r.status, j, r.body};
}

Reply step(Service& service, const std::string& id, const char* decision) {
  return call(service, "POST", "/sessions/" + id + "/step",
              std::string(R"({"decision":")") + decision + "\"}");
}

const std::vector<std::string> kTrain{"p01", "p02", "p03", "p06", "p10"};
const std::vector<std::string> kHoldout{"p04", "p05"};

std::string ten_patient_request() {
  Json j;
  j["log"] = "toy";
  j["train"] = kTrain;
  j["holdout"] = kHoldout;
  return j.dump();
}

GeneratedLog small_synthetic() {
  GeneratorSpec spec;
  spec.population = 2000;
  spec.background_activities = 80;
  spec.background_dbcs = 30;
  spec.events_per_patient = 10;
  spec.groups = {PlantedGroup{"G1", 150, 5, 0.9, 0.9, 0.02}};
  spec.seed = 21;
  return generate(spec);
}

struct Fixture {
  Service service;
  GeneratedLog synthetic = small_synthetic();
  EventLog toy = log_from_rows(ten_patient_rows());

  explicit Fixture(ServiceOptions options = {}) : service(std::move(options)) {
    service.add_log("toy", toy);
    service.add_log("synthetic", synthetic.log, synthetic.manifests);
  }
};

std::string create(Service& s, const std::string& body) {
  const auto r = call(s, "POST", "/sessions", body);
  REQUIRE(r.status == 201);
  return r.body["id"].get<std::string>();
}

// Accepts until the pending threshold drops below `target`, then stops.
void relax_to(Service& s, const std::string& id, double target) {
  for (;;) {
    const auto state = call(s, "GET", "/sessions/" + id).body;
    if (state["pending"].is_null() || state["threshold"].get<double>() < target - 1e-9) break;
    REQUIRE(step(s, id, "accept").status == 200);
  }
  REQUIRE(step(s, id, "stop").status == 200);
}

}  // namespace

TEST_CASE("creating sessions") {
  Fixture f;
  const auto r = call(f.service, "POST", "/sessions", ten_patient_request());
  CHECK(r.status == 201);
  CHECK(r.body["phase"] == "relax_activities");
  CHECK(r.body["threshold"] == 1.0);
  CHECK(r.body["history"].empty());
  CHECK(r.body["accepted_pattern"].empty());
  CHECK(r.body["pending"]["current_selection"] == Json::array({"a", "b"}));
  CHECK(r.body["sample"]["train"] == kTrain);

  CHECK(call(f.service, "POST", "/sessions", R"({"log":"nope"})").status == 404);
  CHECK(call(f.service, "POST", "/sessions", R"({"log":"synthetic","sample_size":151})").status == 400);
  CHECK(call(f.service, "POST", "/sessions", R"({"log":"synthetic","group":"G9"})").status == 404);
  CHECK(call(f.service, "POST", "/sessions", R"({"log":"toy","train":["zz"]})").status == 400);
  CHECK(call(f.service, "POST", "/sessions", R"({"train":["p01"]})").status == 400);  // two logs loaded
  CHECK(call(f.service, "POST", "/sessions", R"({"log":"toy","train":["p01"],"step":1.5})").status == 400);
  CHECK(call(f.service, "POST", "/sessions", "{oops").status == 400);

  const auto drawn = call(f.service, "POST", "/sessions", R"({"log":"synthetic","seed":4})");
  CHECK(drawn.status == 201);
  CHECK(drawn.body["group"] == "G1");
  CHECK(drawn.body["sample"]["train"].size() == 15);
  CHECK(drawn.body["sample"]["holdout"].size() == 15);
}

TEST_CASE("sessions are isolated") {
  Fixture f;
  const auto a = create(f.service, ten_patient_request());
  const auto b = create(f.service, ten_patient_request());
  CHECK(a != b);
  step(f.service, a, "accept");
  step(f.service, a, "accept");
  CHECK(call(f.service, "GET", "/sessions/" + a).body["threshold"] == 0.9);
  CHECK(call(f.service, "GET", "/sessions/" + b).body["threshold"] == 1.0);
  CHECK(call(f.service, "GET", "/sessions/" + b).body["history"].empty());
}

TEST_CASE("relaxation phases") {
  Fixture f;
  const auto id = create(f.service, ten_patient_request());

  const auto early = step(f.service, id, "stop");
  CHECK(early.status == 422);
  CHECK(early.body["error"] == "empty-pattern");
  CHECK(call(f.service, "GET", "/sessions/" + id + "/curve").status == 409);
  CHECK(call(f.service, "GET", "/sessions/" + id + "/definition").status == 409);
  CHECK(call(f.service, "GET", "/sessions/" + id + "/classification").status == 409);
  CHECK(call(f.service, "POST", "/sessions/" + id + "/cutoffs", R"({"alpha_f":0,"alpha_d":0})").status == 409);

  auto r = step(f.service, id, "accept");
  CHECK(r.status == 200);
  CHECK(r.body["threshold"] == 0.95);
  CHECK(r.body["phi_a"] == 1.0);
  CHECK(r.body["accepted_pattern"] == Json::array({"a", "b"}));
  CHECK(step(f.service, id, "maybe").status == 400);

  // 0.8 admits c.
  for (int i = 0; i < 3; ++i) step(f.service, id, "accept");
  r = call(f.service, "GET", "/sessions/" + id);
  CHECK(r.body["threshold"] == 0.8);
  CHECK(r.body["pending"]["added_items"] == Json::array({"c"}));
  step(f.service, id, "accept");

  r = step(f.service, id, "stop");
  CHECK(r.body["phase"] == "relax_dbcs");
  CHECK(r.body["accepted_pattern"] == Json::array({"a", "b", "c"}));
  CHECK(r.body["phi_a"] == 0.8);
  CHECK(r.body["threshold"] == 1.0);
  CHECK(r.body["pending"]["current_selection"] == Json::array({"x"}));
  CHECK(r.body["history"].size() == 6);
  CHECK(r.body["history"][5]["decision"] == "stop");

  r = step(f.service, id, "stop");  // no code accepted: D empty at 1.0
  CHECK(r.body["phase"] == "calibrate");
  CHECK(r.body["accepted_dbcs"].empty());
  CHECK(r.body["phi_d"] == 1.0);
  CHECK(step(f.service, id, "accept").status == 409);

  const auto def = call(f.service, "GET", "/sessions/" + id + "/definition").body;
  CHECK(def["dbcs"].empty());
  CHECK(def["phi_d"] == 1.0);
}

TEST_CASE("accept-to-floor walk reproduces the batch relaxation") {
  Fixture f;
  const auto id = create(f.service, ten_patient_request());
  const auto train = project_some(f.toy, kTrain);
  const auto batch = relax_activities(train);
  for (std::size_t k = 0; k < batch.size(); ++k) {
    const auto state = call(f.service, "GET", "/sessions/" + id).body;
    CHECK(state["pending"] == to_json(batch[k], f.toy));
    CHECK(step(f.service, id, "accept").status == 200);
  }
  auto state = call(f.service, "GET", "/sessions/" + id).body;
  CHECK(state["exhausted"] == true);
  CHECK(state["pending"].is_null());
  CHECK(step(f.service, id, "accept").status == 409);
  CHECK(state["accepted_pattern"] == Json(names(f.toy, batch.back().current_selection)));

  step(f.service, id, "stop");
  const auto pattern = ids(f.toy, state["accepted_pattern"].get<std::vector<std::string>>());
  const auto dbatch = relax_dbcs(pattern, train);
  for (std::size_t k = 0; k < dbatch.size(); ++k) {
    CHECK(call(f.service, "GET", "/sessions/" + id).body["pending"] == to_json(dbatch[k], f.toy));
    step(f.service, id, "accept");
  }
  CHECK(step(f.service, id, "stop").body["phase"] == "calibrate");

  // Same thresholds in batch: byte-identical definition.
  const auto def = build_definition(f.toy, train, 0.05, 0.05);
  const auto cal = calibrate(f.toy, def, kHoldout, CutoffMethod::elbow);
  CHECK(call(f.service, "GET", "/sessions/" + id + "/definition").raw == dump(to_json(cal.definition)));
  CHECK(call(f.service, "GET", "/sessions/" + id + "/curve").raw == dump(to_json(cal)));
}

TEST_CASE("curve, cut-offs, and classification on the ten-patient log") {
  Fixture f;
  const auto id = create(f.service, ten_patient_request());
  relax_to(f.service, id, 0.8);
  relax_to(f.service, id, 0.8);

  const auto curve = call(f.service, "GET", "/sessions/" + id + "/curve").body;
  CHECK(curve["frontier"].size() == 3);
  CHECK(curve["degenerate"] == true);
  CHECK(curve["chosen"]["alpha_f"] == 1);
  CHECK(curve["chosen"]["alpha_d"] == 0);
  CHECK(curve["lee_liu"]["alpha_d"] == 1);

  auto cut = call(f.service, "POST", "/sessions/" + id + "/cutoffs", R"({"alpha_f":1,"alpha_d":1})");
  CHECK(cut.status == 200);
  CHECK(cut.body["method"] == "manual");
  CHECK(cut.body["chosen"]["group_size"] == 8);
  auto def = call(f.service, "GET", "/sessions/" + id + "/definition").body;
  CHECK(def["alpha_f"] == 1);
  CHECK(def["alpha_d"] == 1);
  CHECK(def["provenance"]["calibration_method"] == "manual");
  CHECK(call(f.service, "GET", "/sessions/" + id).body["phase"] == "done");

  CHECK(call(f.service, "POST", "/sessions/" + id + "/cutoffs", R"({"alpha_f":7,"alpha_d":0})").status == 400);
  CHECK(call(f.service, "POST", "/sessions/" + id + "/cutoffs", R"({"alpha_f":1})").status == 400);
  CHECK(call(f.service, "POST", "/sessions/" + id + "/cutoffs", R"({"alpha_f":-1,"alpha_d":0})").status == 400);
  // A rejected change leaves the previous choice intact.
  CHECK(call(f.service, "GET", "/sessions/" + id + "/definition").body["alpha_d"] == 1);

  cut = call(f.service, "POST", "/sessions/" + id + "/cutoffs", R"({"method":"lee_liu"})");
  CHECK(cut.body["method"] == "lee_liu");
  def = call(f.service, "GET", "/sessions/" + id + "/definition").body;
  CHECK(def["provenance"]["calibration_method"] == "lee_liu");

  auto cls = call(f.service, "GET", "/sessions/" + id + "/classification", "", {{"page_size", "3"}});
  CHECK(cls.status == 200);
  CHECK(cls.body["group_size"] == 8);
  CHECK(cls.body["population"] == 10);
  CHECK(cls.body["pages"] == 3);
  CHECK(cls.body["patients"].size() == 3);
  CHECK(cls.body["patients"][0]["patient_id"] == "p01");

  cls = call(f.service, "GET", "/sessions/" + id + "/classification", "",
             {{"alpha_f", "0"}, {"alpha_d", "0"}, {"page", "2"}, {"page_size", "3"}});
  CHECK(cls.body["group_size"] == 4);
  CHECK(cls.body["patients"].size() == 1);
  CHECK(cls.body["patients"][0]["patient_id"] == "p10");
  cls = call(f.service, "GET", "/sessions/" + id + "/classification", "", {{"page", "9"}});
  CHECK(cls.body["patients"].empty());

  const auto csv = f.service.handle({"GET", "/sessions/" + id + "/classification", {{"format", "csv"}}, ""});
  CHECK(csv.content_type == "text/csv");
  CHECK(csv.body.rfind("patient_id,activity_score,dbc_score,member\np01,0,0,1\n", 0) == 0);

  for (const auto& bad : std::vector<std::map<std::string, std::string>>{
           {{"alpha_f", "x"}}, {{"page", "0"}}, {{"page_size", "0"}}, {{"format", "xml"}}}) {
    CHECK(call(f.service, "GET", "/sessions/" + id + "/classification", "", bad).status == 400);
  }
}

TEST_CASE("routing errors") {
  Fixture f;
  const auto id = create(f.service, ten_patient_request());
  CHECK(call(f.service, "GET", "/sessions/zzz").status == 404);
  CHECK(call(f.service, "GET", "/elsewhere").status == 404);
  CHECK(call(f.service, "GET", "/sessions/" + id + "/nothing").status == 404);
  CHECK(call(f.service, "GET", "/sessions/" + id + "/step").status == 405);
  CHECK(call(f.service, "DELETE", "/sessions/" + id).status == 405);
  const auto r = call(f.service, "POST", "/sessions/zzz/step", R"({"decision":"accept"})");
  CHECK(r.status == 404);
  CHECK(r.body["error"] == "not-found");
}

TEST_CASE("a busy session rejects concurrent mutations") {
  Fixture f;
  const auto id = create(f.service, ten_patient_request());
  {
    auto lock = f.service.hold(id);
    std::thread other([&] {
      const auto r = step(f.service, id, "accept");
      CHECK(r.status == 409);
      CHECK(r.body["error"] == "conflict");
    });
    other.join();
  }
  CHECK(step(f.service, id, "accept").status == 200);
}

TEST_CASE("session equals batch define + calibrate on a drawn sample") {
  Fixture f;
  const auto id = create(f.service, R"({"log":"synthetic","sample_size":30,"seed":7})");
  relax_to(f.service, id, 0.8);
  relax_to(f.service, id, 0.8);
  const auto& truth = f.synthetic.manifests.front();
  const auto plan = draw_sample(truth.members, 30, 7);
  const auto def = define_from_plan(f.synthetic.log, plan, 0.8, 0.8, truth.group_name);
  const auto cal = calibrate(f.synthetic.log, def, plan.holdout, CutoffMethod::elbow);
  CHECK(call(f.service, "GET", "/sessions/" + id + "/definition").raw == dump(to_json(cal.definition)));
  CHECK_FALSE(call(f.service, "GET", "/sessions/" + id + "/curve").body["frontier"].empty());
}

TEST_CASE("snapshots restore sessions") {
  const auto dir = std::filesystem::temp_directory_path() / "cohortmine_snapshots_test";
  std::filesystem::remove_all(dir);
  std::string id, before;
  {
    Fixture f(ServiceOptions{dir});
    id = create(f.service, ten_patient_request());
    relax_to(f.service, id, 0.8);
    relax_to(f.service, id, 0.8);
    call(f.service, "POST", "/sessions/" + id + "/cutoffs", R"({"alpha_f":2,"alpha_d":1})");
    create(f.service, ten_patient_request());
    before = call(f.service, "GET", "/sessions/" + id + "/definition").raw;
  }
  CHECK(std::filesystem::exists(dir / (id + ".json")));
  Fixture g(ServiceOptions{dir});
  CHECK(g.service.restore() == 2);
  CHECK(call(g.service, "GET", "/sessions/" + id + "/definition").raw == before);
  CHECK(call(g.service, "GET", "/sessions/" + id).body["phase"] == "done");
  // New ids do not collide with restored ones.
  const auto fresh = create(g.service, ten_patient_request());
  CHECK(fresh != id);
  CHECK(call(g.service, "GET", "/sessions/" + id).status == 200);
  std::filesystem::remove_all(dir);
}

TEST_CASE("HTTP front end") {
  Fixture f;
  const auto web = std::filesystem::temp_directory_path() / "cohortmine_static_test";
  std::filesystem::create_directories(web);
  std::ofstream(web / "index.html") << "<html>ui</html>";

  HttpServer server(f.service, HttpOptions{"127.0.0.1", 0, web});
  const int port = server.bind();
  std::thread loop([&] { server.listen(); });
  server.wait_until_ready();

  httplib::Client client("127.0.0.1", port);
  auto res = client.Post("/sessions", ten_patient_request(), "application/json");
  REQUIRE(res);
  CHECK(res->status == 201);
  const auto id = Json::parse(res->body)["id"].get<std::string>();

  auto post_step = [&](const char* d) {
    return client.Post("/sessions/" + id + "/step", std::string(R"({"decision":")") + d + "\"}",
                       "application/json");
  };
  for (int i = 0; i < 5; ++i) CHECK(post_step("accept")->status == 200);
  CHECK(post_step("stop")->status == 200);
  for (int i = 0; i < 5; ++i) CHECK(post_step("accept")->status == 200);
  CHECK(post_step("stop")->status == 200);
  CHECK(post_step("stop")->status == 409);

  const auto train = project_some(f.toy, kTrain);
  const auto def = build_definition(f.toy, train, 0.8, 0.8);
  const auto cal = calibrate(f.toy, def, kHoldout, CutoffMethod::elbow);
  res = client.Get("/sessions/" + id + "/definition");
  REQUIRE(res);
  CHECK(res->status == 200);
  CHECK(res->get_header_value("Content-Type") == "application/json");
  CHECK(res->body == dump(to_json(cal.definition)));

  res = client.Get("/sessions/" + id + "/classification?alpha_f=0&alpha_d=0&page=1&page_size=2");
  REQUIRE(res);
  CHECK(Json::parse(res->body)["patients"].size() == 2);
  res = client.Get("/sessions/" + id + "/classification?format=csv");
  CHECK(res->get_header_value("Content-Type") == "text/csv");

  res = client.Get("/sessions/nope");
  CHECK(res->status == 404);
  res = client.Get("/index.html");
  REQUIRE(res);
  CHECK(res->body == "<html>ui</html>");

  server.stop();
  loop.join();
  std::filesystem::remove_all(web);
}
