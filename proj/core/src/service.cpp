#include "cohort/service.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <iostream>
#include <sstream>

#include <httplib.h>

#include "cohort/calibration.hpp"
#include "cohort/eval.hpp"
#include "cohort/groupdef.hpp"
#include "cohort/scoring.hpp"
#include "cohort/serialize.hpp"
#include "cohort/version.hpp"

namespace cohort {

int http_status(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::input: return 400;
    case ErrorKind::not_found: return 404;
    case ErrorKind::conflict: return 409;
    case ErrorKind::empty_pattern:
    case ErrorKind::calibration_degenerate: return 422;
  }
  return 500;
}

namespace {

enum class Phase { relax_activities, relax_dbcs, calibrate, done };

std::string_view phase_name(Phase p) {
  switch (p) {
    case Phase::relax_activities: return "relax_activities";
    case Phase::relax_dbcs: return "relax_dbcs";
    case Phase::calibrate: return "calibrate";
    case Phase::done: return "done";
  }
  return "unknown";
}

struct LoadedLog {
  std::string id;
  EventLog log;
  std::vector<Manifest> manifests;
};

struct HistoryEntry {
  Phase phase;
  double threshold;
  std::string decision;
};

struct Session {
  std::string id;
  const LoadedLog* source = nullptr;
  Json request;
  std::vector<Json> actions;  // replayable mutations, for snapshots

  std::string group_name;
  SamplePlan plan;
  bool drawn = false;  // plan came from draw_sample (seed is meaningful)
  std::vector<PatientProjection> train;
  RelaxationOptions options;
  CutoffMethod method = CutoffMethod::elbow;

  Phase phase = Phase::relax_activities;
  std::size_t k = 0;  // pending step index within the phase
  bool exhausted = false;
  std::optional<ActivityStep> pending_activity;
  std::optional<DbcStep> pending_dbc;

  Itemset accepted_pattern;
  std::optional<double> phi_a;
  std::vector<CodeId> accepted_dbcs;
  std::optional<double> phi_d;
  std::vector<HistoryEntry> history;

  GroupDefinition base;  // before cut-offs
  std::vector<PatientScore> scores;
  std::optional<CalibrationResult> calibration;

  mutable std::shared_mutex mutex;

  const EventLog& log() const { return source->log; }
};

Json parse_body(const std::string& body) {
  if (body.empty()) return Json::object();
  try {
    Json j = Json::parse(body);
    if (!j.is_object()) fail(ErrorKind::input, "request body must be a JSON object");
    return j;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::input, std::string("invalid JSON body: ") + e.what());
  }
}

template <typename T>
T get_or(const Json& j, const char* key, T fallback) {
  if (!j.contains(key) || j.at(key).is_null()) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    fail(ErrorKind::input, std::string("field '") + key + "' has the wrong type");
  }
}

std::size_t parse_count(const std::map<std::string, std::string>& query, const std::string& key,
                        std::size_t fallback) {
  const auto it = query.find(key);
  if (it == query.end() || it->second.empty()) return fallback;
  std::size_t v = 0;
  const auto& s = it->second;
  const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || end != s.data() + s.size()) {
    fail(ErrorKind::input, "query parameter '" + key + "' must be a non-negative integer");
  }
  return v;
}

ServiceResponse json_response(const Json& j, int status = 200) {
  return ServiceResponse{status, "application/json", dump(j)};
}

ServiceResponse error_response(int status, std::string_view category, const std::string& message) {
  Json j;
  j["error"] = category;
  j["message"] = message;
  return json_response(j, status);
}

std::vector<std::string> split_path(const std::string& path) {
  std::vector<std::string> parts;
  std::string current;
  for (char c : path) {
    if (c == '/') {
      if (!current.empty()) parts.push_back(std::move(current));
      current.clear();
    } else {
      current += c;
    }
  }
  if (!current.empty()) parts.push_back(std::move(current));
  return parts;
}

}  // namespace

struct Service::Impl {
  ServiceOptions options;
  mutable std::shared_mutex registry_mutex;
  std::map<std::string, std::unique_ptr<LoadedLog>> logs;
  std::map<std::string, std::unique_ptr<Session>> sessions;
  std::uint64_t next_id = 1;

  // --- registry -----------------------------------------------------------

  Session& find_session(const std::string& id) {
    std::shared_lock lock(registry_mutex);
    const auto it = sessions.find(id);
    if (it == sessions.end()) fail(ErrorKind::not_found, "unknown session '" + id + "'");
    return *it->second;
  }

  const LoadedLog& find_log(const Json& request) {
    std::shared_lock lock(registry_mutex);
    if (request.contains("log")) {
      const auto id = get_or<std::string>(request, "log", "");
      const auto it = logs.find(id);
      if (it == logs.end()) fail(ErrorKind::not_found, "unknown log '" + id + "'");
      return *it->second;
    }
    if (logs.size() != 1) fail(ErrorKind::input, "request must name a log");
    return *logs.begin()->second;
  }

  std::string fresh_id() {
    char buf[32];
    std::snprintf(buf, sizeof buf, "s%06llu", static_cast<unsigned long long>(next_id++));
    return buf;
  }

  void snapshot(const Session& s) const {
    if (!options.snapshot_dir) return;
    Json j;
    j["id"] = s.id;
    j["request"] = s.request;
    j["actions"] = s.actions;
    write_text_file(*options.snapshot_dir / (s.id + ".json"), dump(j));
  }

  // --- session mechanics ----------------------------------------------------

  static void init_session(Session& s, const LoadedLog& source, const Json& request) {
    s.source = &source;
    s.request = request;
    s.options.step = get_or(request, "step", RelaxationOptions{}.step);
    s.options.floor = get_or(request, "floor", RelaxationOptions{}.floor);
    validate(s.options);
    s.method = parse_cutoff_method(get_or<std::string>(request, "method", "elbow"));
    if (s.method == CutoffMethod::manual) {
      fail(ErrorKind::input, "sessions calibrate with elbow or lee_liu; post manual cut-offs later");
    }

    if (request.contains("train")) {
      auto train = get_or<std::vector<std::string>>(request, "train", {});
      auto holdout = get_or<std::vector<std::string>>(request, "holdout", {});
      if (train.empty()) fail(ErrorKind::input, "'train' must list at least one patient");
      std::sort(train.begin(), train.end());
      train.erase(std::unique(train.begin(), train.end()), train.end());
      std::sort(holdout.begin(), holdout.end());
      holdout.erase(std::unique(holdout.begin(), holdout.end()), holdout.end());
      s.plan.optimistic = holdout.empty();
      if (holdout.empty()) holdout = train;
      std::set_union(train.begin(), train.end(), holdout.begin(), holdout.end(),
                     std::back_inserter(s.plan.sample));
      s.plan.train = std::move(train);
      s.plan.holdout = std::move(holdout);
      s.plan.split = static_cast<double>(s.plan.train.size()) / static_cast<double>(s.plan.sample.size());
      s.group_name = get_or<std::string>(request, "group", "");
      for (const auto& id : s.plan.holdout) {
        if (!source.log.find(id)) fail(ErrorKind::input, "holdout patient '" + id + "' is not in the log");
      }
    } else {
      const Manifest* truth = nullptr;
      if (request.contains("group")) {
        const auto name = get_or<std::string>(request, "group", "");
        for (const auto& m : source.manifests) {
          if (m.group_name == name) truth = &m;
        }
        if (truth == nullptr) fail(ErrorKind::not_found, "unknown group '" + name + "'");
      } else if (source.manifests.size() == 1) {
        truth = &source.manifests.front();
      } else {
        fail(ErrorKind::input, "request must name a group or list 'train' patients");
      }
      s.group_name = truth->group_name;
      s.plan = draw_sample(truth->members, get_or<std::size_t>(request, "sample_size", 30),
                           get_or<std::uint64_t>(request, "seed", 1),
                           get_or(request, "split", 0.5));
      s.drawn = true;
    }
    try {
      s.train = project_some(source.log, s.plan.train);
    } catch (const Error& e) {
      fail(ErrorKind::input, e.what());
    }
    s.pending_activity = ActivityRelaxation(s.train, s.options).at(0);
  }

  static void step(Session& s, const std::string& decision) {
    if (decision != "accept" && decision != "stop") {
      fail(ErrorKind::input, "decision must be 'accept' or 'stop'");
    }
    if (s.phase == Phase::calibrate || s.phase == Phase::done) {
      fail(ErrorKind::conflict, "relaxation is over; the session is in phase " +
                                    std::string(phase_name(s.phase)));
    }
    if (decision == "accept") {
      accept(s);
    } else if (s.phase == Phase::relax_activities) {
      stop_activities(s);
    } else {
      stop_dbcs(s);
    }
  }

  static void accept(Session& s) {
    if (s.exhausted) fail(ErrorKind::conflict, "the relaxation floor has been reached; stop instead");
    if (s.phase == Phase::relax_activities) {
      const ActivityRelaxation relaxation(s.train, s.options);
      s.accepted_pattern = s.pending_activity->current_selection;
      s.phi_a = s.pending_activity->threshold;
      s.history.push_back({s.phase, *s.phi_a, "accept"});
      if (++s.k < relaxation.size()) {
        s.pending_activity = relaxation.at(s.k);
      } else {
        s.pending_activity.reset();
        s.exhausted = true;
      }
    } else {
      const DbcRelaxation relaxation(s.accepted_pattern, s.train, s.options);
      s.accepted_dbcs = s.pending_dbc->current_selection;
      s.phi_d = s.pending_dbc->threshold;
      s.history.push_back({s.phase, *s.phi_d, "accept"});
      if (++s.k < relaxation.size()) {
        s.pending_dbc = relaxation.at(s.k);
      } else {
        s.pending_dbc.reset();
        s.exhausted = true;
      }
    }
  }

  static void stop_activities(Session& s) {
    if (s.accepted_pattern.empty()) {
      fail(ErrorKind::empty_pattern, "no activity pattern accepted yet; accept a step before stopping");
    }
    s.history.push_back({s.phase, *s.phi_a, "stop"});
    s.phase = Phase::relax_dbcs;
    s.k = 0;
    s.exhausted = false;
    s.pending_activity.reset();
    s.pending_dbc = DbcRelaxation(s.accepted_pattern, s.train, s.options).at(0);
  }

  static void stop_dbcs(Session& s) {
    if (!s.phi_d) s.phi_d = 1.0;  // nothing accepted: empty code set
    s.history.push_back({s.phase, *s.phi_d, "stop"});
    s.pending_dbc.reset();
    s.exhausted = false;

    GroupDefinition def;
    def.pattern = labels_of<ActivityId>(s.log(), s.accepted_pattern);
    def.dbcs = labels_of<CodeId>(s.log(), s.accepted_dbcs);
    def.phi_a = *s.phi_a;
    def.phi_d = *s.phi_d;
    def.provenance.version = std::string(version());
    def.provenance.group_name = s.group_name;
    if (s.drawn) def.provenance.seed = s.plan.seed;
    def.provenance.sample = s.plan.train;
    def.provenance.holdout = s.plan.holdout;
    def.provenance.optimistic = s.plan.optimistic;
    s.base = def;
    s.scores = score_population(s.log(), def);
    s.calibration = calibrate(s.scores, def, s.plan.holdout, s.method);
    s.phase = Phase::calibrate;
  }

  static void set_cutoffs(Session& s, const Json& body) {
    require_calibrated(s);
    if (body.contains("method")) {
      const auto method = parse_cutoff_method(get_or<std::string>(body, "method", ""));
      if (method == CutoffMethod::manual) fail(ErrorKind::input, "manual cut-offs need alpha_f and alpha_d");
      s.calibration = calibrate(s.scores, s.base, s.plan.holdout, method);
    } else {
      if (!body.contains("alpha_f") || !body.contains("alpha_d")) {
        fail(ErrorKind::input, "cut-offs need alpha_f and alpha_d, or a method");
      }
      const auto f = get_or<std::int64_t>(body, "alpha_f", -1);
      const auto d = get_or<std::int64_t>(body, "alpha_d", -1);
      if (f < 0 || d < 0) fail(ErrorKind::input, "cut-offs must be non-negative integers");
      s.calibration = with_manual_cutoffs(*s.calibration, static_cast<std::size_t>(f),
                                          static_cast<std::size_t>(d));
    }
    s.phase = Phase::done;
  }

  static void require_calibrated(const Session& s) {
    if (!s.calibration) {
      fail(ErrorKind::conflict, "session is still in phase " + std::string(phase_name(s.phase)) +
                                    "; stop both relaxations first");
    }
  }

  static void apply(Session& s, const Json& action) {
    const auto op = get_or<std::string>(action, "op", "");
    if (op == "step") {
      step(s, get_or<std::string>(action, "decision", ""));
    } else if (op == "cutoffs") {
      set_cutoffs(s, action.at("body"));
    } else {
      fail(ErrorKind::input, "unknown snapshot action '" + op + "'");
    }
  }

  // --- views ------------------------------------------------------------------

  static Json state(const Session& s) {
    Json j;
    j["id"] = s.id;
    j["log"] = s.source->id;
    j["group"] = s.group_name;
    j["phase"] = phase_name(s.phase);
    j["step"] = s.options.step;
    j["floor"] = s.options.floor;
    j["method"] = to_string(s.method);
    Json pending = nullptr;
    if (s.pending_activity) pending = to_json(*s.pending_activity, s.log());
    if (s.pending_dbc) pending = to_json(*s.pending_dbc, s.log());
    j["threshold"] = pending.is_null() ? Json(nullptr) : pending["threshold"];
    j["pending"] = std::move(pending);
    j["exhausted"] = s.exhausted;
    j["phi_a"] = s.phi_a ? Json(*s.phi_a) : Json(nullptr);
    j["phi_d"] = s.phi_d ? Json(*s.phi_d) : Json(nullptr);
    j["accepted_pattern"] = labels_of<ActivityId>(s.log(), s.accepted_pattern);
    j["accepted_dbcs"] = labels_of<CodeId>(s.log(), s.accepted_dbcs);
    Json history = Json::array();
    for (const auto& h : s.history) {
      Json e;
      e["phase"] = phase_name(h.phase);
      e["threshold"] = h.threshold;
      e["decision"] = h.decision;
      history.push_back(std::move(e));
    }
    j["history"] = std::move(history);
    j["sample"] = to_json(s.plan);
    if (s.calibration) {
      j["alpha_f"] = s.calibration->definition.alpha_f;
      j["alpha_d"] = s.calibration->definition.alpha_d;
    }
    return j;
  }

  static ServiceResponse classification(const Session& s,
                                        const std::map<std::string, std::string>& query) {
    require_calibrated(s);
    const auto& def = s.calibration->definition;
    const auto alpha_f = parse_count(query, "alpha_f", def.alpha_f);
    const auto alpha_d = parse_count(query, "alpha_d", def.alpha_d);
    const auto format = query.count("format") ? query.at("format") : std::string("json");
    if (format == "csv") {
      std::ostringstream out;
      write_scores(out, s.scores, alpha_f, alpha_d);
      return ServiceResponse{200, "text/csv", out.str()};
    }
    if (format != "json") fail(ErrorKind::input, "format must be json or csv");
    const auto page = parse_count(query, "page", 1);
    const auto page_size = parse_count(query, "page_size", 100);
    if (page == 0) fail(ErrorKind::input, "page numbers start at 1");
    if (page_size == 0 || page_size > 10'000) fail(ErrorKind::input, "page_size must lie in [1, 10000]");

    std::vector<const PatientScore*> members;
    for (const auto& sc : s.scores) {
      if (is_member(sc, alpha_f, alpha_d)) members.push_back(&sc);
    }
    Json j;
    j["alpha_f"] = alpha_f;
    j["alpha_d"] = alpha_d;
    j["group_size"] = members.size();
    j["population"] = s.scores.size();
    j["page"] = page;
    j["page_size"] = page_size;
    j["pages"] = (members.size() + page_size - 1) / page_size;
    Json list = Json::array();
    const auto first = std::min(members.size(), (page - 1) * page_size);
    const auto last = std::min(members.size(), first + page_size);
    for (auto i = first; i < last; ++i) {
      Json e;
      e["patient_id"] = members[i]->patient_id;
      e["activity_score"] = members[i]->activity_score;
      e["dbc_score"] = members[i]->dbc_score;
      list.push_back(std::move(e));
    }
    j["patients"] = std::move(list);
    return json_response(j);
  }

  // --- routing ------------------------------------------------------------------

  Session& create(const Json& request, std::string id = {}) {
    const LoadedLog& source = find_log(request);
    auto session = std::make_unique<Session>();
    init_session(*session, source, request);
    std::unique_lock lock(registry_mutex);
    if (id.empty()) {
      id = fresh_id();
    } else {
      // Keep generated ids clear of restored ones.
      unsigned long long n = 0;
      if (std::sscanf(id.c_str(), "s%llu", &n) == 1 && n >= next_id) next_id = n + 1;
    }
    session->id = id;
    auto& ref = *session;
    sessions[id] = std::move(session);
    return ref;
  }

  template <typename F>
  ServiceResponse mutate(const std::string& id, F&& change) {
    Session& s = find_session(id);
    std::unique_lock lock(s.mutex, std::try_to_lock);
    if (!lock.owns_lock()) fail(ErrorKind::conflict, "session '" + id + "' is busy");
    change(s);
    snapshot(s);
    return json_response(state(s));
  }

  ServiceResponse route(const ServiceRequest& r) {
    const auto parts = split_path(r.path);
    if (parts.empty() || parts[0] != "sessions" || parts.size() > 3) {
      fail(ErrorKind::not_found, "no route for " + r.path);
    }
    auto expect = [&](const char* method) {
      if (r.method != method) {
        throw ServiceResponse{error_response(405, "method-not-allowed",
                                             r.method + " is not supported on " + r.path)};
      }
    };
    if (parts.size() == 1) {
      expect("POST");
      const Json request = parse_body(r.body);
      Session& s = create(request);
      std::shared_lock lock(s.mutex);
      snapshot(s);
      return json_response(state(s), 201);
    }
    const std::string& id = parts[1];
    if (parts.size() == 2) {
      expect("GET");
      Session& s = find_session(id);
      std::shared_lock lock(s.mutex);
      return json_response(state(s));
    }
    const std::string& leaf = parts[2];
    if (leaf == "step") {
      expect("POST");
      const Json body = parse_body(r.body);
      const auto decision = get_or<std::string>(body, "decision", "");
      return mutate(id, [&](Session& s) {
        step(s, decision);
        Json action;
        action["op"] = "step";
        action["decision"] = decision;
        s.actions.push_back(std::move(action));
      });
    }
    if (leaf == "cutoffs") {
      expect("POST");
      const Json body = parse_body(r.body);
      Session& s = find_session(id);
      std::unique_lock lock(s.mutex, std::try_to_lock);
      if (!lock.owns_lock()) fail(ErrorKind::conflict, "session '" + id + "' is busy");
      set_cutoffs(s, body);
      Json action;
      action["op"] = "cutoffs";
      action["body"] = body;
      s.actions.push_back(std::move(action));
      snapshot(s);
      return json_response(to_json(*s.calibration));
    }
    if (leaf == "curve" || leaf == "definition" || leaf == "classification") {
      expect("GET");
      Session& s = find_session(id);
      std::shared_lock lock(s.mutex);
      if (leaf == "classification") return classification(s, r.query);
      require_calibrated(s);
      return json_response(leaf == "curve" ? to_json(*s.calibration)
                                           : to_json(s.calibration->definition));
    }
    fail(ErrorKind::not_found, "no route for " + r.path);
  }
};

Service::Service(ServiceOptions options) : impl_(std::make_unique<Impl>()) {
  impl_->options = std::move(options);
}

Service::~Service() = default;

void Service::add_log(std::string id, EventLog log, std::vector<Manifest> manifests) {
  std::unique_lock lock(impl_->registry_mutex);
  auto entry = std::make_unique<LoadedLog>();
  entry->id = id;
  entry->log = std::move(log);
  entry->manifests = std::move(manifests);
  impl_->logs[std::move(id)] = std::move(entry);
}

std::vector<std::string> Service::log_ids() const {
  std::shared_lock lock(impl_->registry_mutex);
  std::vector<std::string> out;
  for (const auto& [id, entry] : impl_->logs) out.push_back(id);
  return out;
}

ServiceResponse Service::handle(const ServiceRequest& request) {
  try {
    return impl_->route(request);
  } catch (const ServiceResponse& early) {
    return early;
  } catch (const Error& e) {
    return error_response(http_status(e.kind()), to_string(e.kind()), e.what());
  } catch (const std::exception& e) {
    return error_response(500, "internal", e.what());
  }
}

std::size_t Service::restore() {
  const auto& dir = impl_->options.snapshot_dir;
  if (!dir || !std::filesystem::is_directory(*dir)) return 0;
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(*dir)) {
    if (entry.path().extension() == ".json") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::size_t restored = 0;
  for (const auto& path : files) {
    try {
      const Json snap = read_json_file(path);
      Session& s = impl_->create(snap.at("request"), snap.at("id").get<std::string>());
      for (const auto& action : snap.at("actions")) {
        Impl::apply(s, action);
        s.actions.push_back(action);
      }
      ++restored;
    } catch (const std::exception& e) {
      std::cerr << "cohortmine: skipping snapshot " << path.string() << ": " << e.what() << '\n';
    }
  }
  return restored;
}

std::unique_lock<std::shared_mutex> Service::hold(const std::string& session_id) {
  return std::unique_lock(impl_->find_session(session_id).mutex);
}

// ---------------------------------------------------------------------------

struct HttpServer::Impl {
  Service& service;
  HttpOptions options;
  httplib::Server server;

  Impl(Service& s, HttpOptions o) : service(s), options(std::move(o)) {}

  void forward(const httplib::Request& req, httplib::Response& res) {
    ServiceRequest r;
    r.method = req.method;
    r.path = req.path;
    for (const auto& [key, value] : req.params) r.query.emplace(key, value);
    r.body = req.body;
    const auto out = service.handle(r);
    res.status = out.status;
    res.set_content(out.body, out.content_type);
  }
};

HttpServer::HttpServer(Service& service, HttpOptions options)
    : impl_(std::make_unique<Impl>(service, std::move(options))) {
  auto handler = [this](const httplib::Request& req, httplib::Response& res) {
    impl_->forward(req, res);
  };
  impl_->server.Get(R"(/sessions(/.*)?)", handler);
  impl_->server.Post(R"(/sessions(/.*)?)", handler);
  impl_->server.Put(R"(/sessions(/.*)?)", handler);
  impl_->server.Delete(R"(/sessions(/.*)?)", handler);
  if (impl_->options.static_dir) {
    if (!impl_->server.set_mount_point("/", impl_->options.static_dir->string())) {
      fail(ErrorKind::input, "static directory '" + impl_->options.static_dir->string() +
                                 "' does not exist");
    }
  }
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind() {
  const auto& o = impl_->options;
  const int port = o.port == 0 ? impl_->server.bind_to_any_port(o.host)
                               : (impl_->server.bind_to_port(o.host, o.port) ? o.port : -1);
  if (port < 0) {
    fail(ErrorKind::input, "cannot bind " + o.host + ":" + std::to_string(o.port));
  }
  return port;
}

void HttpServer::listen() { impl_->server.listen_after_bind(); }

void HttpServer::wait_until_ready() const { impl_->server.wait_until_ready(); }

void HttpServer::stop() {
  if (impl_->server.is_running()) impl_->server.stop();
}

}  // namespace cohort
