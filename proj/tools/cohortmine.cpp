// cohortmine: learn a patient-group definition from a small positive sample.

#include <csignal>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cohort/calibration.hpp"
#include "cohort/error.hpp"
#include "cohort/eval.hpp"
#include "cohort/eventlog.hpp"
#include "cohort/pipeline.hpp"
#include "cohort/scoring.hpp"
#include "cohort/serialize.hpp"
#include "cohort/service.hpp"
#include "cohort/synth.hpp"
#include "cohort/version.hpp"

namespace fs = std::filesystem;
using namespace cohort;

namespace {

struct Options {
  std::string log;
  std::vector<std::string> manifests;
  std::string definition;
  std::string sample;
  std::string predicted;
  std::string spec;
  std::string out;
  PipelineConfig config;
  std::string method = "elbow";
  std::optional<std::size_t> alpha_f;
  std::optional<std::size_t> alpha_d;
  std::optional<std::uint64_t> synth_seed;
  bool strict = false;
  // serve
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string static_dir;
  std::string snapshots;
  // yearly
  std::vector<std::string> periods;
};

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::input:
    case ErrorKind::not_found: return 2;
    case ErrorKind::empty_pattern: return 3;
    case ErrorKind::calibration_degenerate: return 4;
    case ErrorKind::conflict: return 1;
  }
  return 1;
}

fs::path out_dir(const Options& o) {
  if (!o.out.empty()) return o.out;
  if (const char* env = std::getenv("COHORTMINE_OUT"); env != nullptr && *env != '\0') return env;
  return ".";
}

void write(const Options& o, const std::string& name, const std::string& text) {
  write_text_file(out_dir(o) / name, text);
}

std::string require(const std::string& value, const char* flag) {
  if (value.empty()) fail(ErrorKind::input, std::string(flag) + " is required");
  return value;
}

EventLog read_log(const Options& o) { return load_log_file(require(o.log, "--log")); }

Manifest read_manifest(const Options& o) {
  if (o.manifests.empty()) fail(ErrorKind::input, "--manifest is required");
  return load_manifest_file(o.manifests.front());
}

GroupDefinition read_definition(const Options& o) {
  return definition_from_json(read_json_file(require(o.definition, "--definition")));
}

/// Sample plan from --sample, or drawn from --manifest.
std::pair<SamplePlan, std::string> read_plan(const Options& o) {
  if (!o.sample.empty()) return {sample_plan_from_json(read_json_file(o.sample)), ""};
  const Manifest truth = read_manifest(o);
  return {draw_sample(truth.members, o.config.sample_size, o.config.seed, o.config.split),
          truth.group_name};
}

std::vector<std::string> read_id_list(const fs::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::input, "cannot open '" + path.string() + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  const std::string text = buffer.str();
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '{') {
    std::istringstream manifest(text);
    return load_manifest(manifest).members;
  }
  std::vector<std::string> ids;
  std::istringstream lines(text);
  std::string line;
  while (std::getline(lines, line)) {
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
    if (!line.empty()) ids.push_back(line);
  }
  return ids;
}

std::string members_text(const std::vector<std::string>& ids) {
  std::string text;
  for (const auto& id : ids) text += id + '\n';
  return text;
}

std::string scores_csv(const std::vector<PatientScore>& scores, std::size_t f, std::size_t d) {
  std::ostringstream out;
  write_scores(out, scores, f, d);
  return out.str();
}

std::string report_text(const EvalReport& report, const GroupDefinition& def) {
  const PeriodReport row{"-", def.provenance.group_name, report, def.pattern.size(),
                         def.dbcs.size(), def.alpha_f, def.alpha_d};
  return render_table(std::span<const PeriodReport>(&row, 1));
}

void check_degenerate(const Options& o, const CalibrationResult& cal) {
  if (!cal.degenerate) return;
  const std::string msg = "recall curve has no clear elbow (" + std::to_string(cal.frontier.size()) +
                          " frontier points); chosen cut-offs (" +
                          std::to_string(cal.chosen.alpha_f) + ", " +
                          std::to_string(cal.chosen.alpha_d) + ") need review";
  if (o.strict) fail(ErrorKind::calibration_degenerate, msg);
  std::cerr << "cohortmine: warning: " << msg << '\n';
}

// --- commands -------------------------------------------------------------

void cmd_synth(const Options& o) {
  GeneratorSpec spec;
  if (!o.spec.empty()) spec = generator_spec_from_json(read_json_file(o.spec));
  if (o.synth_seed) spec.seed = *o.synth_seed;
  const auto generated = generate(spec);

  std::ostringstream log;
  write_log(log, generated.log);
  write(o, "log.csv", log.str());
  for (std::size_t g = 0; g < generated.manifests.size(); ++g) {
    std::ostringstream m;
    write_manifest(m, generated.manifests[g]);
    if (g == 0) write(o, "manifest.json", m.str());
    write(o, "manifest_" + generated.manifests[g].group_name + ".json", m.str());
  }
  Json info;
  info["spec"] = to_json(spec);
  info["stats"] = to_json(generated.stats);
  info["expected"] = to_json(describe(spec));
  write(o, "synth.json", dump(info));
}

void cmd_mine(const Options& o) {
  const EventLog log = read_log(o);
  const auto [plan, group] = read_plan(o);
  const auto train = project_some(log, plan.train);
  write(o, "sample.json", dump(to_json(plan)));
  write(o, "mining.json", dump(to_json(fp_growth(train, o.config.phi_a), log)));
}

void cmd_define(const Options& o) {
  const EventLog log = read_log(o);
  const auto [plan, group] = read_plan(o);
  const auto def = define_from_plan(log, plan, o.config.phi_a, o.config.phi_d, group);
  write(o, "sample.json", dump(to_json(plan)));
  write(o, "definition.json", dump(to_json(def)));
}

void cmd_calibrate(const Options& o) {
  const EventLog log = read_log(o);
  const GroupDefinition def = read_definition(o);
  std::vector<std::string> holdout = def.provenance.holdout;
  if (!o.sample.empty()) holdout = sample_plan_from_json(read_json_file(o.sample)).holdout;
  if (holdout.empty()) fail(ErrorKind::input, "no holdout: pass --sample or a definition with provenance.holdout");

  const auto method = parse_cutoff_method(o.method);
  const bool manual = method == CutoffMethod::manual || o.alpha_f || o.alpha_d;
  auto cal = calibrate(log, def, holdout, manual ? CutoffMethod::elbow : method);
  if (manual) {
    if (!o.alpha_f || !o.alpha_d) fail(ErrorKind::input, "manual cut-offs need --alpha-f and --alpha-d");
    cal = with_manual_cutoffs(std::move(cal), *o.alpha_f, *o.alpha_d);
  }
  write(o, "calibration.json", dump(to_json(cal)));
  write(o, "definition.json", dump(to_json(cal.definition)));
  if (!manual) check_degenerate(o, cal);
}

void cmd_classify(const Options& o) {
  const EventLog log = read_log(o);
  const GroupDefinition def = read_definition(o);
  const auto f = o.alpha_f.value_or(def.alpha_f);
  const auto d = o.alpha_d.value_or(def.alpha_d);
  const auto scores = score_population(log, def);
  write(o, "scores.csv", scores_csv(scores, f, d));
  write(o, "members.txt", members_text(classify(scores, f, d)));
}

void cmd_evaluate(const Options& o) {
  const auto predicted = read_id_list(require(o.predicted, "--predicted"));
  const Manifest truth = read_manifest(o);
  const auto report = evaluate(predicted, truth.members, o.config.n);
  write(o, "report.json", dump(to_json(report)));
  GroupDefinition def;
  if (!o.definition.empty()) def = read_definition(o);
  def.provenance.group_name = truth.group_name;
  write(o, "report.txt", report_text(report, def));
}

void cmd_pipeline(const Options& o) {
  EventLog log;
  Manifest truth;
  if (o.log.empty() && !o.spec.empty()) {
    auto generated = generate(generator_spec_from_json(read_json_file(o.spec)));
    log = std::move(generated.log);
    truth = generated.manifests.front();
  } else {
    log = read_log(o);
    truth = read_manifest(o);
  }
  const auto r = run_pipeline(log, truth, o.config);
  write(o, "sample.json", dump(to_json(r.plan)));
  write(o, "mining.json", dump(to_json(r.mining, log)));
  write(o, "definition.json", dump(to_json(r.definition)));
  write(o, "calibration.json", dump(to_json(r.calibration)));
  write(o, "scores.csv", scores_csv(r.scores, r.definition.alpha_f, r.definition.alpha_d));
  write(o, "members.txt", members_text(r.predicted));
  write(o, "report.json", dump(to_json(r.report)));
  write(o, "report.txt", report_text(r.report, r.definition));
  std::cout << "F" << o.config.n << " " << r.report.f_measure << "  precision " << r.report.precision
            << "  recall " << r.report.recall << "  |G^| " << r.report.group_size << '\n';
  check_degenerate(o, r.calibration);
}

void cmd_yearly(const Options& o) {
  if (o.periods.empty()) fail(ErrorKind::input, "--period LABEL:LOG:MANIFEST is required");
  std::vector<EventLog> logs;
  logs.reserve(o.periods.size());
  std::vector<PeriodInput> inputs;
  for (const auto& spec : o.periods) {
    const auto a = spec.find(':');
    const auto b = spec.rfind(':');
    if (a == std::string::npos || a == b) fail(ErrorKind::input, "bad --period '" + spec + "'");
    logs.push_back(load_log_file(spec.substr(a + 1, b - a - 1)));
    inputs.push_back(PeriodInput{spec.substr(0, a), nullptr, load_manifest_file(spec.substr(b + 1))});
  }
  for (std::size_t i = 0; i < inputs.size(); ++i) inputs[i].log = &logs[i];
  const auto reports = yearly_report(inputs, o.config);
  Json j = Json::array();
  for (const auto& r : reports) {
    Json e;
    e["period"] = r.period;
    e["group"] = r.group;
    e["pattern_size"] = r.pattern_size;
    e["dbc_count"] = r.dbc_count;
    e["alpha_f"] = r.alpha_f;
    e["alpha_d"] = r.alpha_d;
    e["report"] = to_json(r.report);
    j.push_back(std::move(e));
  }
  write(o, "yearly.json", dump(j));
  const auto table = render_table(reports);
  write(o, "yearly.txt", table);
  std::cout << table;
}

HttpServer* g_server = nullptr;

void cmd_serve(const Options& o) {
  ServiceOptions service_options;
  if (!o.snapshots.empty()) service_options.snapshot_dir = fs::path(o.snapshots);
  Service service(service_options);
  const fs::path log_path = require(o.log, "--log");
  std::vector<Manifest> manifests;
  for (const auto& m : o.manifests) manifests.push_back(load_manifest_file(m));
  service.add_log(log_path.stem().string(), load_log_file(log_path), std::move(manifests));
  const auto restored = service.restore();

  HttpOptions http{o.host, o.port, std::nullopt};
  if (!o.static_dir.empty()) http.static_dir = fs::path(o.static_dir);
  HttpServer server(service, http);
  const int port = server.bind();
  std::cerr << "cohortmine: serving log '" << log_path.stem().string() << "' on http://" << o.host
            << ":" << port << " (" << restored << " sessions restored)\n";
  g_server = &server;
  std::signal(SIGINT, [](int) {
    if (g_server != nullptr) g_server->stop();
  });
  std::signal(SIGTERM, [](int) {
    if (g_server != nullptr) g_server->stop();
  });
  server.listen();
  g_server = nullptr;
}

}  // namespace

int main(int argc, char** argv) {
  Options o;
  CLI::App app{"Learn an interpretable patient-group definition from a positive sample."};
  app.set_version_flag("--version", std::string(version()));
  app.require_subcommand(1);

  auto add_paths = [&](CLI::App* c) {
    c->add_option("--log", o.log, "event log CSV (patient_id,activity,dbc,timestamp)");
    c->add_option("--out", o.out, "output directory (default: $COHORTMINE_OUT or .)");
  };
  auto add_sampling = [&](CLI::App* c) {
    c->add_option("--manifest", o.manifests, "ground-truth manifest JSON");
    c->add_option("--sample", o.sample, "sample plan JSON instead of drawing from --manifest");
    c->add_option("--sample-size", o.config.sample_size, "patients drawn from the manifest")
        ->capture_default_str();
    c->add_option("--split", o.config.split, "fraction used for mining; 1 reuses the sample for recall")
        ->capture_default_str();
    c->add_option("--seed", o.config.seed, "random seed")->capture_default_str();
  };
  auto add_thresholds = [&](CLI::App* c) {
    c->add_option("--phi-a", o.config.phi_a, "activity support threshold")->capture_default_str();
    c->add_option("--phi-d", o.config.phi_d, "code support threshold")->capture_default_str();
  };
  auto add_method = [&](CLI::App* c) {
    c->add_option("--method", o.method, "cut-off method: elbow, lee_liu, manual")->capture_default_str();
    c->add_flag("--strict", o.strict, "exit 4 when the recall curve has no clear elbow");
  };

  std::function<void()> command;
  auto sub = [&](const char* name, const char* help, void (*fn)(const Options&)) {
    auto* c = app.add_subcommand(name, help);
    c->callback([&command, fn, &o] { command = [fn, &o] { fn(o); }; });
    return c;
  };

  auto* synth = sub("synth", "generate a synthetic log with planted groups", cmd_synth);
  synth->add_option("--spec", o.spec, "generator spec JSON");
  synth->add_option("--seed", o.synth_seed, "random seed (overrides the spec)");
  synth->add_option("--out", o.out, "output directory");

  auto* mine = sub("mine", "mine frequent activity patterns from a sample", cmd_mine);
  add_paths(mine);
  add_sampling(mine);
  add_thresholds(mine);

  auto* define = sub("define", "build a group definition (pattern + codes)", cmd_define);
  add_paths(define);
  add_sampling(define);
  add_thresholds(define);
  define->add_option("--step", o.config.step, "relaxation step")->capture_default_str();

  auto* calibrate_cmd = sub("calibrate", "choose cut-offs from the held-out sample", cmd_calibrate);
  add_paths(calibrate_cmd);
  calibrate_cmd->add_option("--definition", o.definition, "definition JSON");
  calibrate_cmd->add_option("--sample", o.sample, "sample plan JSON (holdout source)");
  calibrate_cmd->add_option("--alpha-f", o.alpha_f, "manual activity cut-off");
  calibrate_cmd->add_option("--alpha-d", o.alpha_d, "manual code cut-off");
  add_method(calibrate_cmd);

  auto* classify_cmd = sub("classify", "score the population and list members", cmd_classify);
  add_paths(classify_cmd);
  classify_cmd->add_option("--definition", o.definition, "definition JSON");
  classify_cmd->add_option("--alpha-f", o.alpha_f, "override the definition's activity cut-off");
  classify_cmd->add_option("--alpha-d", o.alpha_d, "override the definition's code cut-off");

  auto* evaluate_cmd = sub("evaluate", "precision, recall and F against ground truth", cmd_evaluate);
  evaluate_cmd->add_option("--predicted", o.predicted, "members.txt (one id per line) or manifest JSON");
  evaluate_cmd->add_option("--manifest", o.manifests, "ground-truth manifest JSON");
  evaluate_cmd->add_option("--definition", o.definition, "definition JSON, for the text report");
  evaluate_cmd->add_option("--n", o.config.n, "F-measure weight")->capture_default_str();
  evaluate_cmd->add_option("--out", o.out, "output directory");

  auto* pipeline = sub("pipeline", "sample, define, calibrate, classify and evaluate", cmd_pipeline);
  add_paths(pipeline);
  add_sampling(pipeline);
  add_thresholds(pipeline);
  add_method(pipeline);
  pipeline->add_option("--spec", o.spec, "generator spec JSON, used when --log is absent");
  pipeline->add_option("--step", o.config.step, "relaxation step")->capture_default_str();
  pipeline->add_option("--n", o.config.n, "F-measure weight")->capture_default_str();

  auto* yearly = sub("yearly", "run the pipeline per period and compare", cmd_yearly);
  yearly->add_option("--period", o.periods, "LABEL:LOG.csv:MANIFEST.json (repeatable)");
  add_sampling(yearly);
  add_thresholds(yearly);
  add_method(yearly);
  yearly->add_option("--n", o.config.n, "F-measure weight")->capture_default_str();
  yearly->add_option("--out", o.out, "output directory");

  auto* serve = sub("serve", "start the HTTP service for interactive sessions", cmd_serve);
  serve->add_option("--log", o.log, "event log CSV");
  serve->add_option("--manifest", o.manifests, "ground-truth manifest JSON (repeatable)");
  serve->add_option("--host", o.host)->capture_default_str();
  serve->add_option("--port", o.port)->capture_default_str();
  serve->add_option("--static", o.static_dir, "directory served at /");
  serve->add_option("--snapshots", o.snapshots, "directory for session snapshots");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "cohortmine: input-error: " << e.what() << '\n';
    return 2;
  }

  try {
    o.config.method = parse_cutoff_method(o.method);
    if (command) command();
    return 0;
  } catch (const Error& e) {
    std::cerr << "cohortmine: " << to_string(e.kind()) << ": " << e.what() << '\n';
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "cohortmine: internal: " << e.what() << '\n';
    return 1;
  }
}
