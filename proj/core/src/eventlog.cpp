#include "cohort/eventlog.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>

#include <nlohmann/json.hpp>

#include "cohort/csv.hpp"
#include "cohort/error.hpp"

namespace cohort {

namespace {

std::string_view trim(std::string_view s) {
  constexpr std::string_view ws = " \t\r\n\v\f";
  const auto first = s.find_first_not_of(ws);
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(ws);
  return s.substr(first, last - first + 1);
}

bool read_int(std::string_view text, std::size_t pos, std::size_t len, int& out) {
  if (pos + len > text.size()) return false;
  const char* first = text.data() + pos;
  const char* last = first + len;
  if (!std::all_of(first, last, [](char c) { return c >= '0' && c <= '9'; })) return false;
  return std::from_chars(first, last, out).ec == std::errc{};
}

}  // namespace

std::optional<Timestamp> parse_timestamp(std::string_view text) {
  using namespace std::chrono;
  text = trim(text);
  int y = 0, mo = 0, d = 0;
  if (text.size() < 10 || text[4] != '-' || text[7] != '-') return std::nullopt;
  if (!read_int(text, 0, 4, y) || !read_int(text, 5, 2, mo) || !read_int(text, 8, 2, d)) {
    return std::nullopt;
  }
  const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)},
                           day{static_cast<unsigned>(d)}};
  if (!ymd.ok()) return std::nullopt;

  int h = 0, mi = 0, s = 0, ms = 0, offset_minutes = 0;
  std::size_t pos = 10;
  if (pos < text.size() && (text[pos] == 'T' || text[pos] == ' ')) {
    if (!read_int(text, pos + 1, 2, h) || pos + 3 >= text.size() || text[pos + 3] != ':' ||
        !read_int(text, pos + 4, 2, mi)) {
      return std::nullopt;
    }
    pos += 6;
    if (pos < text.size() && text[pos] == ':') {
      if (!read_int(text, pos + 1, 2, s)) return std::nullopt;
      pos += 3;
      if (pos < text.size() && text[pos] == '.') {
        std::size_t digits = 0;
        ++pos;
        while (pos < text.size() && text[pos] >= '0' && text[pos] <= '9') {
          if (digits < 3) ms = ms * 10 + (text[pos] - '0');
          ++digits;
          ++pos;
        }
        if (digits == 0) return std::nullopt;
        for (std::size_t i = digits; i < 3; ++i) ms *= 10;
      }
    }
    if (h > 23 || mi > 59 || s > 60) return std::nullopt;
    if (pos < text.size()) {
      if (text[pos] == 'Z' && pos + 1 == text.size()) {
        ++pos;
      } else if ((text[pos] == '+' || text[pos] == '-') && pos + 6 == text.size() &&
                 text[pos + 3] == ':') {
        int oh = 0, om = 0;
        if (!read_int(text, pos + 1, 2, oh) || !read_int(text, pos + 4, 2, om)) {
          return std::nullopt;
        }
        offset_minutes = (text[pos] == '-' ? -1 : 1) * (oh * 60 + om);
        pos += 6;
      }
    }
  }
  if (pos != text.size()) return std::nullopt;

  const auto days = sys_days{ymd}.time_since_epoch().count();
  const std::int64_t seconds = std::int64_t{days} * 86400 + h * 3600 + mi * 60 + s -
                               std::int64_t{offset_minutes} * 60;
  return seconds * 1000 + ms;
}

std::string format_timestamp(Timestamp ts) {
  using namespace std::chrono;
  const std::int64_t ms = ((ts % 1000) + 1000) % 1000;
  const std::int64_t total_seconds = (ts - ms) / 1000;
  std::int64_t days = total_seconds / 86400;
  std::int64_t secs = total_seconds % 86400;
  if (secs < 0) {
    secs += 86400;
    --days;
  }
  const year_month_day ymd{sys_days{std::chrono::days{days}}};
  char buf[40];
  const int n = std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02d",
                              static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
                              static_cast<unsigned>(ymd.day()), static_cast<int>(secs / 3600),
                              static_cast<int>(secs / 60 % 60), static_cast<int>(secs % 60));
  std::string out(buf, static_cast<std::size_t>(n));
  if (ms != 0) {
    std::snprintf(buf, sizeof buf, ".%03d", static_cast<int>(ms));
    out += buf;
  }
  return out;
}

// ---------------------------------------------------------------------------

Alphabet::Alphabet(std::vector<std::string> sorted_labels) : labels_(std::move(sorted_labels)) {}

std::optional<std::uint32_t> Alphabet::find(std::string_view label) const {
  const auto it = std::lower_bound(labels_.begin(), labels_.end(), label);
  if (it == labels_.end() || *it != label) return std::nullopt;
  return static_cast<std::uint32_t>(it - labels_.begin());
}

std::size_t EventLog::event_count() const noexcept {
  std::size_t n = 0;
  for (const auto& t : traces_) n += t.events.size();
  return n;
}

std::vector<std::string> EventLog::patient_ids() const {
  std::vector<std::string> ids;
  ids.reserve(traces_.size());
  for (const auto& t : traces_) ids.push_back(t.patient_id);
  return ids;
}

std::optional<ActivityId> EventLog::activity_id(std::string_view label) const {
  if (auto id = activities_.find(label)) return ActivityId{*id};
  return std::nullopt;
}

std::optional<CodeId> EventLog::dbc_id(std::string_view label) const {
  if (auto id = dbcs_.find(label)) return CodeId{*id};
  return std::nullopt;
}

const Trace* EventLog::find(std::string_view patient_id) const {
  const auto it = std::lower_bound(
      traces_.begin(), traces_.end(), patient_id,
      [](const Trace& t, std::string_view id) { return t.patient_id < id; });
  if (it == traces_.end() || it->patient_id != patient_id) return nullptr;
  return &*it;
}

const Trace& EventLog::trace(std::string_view patient_id) const {
  if (const Trace* t = find(patient_id)) return *t;
  fail(ErrorKind::not_found, "unknown patient_id '" + std::string(patient_id) + "'");
}

// ---------------------------------------------------------------------------

std::uint32_t EventLogBuilder::intern(Interner& table, std::vector<std::string>& labels,
                                      std::string_view label) {
  if (auto it = table.find(label); it != table.end()) return it->second;
  const auto id = static_cast<std::uint32_t>(labels.size());
  labels.emplace_back(label);
  table.emplace(labels.back(), id);
  return id;
}

void EventLogBuilder::add(std::string_view patient_id, std::string_view activity,
                          std::string_view dbc, Timestamp timestamp) {
  patient_id = trim(patient_id);
  activity = trim(activity);
  dbc = trim(dbc);
  if (patient_id.empty()) fail(ErrorKind::input, "empty patient_id");
  if (activity.empty()) fail(ErrorKind::input, "empty activity");
  if (dbc.empty()) fail(ErrorKind::input, "empty dbc");

  const auto p = intern(patient_index_, patient_labels_, patient_id);
  if (p == events_.size()) events_.emplace_back();
  const auto a = intern(activity_index_, activity_labels_, activity);
  const auto d = intern(dbc_index_, dbc_labels_, dbc);
  events_[p].push_back(Event{ActivityId{a}, CodeId{d}, timestamp});
  ++rows_;
}

namespace {

// Sorts labels and returns the provisional-id -> sorted-id mapping.
std::vector<std::uint32_t> sort_labels(std::vector<std::string>& labels) {
  std::vector<std::uint32_t> order(labels.size());
  std::iota(order.begin(), order.end(), 0u);
  std::sort(order.begin(), order.end(),
            [&](std::uint32_t x, std::uint32_t y) { return labels[x] < labels[y]; });
  std::vector<std::uint32_t> remap(labels.size());
  std::vector<std::string> sorted;
  sorted.reserve(labels.size());
  for (std::uint32_t rank = 0; rank < order.size(); ++rank) {
    remap[order[rank]] = rank;
    sorted.push_back(std::move(labels[order[rank]]));
  }
  labels = std::move(sorted);
  return remap;
}

}  // namespace

EventLog EventLogBuilder::build() && {
  if (rows_ == 0) fail(ErrorKind::input, "event log is empty");
  activity_index_.clear();
  dbc_index_.clear();
  patient_index_.clear();

  const auto activity_remap = sort_labels(activity_labels_);
  const auto dbc_remap = sort_labels(dbc_labels_);

  std::vector<std::uint32_t> patient_order(patient_labels_.size());
  std::iota(patient_order.begin(), patient_order.end(), 0u);
  std::sort(patient_order.begin(), patient_order.end(), [&](std::uint32_t x, std::uint32_t y) {
    return patient_labels_[x] < patient_labels_[y];
  });

  EventLog log;
  log.traces_.reserve(patient_order.size());
  for (const std::uint32_t p : patient_order) {
    auto& events = events_[p];
    for (auto& e : events) {
      e.activity = ActivityId{activity_remap[index(e.activity)]};
      e.dbc = CodeId{dbc_remap[index(e.dbc)]};
    }
    std::stable_sort(events.begin(), events.end(),
                     [](const Event& x, const Event& y) { return x.timestamp < y.timestamp; });
    log.traces_.push_back(Trace{std::move(patient_labels_[p]), std::move(events)});
  }
  log.activities_ = Alphabet(std::move(activity_labels_));
  log.dbcs_ = Alphabet(std::move(dbc_labels_));
  events_.clear();
  rows_ = 0;
  return log;
}

// ---------------------------------------------------------------------------

EventLog load_log(std::istream& in) {
  csv::RecordReader reader(in);
  std::vector<std::string> fields;
  if (!reader.next(fields)) fail(ErrorKind::input, "event log is empty");
  if (!fields.empty() && fields[0].starts_with("\xEF\xBB\xBF")) fields[0].erase(0, 3);
  const bool header_ok = fields.size() == 4 && fields[0] == "patient_id" &&
                         fields[1] == "activity" && fields[2] == "dbc" &&
                         fields[3] == "timestamp";
  if (!header_ok) {
    fail(ErrorKind::input, "line 1: header must be exactly '" + std::string(kLogHeader) + "'");
  }

  EventLogBuilder builder;
  while (reader.next(fields)) {
    const auto where = "line " + std::to_string(reader.line()) + ": ";
    if (fields.size() == 1 && trim(fields[0]).empty()) continue;  // blank line
    if (fields.size() != 4) {
      fail(ErrorKind::input,
           where + "expected 4 fields, found " + std::to_string(fields.size()));
    }
    const auto ts = parse_timestamp(fields[3]);
    if (!ts) fail(ErrorKind::input, where + "unparseable timestamp '" + fields[3] + "'");
    try {
      builder.add(fields[0], fields[1], fields[2], *ts);
    } catch (const Error& e) {
      fail(e.kind(), where + e.what());
    }
  }
  if (builder.rows() == 0) fail(ErrorKind::input, "event log has a header but no rows");
  return std::move(builder).build();
}

EventLog load_log_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::input, "cannot open event log '" + path.string() + "'");
  std::vector<char> buffer(1 << 20);
  in.rdbuf()->pubsetbuf(buffer.data(), static_cast<std::streamsize>(buffer.size()));
  try {
    return load_log(in);
  } catch (const Error& e) {
    fail(e.kind(), path.string() + ": " + e.what());
  }
}

void write_log(std::ostream& out, const EventLog& log) {
  out << kLogHeader << '\n';
  for (const auto& trace : log.traces()) {
    for (const auto& e : trace.events) {
      csv::write_field(out, trace.patient_id);
      out << ',';
      csv::write_field(out, log.label(e.activity));
      out << ',';
      csv::write_field(out, log.label(e.dbc));
      out << ',' << format_timestamp(e.timestamp) << '\n';
    }
  }
}

// ---------------------------------------------------------------------------

bool PatientProjection::has_activity(ActivityId a) const {
  return std::binary_search(activities.begin(), activities.end(), a);
}

bool PatientProjection::has_dbc(CodeId d) const {
  return std::binary_search(dbcs.begin(), dbcs.end(), d);
}

PatientProjection project(const Trace& trace) {
  PatientProjection p;
  p.patient_id = trace.patient_id;
  p.activities.reserve(trace.events.size());
  p.dbcs.reserve(trace.events.size());
  p.cooccurrence.reserve(trace.events.size());
  for (const auto& e : trace.events) {
    p.activities.push_back(e.activity);
    p.dbcs.push_back(e.dbc);
    p.cooccurrence.emplace_back(e.activity, e.dbc);
  }
  auto dedupe = [](auto& v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    v.shrink_to_fit();
  };
  dedupe(p.activities);
  dedupe(p.dbcs);
  dedupe(p.cooccurrence);
  return p;
}

PatientProjection project(const EventLog& log, std::string_view patient_id) {
  return project(log.trace(patient_id));
}

std::vector<PatientProjection> project_all(const EventLog& log) {
  std::vector<PatientProjection> out;
  out.reserve(log.patient_count());
  for (const auto& t : log.traces()) out.push_back(project(t));
  return out;
}

std::vector<PatientProjection> project_some(const EventLog& log,
                                            std::span<const std::string> patient_ids) {
  std::vector<PatientProjection> out;
  out.reserve(patient_ids.size());
  for (const auto& id : patient_ids) out.push_back(project(log, id));
  return out;
}

// ---------------------------------------------------------------------------

Manifest load_manifest(std::istream& in) {
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::input, std::string("manifest is not valid JSON: ") + e.what());
  }
  if (!j.is_object() || !j.contains("members") || !j["members"].is_array()) {
    fail(ErrorKind::input, "manifest must be an object with a 'members' array");
  }
  Manifest m;
  if (j.contains("group_name")) {
    if (!j["group_name"].is_string()) fail(ErrorKind::input, "manifest 'group_name' must be a string");
    m.group_name = j["group_name"].get<std::string>();
  }
  for (const auto& member : j["members"]) {
    if (!member.is_string()) fail(ErrorKind::input, "manifest members must be strings");
    m.members.emplace_back(trim(member.get<std::string>()));
  }
  std::sort(m.members.begin(), m.members.end());
  m.members.erase(std::unique(m.members.begin(), m.members.end()), m.members.end());
  return m;
}

Manifest load_manifest_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::input, "cannot open manifest '" + path.string() + "'");
  try {
    return load_manifest(in);
  } catch (const Error& e) {
    fail(e.kind(), path.string() + ": " + e.what());
  }
}

void write_manifest(std::ostream& out, const Manifest& manifest) {
  nlohmann::ordered_json j;
  j["group_name"] = manifest.group_name;
  j["members"] = manifest.members;
  out << j.dump(2) << '\n';
}

}  // namespace cohort
