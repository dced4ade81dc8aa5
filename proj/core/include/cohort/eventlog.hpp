#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace cohort {

/// Index into EventLog::activities(). Ids follow lexicographic label order,
/// so comparing ids compares labels.
enum class ActivityId : std::uint32_t {};
/// Index into EventLog::dbcs(), same ordering guarantee as ActivityId.
enum class CodeId : std::uint32_t {};

constexpr std::uint32_t index(ActivityId id) noexcept { return static_cast<std::uint32_t>(id); }
constexpr std::uint32_t index(CodeId id) noexcept { return static_cast<std::uint32_t>(id); }

/// Milliseconds since 1970-01-01T00:00:00Z.
using Timestamp = std::int64_t;

/// Accepts YYYY-MM-DD with optional THH:MM[:SS[.fff]] (space also allowed as
/// separator) and an optional Z or +HH:MM / -HH:MM suffix.
std::optional<Timestamp> parse_timestamp(std::string_view text);
/// UTC, YYYY-MM-DDTHH:MM:SS with a .fff suffix only when milliseconds are set.
std::string format_timestamp(Timestamp ts);

struct Event {
  ActivityId activity;
  CodeId dbc;
  Timestamp timestamp;
};

struct Trace {
  std::string patient_id;
  std::vector<Event> events;  // non-decreasing timestamp, ties in input order
};

/// Sorted, duplicate-free label set.
class Alphabet {
 public:
  Alphabet() = default;
  explicit Alphabet(std::vector<std::string> sorted_labels);

  std::size_t size() const noexcept { return labels_.size(); }
  bool empty() const noexcept { return labels_.empty(); }
  const std::string& label(std::uint32_t id) const { return labels_.at(id); }
  std::optional<std::uint32_t> find(std::string_view label) const;
  const std::vector<std::string>& labels() const noexcept { return labels_; }

 private:
  std::vector<std::string> labels_;
};

class EventLog {
 public:
  const std::vector<Trace>& traces() const noexcept { return traces_; }
  const Alphabet& activities() const noexcept { return activities_; }
  const Alphabet& dbcs() const noexcept { return dbcs_; }

  std::size_t patient_count() const noexcept { return traces_.size(); }
  std::size_t event_count() const noexcept;
  std::vector<std::string> patient_ids() const;

  const std::string& label(ActivityId id) const { return activities_.label(index(id)); }
  const std::string& label(CodeId id) const { return dbcs_.label(index(id)); }
  std::optional<ActivityId> activity_id(std::string_view label) const;
  std::optional<CodeId> dbc_id(std::string_view label) const;

  const Trace* find(std::string_view patient_id) const;
  /// Throws Error(not_found) for unknown ids.
  const Trace& trace(std::string_view patient_id) const;

 private:
  friend class EventLogBuilder;
  std::vector<Trace> traces_;  // sorted by patient_id
  Alphabet activities_;
  Alphabet dbcs_;
};

/// Accumulates raw rows, then interns labels in sorted order and groups rows
/// into timestamp-ordered traces.
class EventLogBuilder {
 public:
  /// Labels are trimmed; empty labels throw Error(input).
  void add(std::string_view patient_id, std::string_view activity, std::string_view dbc,
           Timestamp timestamp);
  std::size_t rows() const noexcept { return rows_; }
  /// Throws Error(input) when no rows were added.
  EventLog build() &&;

 private:
  struct Hash {
    using is_transparent = void;
    std::size_t operator()(std::string_view s) const noexcept {
      return std::hash<std::string_view>{}(s);
    }
  };
  using Interner = std::unordered_map<std::string, std::uint32_t, Hash, std::equal_to<>>;

  static std::uint32_t intern(Interner& table, std::vector<std::string>& labels,
                              std::string_view label);

  Interner activity_index_, dbc_index_, patient_index_;
  std::vector<std::string> activity_labels_, dbc_labels_, patient_labels_;
  std::vector<std::vector<Event>> events_;  // per patient, provisional ids
  std::size_t rows_ = 0;
};

inline constexpr std::string_view kLogHeader = "patient_id,activity,dbc,timestamp";

/// Reads the four-column CSV format. Errors carry the offending line number.
EventLog load_log(std::istream& in);
EventLog load_log_file(const std::filesystem::path& path);
void write_log(std::ostream& out, const EventLog& log);

/// Distinct activities (A_p), codes (D_p), and (activity, code) pairs seen
/// together on one event. All three vectors are sorted and duplicate-free.
struct PatientProjection {
  std::string patient_id;
  std::vector<ActivityId> activities;
  std::vector<CodeId> dbcs;
  std::vector<std::pair<ActivityId, CodeId>> cooccurrence;

  bool has_activity(ActivityId a) const;
  bool has_dbc(CodeId d) const;
};

PatientProjection project(const Trace& trace);
/// Throws Error(not_found) for unknown ids.
PatientProjection project(const EventLog& log, std::string_view patient_id);
/// One projection per patient, sorted by patient_id.
std::vector<PatientProjection> project_all(const EventLog& log);
/// Projections for the given ids, in the order given.
std::vector<PatientProjection> project_some(const EventLog& log,
                                            std::span<const std::string> patient_ids);

/// Ground-truth membership file: {"group_name": ..., "members": [...]}.
struct Manifest {
  std::string group_name;
  std::vector<std::string> members;  // sorted, unique
};

Manifest load_manifest(std::istream& in);
Manifest load_manifest_file(const std::filesystem::path& path);
void write_manifest(std::ostream& out, const Manifest& manifest);

}  // namespace cohort
