#pragma once

#include <algorithm>
#include <cstdint>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "cohort/csv.hpp"
#include "cohort/eventlog.hpp"
#include "cohort/mining.hpp"

namespace cohort::testing {

struct Row {
  std::string patient;
  std::string activity;
  std::string dbc;
  std::string timestamp = "2017-01-01T00:00:00";
};

inline std::string to_csv(const std::vector<Row>& rows) {
  std::ostringstream out;
  out << kLogHeader << '\n';
  for (const auto& r : rows) csv::write_row(out, r.patient, r.activity, r.dbc, r.timestamp);
  return out.str();
}

inline EventLog log_from_rows(const std::vector<Row>& rows) {
  std::istringstream in(to_csv(rows));
  return load_log(in);
}

inline EventLog log_from_csv(const std::string& text) {
  std::istringstream in(text);
  return load_log(in);
}

/// The five-row snippet of the canonical example log (dates made concrete).
inline std::vector<Row> table1_rows() {
  return {
      {"Patient1", "Action1", "DBC1", "2017-01-01T00:00:00"},
      {"Patient2", "Action2", "DBC2", "2017-01-01T00:00:00"},
      {"Patient3", "Action1", "DBC1", "2017-01-03T00:00:00"},
      {"Patient1", "Action1", "DBC1", "2017-01-02T00:00:00"},
      {"Patient2", "Action5", "DBC5", "2017-01-02T00:00:00"},
  };
}

/// Ten patients over activities a-d and codes x-z, with events written as
/// "activity:code". Positives: p01 p02 p03 p04 p05 p06 p10; mining sample
/// p01 p02 p03 p06 p10; holdout p04 p05.
inline std::vector<Row> ten_patient_rows() {
  const std::vector<std::pair<std::string, std::vector<std::string>>> patients{
      {"p01", {"a:x", "b:x", "c:y"}},
      {"p02", {"a:x", "b:y"}},
      {"p03", {"a:x", "b:x", "c:x", "d:z"}},
      {"p04", {"a:y", "c:y"}},
      {"p05", {"b:x", "c:x"}},
      {"p06", {"a:x", "b:x", "c:z"}},
      {"p07", {"d:z"}},
      {"p08", {"a:z", "b:z", "d:y"}},
      {"p09", {"c:y", "d:y"}},
      {"p10", {"a:x", "b:x", "c:x"}},
  };
  std::vector<Row> rows;
  int minute = 0;
  for (const auto& [id, events] : patients) {
    for (const auto& e : events) {
      const auto colon = e.find(':');
      char ts[32];
      std::snprintf(ts, sizeof ts, "2017-03-01T10:%02d:00", minute++ % 60);
      rows.push_back(Row{id, e.substr(0, colon), e.substr(colon + 1), ts});
    }
  }
  return rows;
}

/// Log whose patients carry exactly the given activity sets ("a b c"), each
/// event tagged with code "x". Patient ids are s01, s02, ...
inline EventLog log_from_sets(const std::vector<std::string>& sets) {
  std::vector<Row> rows;
  for (std::size_t i = 0; i < sets.size(); ++i) {
    char id[16];
    std::snprintf(id, sizeof id, "s%02zu", i + 1);
    std::istringstream words(sets[i]);
    std::string a;
    while (words >> a) rows.push_back(Row{id, a, "x"});
  }
  return log_from_rows(rows);
}

inline Itemset ids(const EventLog& log, const std::vector<std::string>& labels) {
  Itemset out;
  for (const auto& l : labels) {
    if (auto id = log.activity_id(l)) out.push_back(*id);
  }
  std::sort(out.begin(), out.end());
  return out;
}

inline std::vector<CodeId> code_ids(const EventLog& log, const std::vector<std::string>& labels) {
  std::vector<CodeId> out;
  for (const auto& l : labels) {
    if (auto id = log.dbc_id(l)) out.push_back(*id);
  }
  std::sort(out.begin(), out.end());
  return out;
}

template <typename Id>
std::vector<std::string> names(const EventLog& log, const std::vector<Id>& items) {
  std::vector<std::string> out;
  for (Id i : items) out.push_back(log.label(i));
  return out;
}

/// Random activity-set rows: 1..max_patients patients over 1..max_items
/// activities "i0".."i7", codes "c0".."c2"; every patient gets at least one event.
inline std::vector<Row> random_rows(std::mt19937_64& rng, std::size_t max_patients,
                                    std::size_t max_items, double density = 0.5) {
  std::uniform_int_distribution<std::size_t> patients(1, max_patients);
  std::uniform_int_distribution<std::size_t> items(1, max_items);
  std::uniform_int_distribution<int> code(0, 2);
  std::bernoulli_distribution include(density);
  const std::size_t n = patients(rng);
  const std::size_t m = items(rng);
  std::uniform_int_distribution<std::size_t> any_item(0, m - 1);
  std::vector<Row> rows;
  for (std::size_t p = 0; p < n; ++p) {
    const std::string id = (p < 10 ? "r0" : "r") + std::to_string(p);
    bool any = false;
    for (std::size_t i = 0; i < m; ++i) {
      if (include(rng)) {
        rows.push_back(Row{id, "i" + std::to_string(i), "c" + std::to_string(code(rng))});
        any = true;
      }
    }
    if (!any) {
      rows.push_back(Row{id, "i" + std::to_string(any_item(rng)), "c" + std::to_string(code(rng))});
    }
  }
  return rows;
}

}  // namespace cohort::testing
