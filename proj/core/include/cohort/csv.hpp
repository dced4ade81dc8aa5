#pragma once

#include <cstddef>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace cohort::csv {

/// Reads RFC-4180 records one at a time. Quoted fields may contain commas,
/// doubled quotes, and line breaks; a trailing CR before LF is dropped.
class RecordReader {
 public:
  explicit RecordReader(std::istream& in) : in_(in) {}

  /// Fills `fields` with the next record. Returns false at end of input.
  /// Throws cohort::Error(input) on an unterminated quote.
  bool next(std::vector<std::string>& fields);

  /// Line number (1-based) on which the most recently returned record started.
  std::size_t line() const noexcept { return record_line_; }

 private:
  std::istream& in_;
  std::string buffer_;
  std::size_t line_ = 0;
  std::size_t record_line_ = 0;
};

/// Splits one complete record (no trailing newline). Returns std::nullopt when
/// a quoted field is left open, which means the record continues on the next line.
std::optional<std::vector<std::string>> split_record(std::string_view record);

void write_field(std::ostream& out, std::string_view field);

template <typename... Fields>
void write_row(std::ostream& out, const Fields&... fields) {
  bool first = true;
  ((out << (first ? "" : ","), write_field(out, fields), first = false), ...);
  out << '\n';
}

}  // namespace cohort::csv
