#include "cohort/csv.hpp"

#include <string>

#include "cohort/error.hpp"

namespace cohort::csv {

std::optional<std::vector<std::string>> split_record(std::string_view record) {
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  bool field_was_quoted = false;
  for (std::size_t i = 0; i < record.size(); ++i) {
    const char c = record[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < record.size() && record[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field.push_back(c);
      }
      continue;
    }
    if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
      field_was_quoted = false;
    } else if (c == '"' && field.empty() && !field_was_quoted) {
      quoted = true;
      field_was_quoted = true;
    } else {
      field.push_back(c);
    }
  }
  if (quoted) return std::nullopt;
  fields.push_back(std::move(field));
  return fields;
}

bool RecordReader::next(std::vector<std::string>& fields) {
  std::string line;
  if (!std::getline(in_, line)) return false;
  ++line_;
  record_line_ = line_;
  if (!line.empty() && line.back() == '\r') line.pop_back();

  // Fast path: no quotes at all.
  if (line.find('"') == std::string::npos) {
    fields.clear();
    std::size_t start = 0;
    for (;;) {
      const std::size_t comma = line.find(',', start);
      if (comma == std::string::npos) {
        fields.emplace_back(line, start);
        break;
      }
      fields.emplace_back(line, start, comma - start);
      start = comma + 1;
    }
    return true;
  }

  buffer_ = std::move(line);
  for (;;) {
    if (auto split = split_record(buffer_)) {
      fields = std::move(*split);
      return true;
    }
    std::string more;
    if (!std::getline(in_, more)) {
      fail(ErrorKind::input,
           "line " + std::to_string(record_line_) + ": unterminated quoted field");
    }
    ++line_;
    if (!more.empty() && more.back() == '\r') more.pop_back();
    buffer_.push_back('\n');
    buffer_ += more;
  }
}

void write_field(std::ostream& out, std::string_view field) {
  if (field.find_first_of(",\"\r\n") == std::string_view::npos) {
    out << field;
    return;
  }
  out << '"';
  for (char c : field) {
    if (c == '"') out << '"';
    out << c;
  }
  out << '"';
}

}  // namespace cohort::csv
