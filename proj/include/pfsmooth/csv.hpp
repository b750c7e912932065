#pragma once

#include <initializer_list>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>

namespace pfsmooth {

/// Shortest decimal representation that round-trips to the same double.
std::string format_double(double value);

/// Minimal CSV emitter: comma separated, '\n' line endings, fields quoted
/// only when they contain a comma, quote or newline.
class CsvWriter {
 public:
  explicit CsvWriter(std::ostream& out) : out_(&out) {}

  CsvWriter& field(std::string_view text);
  CsvWriter& field(double value) { return field(format_double(value)); }
  CsvWriter& field(std::optional<double> value) {
    return value ? field(*value) : field(std::string_view{});
  }
  CsvWriter& field(std::size_t value) { return field(std::string_view(std::to_string(value))); }
  CsvWriter& row(std::initializer_list<std::string_view> fields);
  void end_row();

 private:
  std::ostream* out_;
  bool first_ = true;
};

}  // namespace pfsmooth
