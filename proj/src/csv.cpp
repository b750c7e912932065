#include "pfsmooth/csv.hpp"

#include <charconv>
#include <cmath>

namespace pfsmooth {

std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, ptr);
}

CsvWriter& CsvWriter::field(std::string_view text) {
  if (!first_) out_->put(',');
  first_ = false;
  if (text.find_first_of(",\"\n") == std::string_view::npos) {
    out_->write(text.data(), static_cast<std::streamsize>(text.size()));
    return *this;
  }
  out_->put('"');
  for (char c : text) {
    if (c == '"') out_->put('"');
    out_->put(c);
  }
  out_->put('"');
  return *this;
}

CsvWriter& CsvWriter::row(std::initializer_list<std::string_view> fields) {
  for (auto f : fields) field(f);
  end_row();
  return *this;
}

void CsvWriter::end_row() {
  out_->put('\n');
  first_ = true;
}

}  // namespace pfsmooth
