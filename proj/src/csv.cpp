#include "dialogic/csv.hpp"

#include <cmath>

#include <fmt/format.h>

#include "dialogic/error.hpp"

namespace dialogic::csv {

std::string escape(std::string_view field) {
  if (field.find_first_of(",\"\r\n") == std::string_view::npos) {
    return std::string(field);
  }
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

Writer::Writer(std::vector<std::string> header) : width_(header.size()) {
  row(header);
}

void Writer::row(const std::vector<std::string>& fields) {
  if (fields.size() != width_) {
    throw Error(ErrorCode::InvalidArgument,
                fmt::format("CSV row has {} fields, header has {}",
                            fields.size(), width_));
  }
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out_.push_back(',');
    out_ += escape(fields[i]);
  }
  out_ += "\r\n";
}

std::string real(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  if (x == 0.0) return "0";  // folds -0
  return fmt::format("{:.10g}", x);
}

std::string real(std::optional<double> x) { return x ? real(*x) : ""; }

}  // namespace dialogic::csv
