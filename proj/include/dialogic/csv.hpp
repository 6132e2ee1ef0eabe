#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace dialogic::csv {

// RFC-4180: CRLF record separator, fields quoted when they contain a
// comma, quote, CR or LF; embedded quotes doubled.
std::string escape(std::string_view field);

class Writer {
 public:
  explicit Writer(std::vector<std::string> header);

  void row(const std::vector<std::string>& fields);
  const std::string& str() const { return out_; }

 private:
  std::size_t width_;
  std::string out_;
};

// Fixed, locale-independent number formats used by every report so that
// golden files stay byte-stable.
std::string real(double x);
std::string real(std::optional<double> x);  // empty field when null

}  // namespace dialogic::csv
