#pragma once

#include <cstdio>
#include <ostream>
#include <string>

namespace swarmdef {

/// 17 significant digits: parses back to the identical double.
inline std::string fmt_real(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline void write_real(std::ostream& out, double v) { out << fmt_real(v); }

/// Quotes a text cell when it contains a delimiter, quote or newline.
inline std::string csv_text(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace swarmdef
