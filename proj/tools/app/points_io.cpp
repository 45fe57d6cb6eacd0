#include "app/points_io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace conicfit::io {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

bool parse_number(std::string_view s, double& out) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  if (s.empty()) return false;
  const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && end == s.data() + s.size();
}

[[noreturn]] void bad_row(std::string_view source, std::size_t line, const std::string& why) {
  std::ostringstream msg;
  msg << source << ":" << line << ": " << why;
  fail_input(msg.str());
}

}  // namespace

std::vector<Point2> parse_points(std::istream& in, std::string_view source) {
  std::vector<Point2> points;
  std::string text;
  std::size_t line = 0;
  bool first_row = true;
  while (std::getline(in, text)) {
    ++line;
    const std::string_view row = trim(text);
    if (row.empty()) continue;
    const auto comma = row.find(',');
    const bool two_fields = comma != std::string_view::npos && row.find(',', comma + 1) == std::string_view::npos;
    double x = 0, y = 0;
    const bool ok_x = two_fields && parse_number(row.substr(0, comma), x);
    const bool ok_y = two_fields && parse_number(row.substr(comma + 1), y);
    if (first_row && !ok_x && !ok_y) {  // header
      first_row = false;
      continue;
    }
    first_row = false;
    if (!two_fields) bad_row(source, line, "expected two comma-separated fields in \"" + std::string(row) + "\"");
    if (!ok_x || !ok_y)
      bad_row(source, line, "not a number in row \"" + std::string(row) + "\"");
    if (!std::isfinite(x) || !std::isfinite(y))
      bad_row(source, line, "non-finite coordinate in row \"" + std::string(row) + "\"");
    points.emplace_back(x, y);
  }
  if (in.bad()) fail_input(std::string(source) + ": read error");
  return points;
}

std::vector<Point2> read_points(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail_input("cannot open " + path.string());
  return parse_points(in, path.string());
}

std::string format_double(double v) {
  char buf[32];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ec == std::errc() ? end : buf);
}

void write_points(std::ostream& out, std::span<const Point2> points, bool header) {
  if (header) out << "x,y\n";
  for (const Point2& p : points) out << format_double(p.x()) << ',' << format_double(p.y()) << '\n';
}

std::string csv_escape(std::string_view field) {
  if (field.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

}  // namespace conicfit::io
