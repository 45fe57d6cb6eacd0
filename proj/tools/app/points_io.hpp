#pragma once

#include "conicfit/conic_geometry.hpp"

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace conicfit::io {

/// Two comma-separated decimals per row; blank lines are skipped and the first
/// row may be a header. Errors name the source and the 1-based line.
std::vector<Point2> parse_points(std::istream& in, std::string_view source = "<input>");
std::vector<Point2> read_points(const std::filesystem::path& path);

/// Shortest text that reads back to the same double (at most 17 digits).
std::string format_double(double v);

void write_points(std::ostream& out, std::span<const Point2> points, bool header = true);

/// Quotes a CSV field when it contains a comma, quote or line break.
std::string csv_escape(std::string_view field);

}  // namespace conicfit::io
