#pragma once

#include <filesystem>
#include <iosfwd>

#include "mixstat/processes.hpp"

namespace mixstat {

// CSV layout: header `t,x1,...,xd`, one row per time index (t = 1..T),
// values printed with 17 significant digits.
void write_path_csv(std::ostream& out, const SeriesPath& path);
void write_path_csv(const std::filesystem::path& file, const SeriesPath& path);
SeriesPath read_path_csv(std::istream& in);
SeriesPath read_path_csv(const std::filesystem::path& file);

}  // namespace mixstat
