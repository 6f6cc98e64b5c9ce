#include "mixstat/series_io.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>
#include <string>

namespace mixstat {
namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_double(const std::string& s, std::size_t line_no) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw std::invalid_argument("line " + std::to_string(line_no) + ": not a number: '" + s + "'");
  }
}

}  // namespace

void write_path_csv(std::ostream& out, const SeriesPath& path) {
  out << 't';
  for (std::size_t c = 0; c < path.dim; ++c) out << ",x" << (c + 1);
  out << '\n';
  out << std::setprecision(17);
  for (std::size_t t = 0; t < path.length; ++t) {
    out << (t + 1);
    for (std::size_t c = 0; c < path.dim; ++c) out << ',' << path.at(t, c);
    out << '\n';
  }
}

void write_path_csv(const std::filesystem::path& file, const SeriesPath& path) {
  std::ofstream out(file);
  if (!out) throw std::runtime_error("cannot write " + file.string());
  write_path_csv(out, path);
  if (!out) throw std::runtime_error("write failed: " + file.string());
}

SeriesPath read_path_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument("empty CSV");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split_csv(line);
  if (header.size() < 2 || header[0] != "t") throw std::invalid_argument("CSV header must be t,x1,...,xd");
  for (std::size_t c = 1; c < header.size(); ++c)
    if (header[c] != "x" + std::to_string(c)) throw std::invalid_argument("unexpected CSV column: " + header[c]);
  SeriesPath out;
  out.dim = header.size() - 1;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = split_csv(line);
    if (cells.size() != header.size())
      throw std::invalid_argument("line " + std::to_string(line_no) + ": expected " +
                                  std::to_string(header.size()) + " fields");
    const double t = parse_double(cells[0], line_no);
    if (t != static_cast<double>(out.length + 1))
      throw std::invalid_argument("line " + std::to_string(line_no) + ": time index out of sequence");
    for (std::size_t c = 1; c < cells.size(); ++c) out.values.push_back(parse_double(cells[c], line_no));
    ++out.length;
  }
  return out;
}

SeriesPath read_path_csv(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw std::runtime_error("cannot open " + file.string());
  return read_path_csv(in);
}

}  // namespace mixstat
