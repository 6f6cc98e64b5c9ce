#include <fstream>
#include <stdexcept>
#include <system_error>

#include "mixstat/harness/experiments.hpp"

namespace mixstat::harness {
namespace {

void write_file(const std::filesystem::path& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << contents;
  out.flush();
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

}  // namespace

void emit_outputs(const ExperimentConfig& config, const ExperimentResult& result, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create " + dir.string() + ": " + ec.message());
  write_file(dir / "config.json", config.raw.dump(2) + "\n");
  nlohmann::json doc;
  doc["experiment"] = to_string(result.kind);
  doc["result"] = result.result;
  doc["failures"] = result.failures;
  doc["metadata"] = result.metadata;
  write_file(dir / "result.json", doc.dump(2) + "\n");
  for (const auto& [name, contents] : result.files) write_file(dir / name, contents);
}

}  // namespace mixstat::harness
