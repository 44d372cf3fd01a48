#pragma once

// Access to the artifacts produced by the ctest fixture steps: a default-size
// model trained by `antipure train` and a full `antipure run-pc` report.
// The directory comes from ANTIPURE_FIXTURE.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "antipure/checkpoint.hpp"

namespace testing {

inline std::filesystem::path fixture_dir() {
  const char* env = std::getenv("ANTIPURE_FIXTURE");
  if (env == nullptr || *env == '\0') throw std::runtime_error("ANTIPURE_FIXTURE is not set");
  return env;
}

inline const antipure::Checkpoint& trained() {
  static const antipure::Checkpoint ck = antipure::load_checkpoint(fixture_dir() / "train" / "model.ckpt");
  return ck;
}

inline const antipure::NoiseSchedule& trained_schedule() {
  static const antipure::NoiseSchedule s = antipure::make_schedule(trained().schedule);
  return s;
}

// summary.csv keyed by (arm, checkpoint); values by column name.
using SummaryRow = std::map<std::string, std::string>;

inline std::map<std::pair<std::string, int>, SummaryRow> read_summary(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  auto split = [](const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) out.push_back(cell);
    return out;
  };
  std::string line;
  std::getline(in, line);
  const std::vector<std::string> header = split(line);
  std::map<std::pair<std::string, int>, SummaryRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const std::vector<std::string> cells = split(line);
    SummaryRow r;
    for (std::size_t i = 0; i < header.size() && i < cells.size(); ++i) r[header[i]] = cells[i];
    rows[{r.at("arm"), std::stoi(r.at("checkpoint"))}] = r;
  }
  return rows;
}

inline const std::map<std::pair<std::string, int>, SummaryRow>& pc_summary() {
  static const auto rows = read_summary(fixture_dir() / "pc" / "summary.csv");
  return rows;
}

inline double pc_value(const std::string& arm, int checkpoint, const std::string& column) {
  return std::stod(pc_summary().at({arm, checkpoint}).at(column));
}

}  // namespace testing
