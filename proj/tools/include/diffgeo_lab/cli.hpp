#pragma once

// diffgeo-lab: every analysis as a subcommand over a JSON scenario.
//
//   diffgeo-lab <subcommand> --scenario file.json --out dir/ [--jobs N]
//   diffgeo-lab <subcommand> [--scenario file.json] --print-config
//
// Exit codes: 0 success, 2 analysis ran but the property does not hold,
// 1 runtime failure, 64 usage error, 65 invalid scenario.

#include <filesystem>
#include <functional>
#include <ostream>
#include <string>
#include <vector>

#include "diffgeo_lab/scenario.hpp"

namespace diffgeo::lab {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitNegative = 2;
inline constexpr int kExitUsage = 64;
inline constexpr int kExitScenario = 65;

struct Context {
  /// Normalized scenario.
  json scenario;
  std::filesystem::path out;
  unsigned jobs{1};
  std::ostream *log{nullptr};

  const json &analysis() const { return scenario.at("analysis"); }
  /// Writes `text` verbatim (LF line endings) to out/name.
  void write(const std::string &name, const std::string &text) const;
  void write_json(const std::string &name, const json &j) const;
};

struct Command {
  std::string name;
  std::string summary;
  std::vector<Field> fields;
  /// Returns kExitOk or kExitNegative.
  std::function<int(const Context &)> run;
};

const std::vector<Command> &commands();

/// args excludes the program name.
int run(const std::vector<std::string> &args, std::ostream &out, std::ostream &err);

}  // namespace diffgeo::lab
