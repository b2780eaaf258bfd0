#include "diffgeo_lab/cli.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "CLI11.hpp"
#include "diffgeo/error.hpp"
#include "diffgeo/parallel.hpp"

namespace diffgeo::lab {

namespace {

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidArgument:
    case ErrorKind::InvalidCone: return kExitScenario;
    case ErrorKind::NoCycle:
    case ErrorKind::NoSignChange:
    case ErrorKind::Inconclusive:
    case ErrorKind::LeftRegion: return kExitNegative;
    default: return kExitFailure;
  }
}

std::string read_file(const std::string &path) {
  std::ifstream f(path, std::ios::binary);
  std::ostringstream os;
  os << f.rdbuf();
  return os.str();
}

}  // namespace

int run(const std::vector<std::string> &args, std::ostream &out, std::ostream &err) {
  CLI::App app{"Differential analysis of the damped, driven pendulum", "diffgeo-lab"};
  app.require_subcommand(1);
  std::string scenario_path;
  std::string out_dir;
  unsigned jobs = 0;
  bool print_config = false;
  for (const Command &c : commands()) {
    CLI::App *sub = app.add_subcommand(c.name, c.summary);
    sub->add_option("--scenario", scenario_path, "JSON scenario file")->check(CLI::ExistingFile);
    sub->add_option("--out", out_dir, "output directory (created if missing)");
    sub->add_option("--jobs", jobs, "worker threads for grid scans (default: DIFFGEO_LAB_JOBS or 1)")
        ->check(CLI::PositiveNumber);
    sub->add_flag("--print-config", print_config, "print the fully defaulted scenario and exit");
  }

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp &e) {
    app.exit(e, out, err);
    return kExitOk;
  } catch (const CLI::CallForAllHelp &e) {
    app.exit(e, out, err);
    return kExitOk;
  } catch (const CLI::ParseError &e) {
    app.exit(e, out, err);
    return kExitUsage;
  }

  const std::string name = app.get_subcommands().front()->get_name();
  const Command &cmd = *std::find_if(commands().begin(), commands().end(),
                                     [&](const Command &c) { return c.name == name; });
  if (!print_config && (scenario_path.empty() || out_dir.empty())) {
    err << name << ": --scenario and --out are required\n";
    return kExitUsage;
  }

  Context ctx;
  try {
    const json raw = scenario_path.empty() ? json::object() : parse_strict(read_file(scenario_path));
    ctx.scenario = normalize_scenario(raw, cmd.fields);
  } catch (const ScenarioError &e) {
    err << name << ": invalid scenario: " << e.what() << "\n";
    return kExitScenario;
  }
  if (print_config) {
    out << ctx.scenario.dump(2) << "\n";
    return kExitOk;
  }

  ctx.out = out_dir;
  ctx.jobs = resolve_jobs(jobs);
  ctx.log = &out;
  try {
    std::filesystem::create_directories(ctx.out);
    return cmd.run(ctx);
  } catch (const ScenarioError &e) {
    err << name << ": invalid scenario: " << e.what() << "\n";
    return kExitScenario;
  } catch (const Error &e) {
    const int code = exit_code_for(e.kind());
    err << name << ": " << (code == kExitScenario ? "invalid scenario: " : "") << e.what() << "\n";
    return code;
  } catch (const std::exception &e) {
    err << name << ": " << e.what() << "\n";
    return kExitFailure;
  }
}

}  // namespace diffgeo::lab
