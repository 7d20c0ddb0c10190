#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>

#include "whynot/error.hpp"
#include "whynot/scenario.hpp"

int main(int argc, char** argv) {
  using namespace whynot;

  CLI::App app{"Why-not explanations for nested relational queries"};
  app.require_subcommand(1);

  std::string scenario_file;
  std::optional<std::string> dump_dir;
  RunOptions options;
  bool pretty = false;

  for (const char* mode : {"run", "explain", "oracle", "compare"}) {
    auto* sub = app.add_subcommand(mode);
    sub->add_option("--scenario", scenario_file, "Scenario JSON file")->required();
    sub->add_option("--dump-trace", dump_dir, "Write per-operator annotated relations to DIR");
    sub->add_option("--max-sas", options.max_sas, "Maximum number of schema alternatives");
    sub->add_option("--oracle-budget", options.oracle_budget, "Parameter settings the oracle may visit");
    auto* json = sub->add_flag("--json", "Compact JSON output (default)");
    sub->add_flag("--pretty", pretty, "Indented JSON output")->excludes(json);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (dump_dir) options.dump_trace = *dump_dir;
    const Mode mode = mode_from_string(app.get_subcommands().front()->get_name());
    const Scenario scenario = load_scenario(scenario_file);
    const Report report = run_scenario(scenario, mode, options);
    std::cout << report.json.dump(pretty ? 2 : -1) << "\n";
    return report.exit_code;
  } catch (const Error& e) {
    std::cerr << "error: " << e.qualified() << "\n";
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  }
}
