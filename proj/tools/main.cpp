#include <cstdio>
#include <exception>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "torvac/experiments.hpp"

namespace {

constexpr int kExitConfig = 2;

void print_summary(const torvac::CommandResult& r) {
  std::cout << r.table.to_csv();
  std::cerr << "summary: " << r.summary.dump() << "\n";
  for (const auto& f : r.failures) std::cerr << "FAIL " << f << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Vacant set of random walk on the discrete torus: experiments and checks"};
  app.require_subcommand(0, 1);
  bool print_schema = false;
  app.add_flag("--print-schema", print_schema, "Print the configuration schema as JSON and exit");

  std::string config_path, out_dir;
  std::uint64_t seed = 0;
  int jobs = 0;
  for (const auto& name : torvac::command_names()) {
    CLI::App* sub = app.add_subcommand(name, "Run the " + name + " command");
    sub->add_option("--config", config_path, "JSON config file (defaults for omitted keys)");
    sub->add_option("--out", out_dir, "Output directory for CSV, NDJSON and metadata");
    sub->add_option("--jobs", jobs, "Worker threads (0: runtime default)")->check(CLI::NonNegativeNumber);
    sub->add_option("--seed", seed, "Master seed");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  if (print_schema) {
    std::cout << torvac::config_schema().dump(2) << "\n";
    return 0;
  }
  const auto subs = app.get_subcommands();
  if (subs.empty()) {
    std::cerr << app.help();
    return kExitConfig;
  }
  CLI::App* sub = subs.front();

  try {
    torvac::ConfigOverrides ov;
    if (sub->count("--seed")) ov.seed = seed;
    if (sub->count("--jobs")) ov.jobs = jobs;
    if (sub->count("--out")) ov.out_dir = out_dir;
    const nlohmann::json doc = config_path.empty() ? nlohmann::json::object() : torvac::read_config_file(config_path);
    const torvac::ExperimentConfig cfg = torvac::make_config(sub->get_name(), doc, ov);
    const torvac::CommandResult result = torvac::run_command(cfg);
    torvac::write_outputs(cfg, result);
    print_summary(result);
    return result.exit_code();
  } catch (const torvac::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const torvac::GeometryError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const torvac::FormatError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
