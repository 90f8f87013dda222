// ncqm: command-line runner for the noncommutative QM experiments.

#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include <ncqm/cli.hpp>

int main(int argc, char** argv) {
  using ncqm::cli::json;
  CLI::App app{"Noncommutative quantum mechanics experiments"};
  app.fallthrough();
  app.require_subcommand(1);

  std::string config_path, outdir;
  std::vector<std::string> sets;
  int jobs = 1;
  std::optional<std::uint64_t> seed;
  app.add_option("--config", config_path, "JSON config file");
  app.add_option("--set", sets, "override a config key, e.g. --set grid.nx=128 (repeatable)");
  app.add_option("--outdir", outdir, "output root (default: config outdir, then $NCQM_OUTDIR, then ./runs)");
  app.add_option("--jobs", jobs, "threads for sweep points")->check(CLI::PositiveNumber);
  app.add_option("--seed", seed, "seed for randomized test states");

  for (const auto& name : ncqm::cli::experiments()) app.add_subcommand(name, "run the " + name + " experiment");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : ncqm::cli::exit_validation;
  }

  json user = json::object();
  try {
    if (!config_path.empty()) {
      std::ifstream in(config_path);
      if (!in) {
        std::cerr << "io: cannot read " << config_path << "\n";
        return ncqm::cli::exit_io;
      }
      user = json::parse(in);
    }
    for (const auto& s : sets) ncqm::cli::apply_override(user, s);
  } catch (const json::parse_error& e) {
    std::cerr << "invalid-argument: config is not valid JSON: " << e.what() << "\n";
    return ncqm::cli::exit_validation;
  } catch (const ncqm::Error& e) {
    std::cerr << e.what() << "\n";
    return ncqm::cli::exit_validation;
  }
  if (!user.is_object()) {
    std::cerr << "invalid-argument: config must be a JSON object\n";
    return ncqm::cli::exit_validation;
  }
  user["experiment"] = app.get_subcommands().front()->get_name();
  if (seed) user["seed"] = *seed;

  const auto res = ncqm::cli::run(user, outdir, jobs);
  if (res.exit_code == ncqm::cli::exit_ok) {
    std::cout << res.message << " -> " << res.directory.string() << "\n";
  } else {
    std::cerr << res.message << "\n";
  }
  return res.exit_code;
}
