#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "scbf/error.hpp"
#include "scbf/experiments.hpp"
#include "scbf/parallel.hpp"

namespace {

struct Options {
  std::string config;
  std::vector<std::string> sets;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::string out;
};

void add_common(CLI::App* cmd, Options& o) {
  cmd->add_option("--config", o.config, "key=value configuration file")->check(CLI::ExistingFile);
  cmd->add_option("--set", o.sets, "override one key, key=value (repeatable)");
  cmd->add_option("--seed", o.seed, "master seed");
  cmd->add_option("--threads", o.threads, "worker cap for ensembles (default SCBF_DEFAULT_THREADS)")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--out", o.out, "output directory");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stochastic convective Brinkman-Forchheimer experiments on the 2D torus"};
  app.set_version_flag("--version", std::string(scbf::build_version()));
  app.require_subcommand(1);
  Options opts;
  for (auto e : scbf::all_experiments()) add_common(app.add_subcommand(scbf::to_string(e)), opts);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  const auto experiment = scbf::parse_experiment(app.get_subcommands().front()->get_name());
  scbf::ExperimentConfig config;
  try {
    std::vector<std::pair<std::string, std::string>> assignments;
    if (!opts.config.empty()) assignments = scbf::read_config_file(opts.config);
    for (const auto& s : opts.sets) assignments.push_back(scbf::split_assignment(s));
    if (opts.seed) assignments.emplace_back("seed", std::to_string(*opts.seed));
    if (!opts.out.empty()) assignments.emplace_back("output_dir", opts.out);
    config = scbf::ExperimentConfig::make(experiment, assignments);
  } catch (const scbf::Error& e) {
    std::cerr << "invalid configuration: " << e.what() << '\n';
    return 2;
  }
  if (opts.threads) scbf::set_thread_cap(*opts.threads);

  std::cout << scbf::to_string(experiment) << " -> " << config.output_dir.string() << '\n';
  return scbf::run(config, std::cout);
}
