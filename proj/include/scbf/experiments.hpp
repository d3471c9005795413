#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "scbf/rds.hpp"

namespace scbf {

enum class Experiment {
  Identities,
  OuStats,
  Trajectory,
  Absorbing,
  Flattening,
  Usc,
  UscPair,
  InvariantMeasure,
  Cocycle,
};

const char* to_string(Experiment e);
/// Throws invalid-parameter for an unknown name.
Experiment parse_experiment(const std::string& name);
const std::vector<Experiment>& all_experiments();

/// Flat key=value settings. Every experiment accepts the same key set with
/// its own defaults; anything else is rejected.
class Settings {
 public:
  explicit Settings(Experiment e);

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  void set(const std::string& key, const std::string& value);
  const std::string& get(const std::string& key) const;
  double number(const std::string& key) const;
  std::int64_t integer(const std::string& key) const;
  std::vector<double> list(const std::string& key) const;
  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

/// key=value lines; '#' starts a comment, blank lines are skipped.
std::vector<std::pair<std::string, std::string>> parse_assignments(std::istream& is);
std::vector<std::pair<std::string, std::string>> read_config_file(const std::filesystem::path& file);
/// Splits "key=value" (surrounding whitespace trimmed).
std::pair<std::string, std::string> split_assignment(const std::string& text);

struct ExperimentConfig {
  Experiment experiment = Experiment::Identities;
  Settings settings{Experiment::Identities};
  SCBFParams params;
  NoiseConfig noise;
  PullbackSchedule schedule;  // empty when chosen from the measured entry time
  int ensemble_size = 16;
  double initial_radius = 0.0;  // <= 0: 10·κ13 where that applies
  std::uint64_t seed = 1;
  std::filesystem::path output_dir;

  /// Defaults for e, then the assignments in order; validates everything.
  static ExperimentConfig make(Experiment e,
                               const std::vector<std::pair<std::string, std::string>>& assignments = {});
  /// Re-derives the typed fields from settings; throws invalid-parameter.
  void resolve();
};

struct Assertion {
  std::string name;
  std::string description;
  std::string relation;  // "<=", ">=", "==", "in"
  double tolerance = 0.0;
  double upper = 0.0;  // for "in"
  double measured = 0.0;
  bool evaluated = false;
  bool passed = false;
};

struct Table {
  std::string name;  // file stem
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
};

struct Report {
  Experiment experiment = Experiment::Identities;
  std::vector<Assertion> assertions;
  std::vector<Table> tables;
  std::map<std::string, double> section_seconds;
  std::map<std::string, double> values;  // named scalars for the summary
  std::string error;

  /// Records the measured value of a declared assertion.
  void check(const std::string& name, double measured);
  void check(const std::string& name, double measured, bool passed);
  const Assertion& find(const std::string& name) const;
  /// Every declared assertion evaluated and passed, and no error.
  bool passed() const;
  std::vector<std::string> failed() const;
};

/// The assertions an experiment will evaluate, fixed before it runs.
std::vector<Assertion> declare_assertions(const ExperimentConfig& config);

/// Computes the experiment. Throws scbf::Error when a computation fails.
Report run_experiment(const ExperimentConfig& config);

/// summary.json, summary.md and one CSV per table. Throws io error.
void emit_report(const Report& report, const std::filesystem::path& dir);

/// manifest.json: settings, seeds, build, declared assertions, wall clock.
void write_manifest(const ExperimentConfig& config, const std::vector<Assertion>& declared,
                    const std::filesystem::path& dir, double wall_seconds, bool finished);

/// CSV text of a table; bodies are byte-identical across reruns.
void write_table(std::ostream& os, const Table& table);

const char* build_version();

/// Full run: validate the output directory, write the manifest, compute, emit.
/// 0 when every assertion passes, 1 on a failed assertion or computation error,
/// 2 when the output directory is unusable.
int run(const ExperimentConfig& config, std::ostream& log);

}  // namespace scbf
