#pragma once

// Experiment configuration, orchestration and output schemas for the
// command-line front end.

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "polariscope/abm.hpp"
#include "polariscope/model.hpp"

namespace polariscope {

inline constexpr int kSchemaVersion = 1;

enum class Command { PhasePortrait, Equilibria, Escape, Invade, Trajectory, Ensemble, Sweep };

std::string_view to_string(Command command);
std::optional<Command> parse_command(std::string_view name);

// Analyses a sweep can repeat over its axis.
enum class SweepTarget { Escape, Equilibria, Gradient, Ensemble };

std::string_view to_string(SweepTarget target);
std::optional<SweepTarget> parse_sweep_target(std::string_view name);

struct SweepAxis {
  std::string param;
  double min = 0.0;
  double max = 1.0;
  int steps = 2;
  bool operator==(const SweepAxis&) const = default;
};

struct ExperimentSpec {
  Command command = Command::PhasePortrait;
  std::string profile = "main-text";
  SimConfig sim;  // logic, economics, utility shape, sorting and ABM settings
  double p_party = 0.5;
  int grid_p = 25;
  int grid_chi = 25;
  int grid_n = 256;
  int replicate = 0;
  std::optional<SweepAxis> sweep;
  SweepTarget sweep_of = SweepTarget::Escape;
  std::string out = "out";

  bool operator==(const ExperimentSpec&) const = default;
};

class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field, int line, const std::string& message);
  const std::string& field() const { return field_; }
  int line() const { return line_; }

 private:
  std::string field_;
  int line_;
};

// Defaults shared by every spec, before the payoff profile is applied.
ExperimentSpec default_spec(std::string_view profile = "main-text");

// Parses a JSON object of flat keys. `overrides` are "key=value" strings whose
// value is read as JSON when possible and as a plain string otherwise; they
// take precedence over keys in `text`.
ExperimentSpec parse_config(std::string_view text, std::span<const std::string> overrides = {});

std::string serialize(const ExperimentSpec& spec);

// The list of numeric keys a sweep may vary.
std::vector<std::string> sweepable_parameters();

// One fully validated spec per sweep step (a single copy without a sweep).
std::vector<ExperimentSpec> sweep_instances(const ExperimentSpec& spec);

namespace exit_code {
inline constexpr int ok = 0;
inline constexpr int config = 2;
inline constexpr int io = 3;
inline constexpr int numerical = 4;
}  // namespace exit_code

struct CommandOutput {
  std::string csv;
  std::string sidecar;  // JSON
};

// Computes the CSV and sidecar for a command without touching the
// filesystem. Throws NumericalError from the simulator.
CommandOutput render_command(const ExperimentSpec& spec, int threads = 1);

// Writes <out>/<command>.csv and <out>/<command>.json and returns an exit
// code. Diagnostics go to `err`.
int run_command(const ExperimentSpec& spec, int threads, std::ostream& err);

std::string csv_header(Command command, const ExperimentSpec& spec);

}  // namespace polariscope
