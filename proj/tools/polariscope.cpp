// polariscope: adaptive-dynamics analyses and copying-process simulations of
// identity-based polarization.

#include <CLI11.hpp>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <sstream>
#include <string>
#include <vector>

#include "polariscope/experiment.hpp"

namespace {

int default_threads() {
  if (const char* env = std::getenv("POLARISCOPE_THREADS")) {
    try {
      const int n = std::stoi(env);
      if (n >= 1) return n;
    } catch (const std::exception&) {
    }
    std::cerr << "ignoring invalid POLARISCOPE_THREADS='" << env << "'\n";
  }
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Identity, inequality and polarization: gradients, equilibria and copying-process simulations"};
  std::string command;
  std::string config_path;
  std::vector<std::string> overrides;
  std::string out_dir;
  std::uint64_t seed = 0;
  int threads = 0;

  app.add_option("command", command,
                 "phase-portrait | equilibria | escape | invade | trajectory | ensemble | sweep "
                 "(overrides the config's command)");
  app.add_option("--config", config_path, "JSON configuration file")->check(CLI::ExistingFile);
  app.add_option("--set", overrides, "override a configuration key (key=value), repeatable");
  auto* out_opt = app.add_option("--out", out_dir, "output directory");
  auto* seed_opt = app.add_option("--seed", seed, "master seed");
  app.add_option("--threads", threads, "worker threads (default: $POLARISCOPE_THREADS or 1)")
      ->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : polariscope::exit_code::config;
  }

  std::string text;
  if (!config_path.empty()) {
    std::ifstream in(config_path);
    if (!in) {
      std::cerr << "cannot read " << config_path << '\n';
      return polariscope::exit_code::io;
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    text = buf.str();
  }
  if (!command.empty()) overrides.push_back("command=\"" + command + "\"");
  if (*out_opt) overrides.push_back("out=" + nlohmann::json(out_dir).dump());
  if (*seed_opt) overrides.push_back("seed=" + std::to_string(seed));

  polariscope::ExperimentSpec spec;
  try {
    spec = polariscope::parse_config(text, overrides);
  } catch (const polariscope::ConfigError& e) {
    std::cerr << e.what() << '\n';
    return polariscope::exit_code::config;
  }
  return polariscope::run_command(spec, threads > 0 ? threads : default_threads(), std::cerr);
}
