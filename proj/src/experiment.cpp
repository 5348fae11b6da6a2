#include "polariscope/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <json.hpp>
#include <limits>
#include <ostream>
#include <sstream>

#include "polariscope/dynamics.hpp"

namespace polariscope {

using json = nlohmann::ordered_json;

std::string_view to_string(Command command) {
  switch (command) {
    case Command::PhasePortrait: return "phase-portrait";
    case Command::Equilibria: return "equilibria";
    case Command::Escape: return "escape";
    case Command::Invade: return "invade";
    case Command::Trajectory: return "trajectory";
    case Command::Ensemble: return "ensemble";
    case Command::Sweep: return "sweep";
  }
  return "unknown";
}

std::optional<Command> parse_command(std::string_view name) {
  for (auto c : {Command::PhasePortrait, Command::Equilibria, Command::Escape, Command::Invade, Command::Trajectory,
                 Command::Ensemble, Command::Sweep})
    if (to_string(c) == name) return c;
  return std::nullopt;
}

std::string_view to_string(SweepTarget target) {
  switch (target) {
    case SweepTarget::Escape: return "escape";
    case SweepTarget::Equilibria: return "equilibria";
    case SweepTarget::Gradient: return "gradient";
    case SweepTarget::Ensemble: return "ensemble";
  }
  return "unknown";
}

std::optional<SweepTarget> parse_sweep_target(std::string_view name) {
  for (auto t : {SweepTarget::Escape, SweepTarget::Equilibria, SweepTarget::Gradient, SweepTarget::Ensemble})
    if (to_string(t) == name) return t;
  return std::nullopt;
}

namespace {

std::string describe(const std::string& field, int line, const std::string& message) {
  std::string out = "config error";
  if (line > 0) out += " (line " + std::to_string(line) + ")";
  if (!field.empty()) out += " in field '" + field + "'";
  return out + ": " + message;
}

}  // namespace

ConfigError::ConfigError(std::string field, int line, const std::string& message)
    : std::runtime_error(describe(field, line, message)), field_(std::move(field)), line_(line) {}

ExperimentSpec default_spec(std::string_view profile) {
  ExperimentSpec spec;
  spec.profile = std::string(profile);
  spec.sim.n_per_group = 1000;
  spec.sim.replicates = 100;
  if (profile == "main-text") {
    spec.sim.econ.benefit_in = 1.0;
    spec.sim.econ.benefit_out = 2.0;
  } else if (profile == "si") {
    spec.sim.econ.benefit_in = 0.5;
    spec.sim.econ.benefit_out = 1.0;
  } else {
    throw ConfigError("profile", 0, "unknown profile '" + std::string(profile) + "' (expected main-text or si)");
  }
  return spec;
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Range {
  double lo;
  double hi;
  bool lo_open = false;
  bool hi_open = false;

  bool contains(double v) const {
    if (!std::isfinite(v)) return false;
    return (lo_open ? v > lo : v >= lo) && (hi_open ? v < hi : v <= hi);
  }
  std::string text() const {
    auto num = [](double v) {
      if (std::isinf(v)) return std::string(v > 0 ? "inf" : "-inf");
      std::ostringstream s;
      s << v;
      return s.str();
    };
    return std::string(lo_open ? "(" : "[") + num(lo) + ", " + num(hi) + (hi_open ? ")" : "]");
  }
};

struct Field {
  std::string key;
  bool sweepable;
  std::function<void(ExperimentSpec&, const json&)> set;  // throws std::string on bad values
  std::function<json(const ExperimentSpec&)> get;
};

using RealRef = std::function<double&(ExperimentSpec&)>;
using IntRef = std::function<int&(ExperimentSpec&)>;

Field real_field(std::string key, RealRef ref, Range range, bool sweepable = true) {
  return {key, sweepable,
          [ref, range](ExperimentSpec& s, const json& v) {
            if (!v.is_number()) throw std::string("expected a number");
            const double d = v.get<double>();
            if (!range.contains(d)) {
              std::ostringstream msg;
              msg << "value " << d << " out of range " << range.text();
              throw msg.str();
            }
            ref(s) = d;
          },
          [ref](const ExperimentSpec& s) { return json(ref(const_cast<ExperimentSpec&>(s))); }};
}

Field int_field(std::string key, IntRef ref, int lo) {
  return {key, false,
          [ref, lo](ExperimentSpec& s, const json& v) {
            if (!v.is_number_integer()) throw std::string("expected an integer");
            const auto i = v.get<std::int64_t>();
            if (i < lo || i > std::numeric_limits<int>::max())
              throw "value " + std::to_string(i) + " out of range [" + std::to_string(lo) + ", inf)";
            ref(s) = static_cast<int>(i);
          },
          [ref](const ExperimentSpec& s) { return json(ref(const_cast<ExperimentSpec&>(s))); }};
}

Field bool_field(std::string key, std::function<bool&(ExperimentSpec&)> ref) {
  return {key, false,
          [ref](ExperimentSpec& s, const json& v) {
            if (!v.is_boolean()) throw std::string("expected true or false");
            ref(s) = v.get<bool>();
          },
          [ref](const ExperimentSpec& s) { return json(ref(const_cast<ExperimentSpec&>(s))); }};
}

std::string text_of(const json& v) {
  if (!v.is_string()) throw std::string("expected a string");
  return v.get<std::string>();
}

const Range kUnit{0.0, 1.0};
const Range kFinite{-kInf, kInf, true, true};
const Range kNonNegative{0.0, kInf, false, true};

const std::vector<Field>& fields() {
  static const std::vector<Field> table = [] {
    std::vector<Field> f;
    f.push_back({"command", false,
                 [](ExperimentSpec& s, const json& v) {
                   const auto c = parse_command(text_of(v));
                   if (!c) throw "unknown command '" + v.get<std::string>() + "'";
                   s.command = *c;
                 },
                 [](const ExperimentSpec& s) { return json(std::string(to_string(s.command))); }});
    f.push_back({"profile", false, [](ExperimentSpec&, const json& v) { text_of(v); },
                 [](const ExperimentSpec& s) { return json(s.profile); }});
    f.push_back({"logic", false,
                 [](ExperimentSpec& s, const json& v) {
                   const auto l = parse_logic(text_of(v));
                   if (!l) throw "unknown decision logic '" + v.get<std::string>() + "'";
                   s.sim.logic = *l;
                 },
                 [](const ExperimentSpec& s) { return json(std::string(to_string(s.sim.logic))); }});
    f.push_back(real_field("B_I", [](ExperimentSpec& s) -> double& { return s.sim.econ.benefit_in; }, kNonNegative));
    f.push_back(real_field("B_O", [](ExperimentSpec& s) -> double& { return s.sim.econ.benefit_out; }, kNonNegative));
    f.push_back(real_field("q_I", [](ExperimentSpec& s) -> double& { return s.sim.econ.success_in; }, kUnit));
    f.push_back(real_field("q_O", [](ExperimentSpec& s) -> double& { return s.sim.econ.success_out; }, kUnit));
    f.push_back(real_field("theta", [](ExperimentSpec& s) -> double& { return s.sim.econ.theta; }, kFinite));
    f.push_back(real_field("alpha", [](ExperimentSpec& s) -> double& { return s.sim.econ.alpha; }, kUnit));
    f.push_back(real_field("gamma", [](ExperimentSpec& s) -> double& { return s.sim.econ.gamma; }, kUnit));
    f.push_back(real_field("r", [](ExperimentSpec& s) -> double& { return s.sim.econ.multiplier; },
                           Range{1.0, kInf, false, true}));
    f.push_back(real_field("theta0", [](ExperimentSpec& s) -> double& { return s.sim.econ.theta0; }, kFinite));
    f.push_back(real_field("beta", [](ExperimentSpec& s) -> double& { return s.sim.econ.beta; },
                           Range{0.0, 1.0, true, true}));
    f.push_back(bool_field("swap_scaled_group",
                           [](ExperimentSpec& s) -> bool& { return s.sim.econ.swap_scaled_group; }));
    f.push_back(bool_field("feedback", [](ExperimentSpec& s) -> bool& { return s.sim.econ.feedback; }));
    f.push_back(real_field("h", [](ExperimentSpec& s) -> double& { return s.sim.shape.h; },
                           Range{0.0, kInf, true, true}));
    f.push_back(real_field("a", [](ExperimentSpec& s) -> double& { return s.sim.shape.a; },
                           Range{0.0, 1.0, false, true}));
    f.push_back(real_field("chi", [](ExperimentSpec& s) -> double& { return s.sim.chi; }, Range{-1.0, 1.0}));
    f.push_back(real_field("p_party", [](ExperimentSpec& s) -> double& { return s.p_party; }, kUnit));
    f.push_back(int_field("grid_p", [](ExperimentSpec& s) -> int& { return s.grid_p; }, 2));
    f.push_back(int_field("grid_chi", [](ExperimentSpec& s) -> int& { return s.grid_chi; }, 2));
    f.push_back(int_field("grid_n", [](ExperimentSpec& s) -> int& { return s.grid_n; }, 64));
    f.push_back(int_field("N", [](ExperimentSpec& s) -> int& { return s.sim.n_per_group; }, 2));
    f.push_back(real_field("sigma", [](ExperimentSpec& s) -> double& { return s.sim.sigma; }, kNonNegative));
    f.push_back(real_field("mu", [](ExperimentSpec& s) -> double& { return s.sim.mu; }, kUnit));
    f.push_back(real_field("delta", [](ExperimentSpec& s) -> double& { return s.sim.delta; },
                           Range{0.0, 1.0, true, false}));
    f.push_back(real_field("initial_p", [](ExperimentSpec& s) -> double& { return s.sim.initial_p; }, kUnit));
    f.push_back(real_field("seed_fraction", [](ExperimentSpec& s) -> double& { return s.sim.seed_fraction; }, kUnit));
    f.push_back(real_field("seed_p", [](ExperimentSpec& s) -> double& { return s.sim.seed_p; }, kUnit));
    f.push_back({"events_per_n", false,
                 [](ExperimentSpec& s, const json& v) {
                   if (!v.is_number_integer() || v.get<std::int64_t>() < 1)
                     throw std::string("expected an integer >= 1");
                   s.sim.events_per_n = v.get<std::int64_t>();
                 },
                 [](const ExperimentSpec& s) { return json(s.sim.events_per_n); }});
    f.push_back(int_field("replicates", [](ExperimentSpec& s) -> int& { return s.sim.replicates; }, 1));
    f.push_back(int_field("replicate", [](ExperimentSpec& s) -> int& { return s.replicate; }, 0));
    f.push_back({"seed", false,
                 [](ExperimentSpec& s, const json& v) {
                   if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() &&
                                                   v.get<std::int64_t>() < 0))
                     throw std::string("expected an unsigned 64-bit integer");
                   s.sim.seed = v.get<std::uint64_t>();
                 },
                 [](const ExperimentSpec& s) { return json(s.sim.seed); }});
    f.push_back({"out", false,
                 [](ExperimentSpec& s, const json& v) {
                   s.out = text_of(v);
                   if (s.out.empty()) throw std::string("output directory must not be empty");
                 },
                 [](const ExperimentSpec& s) { return json(s.out); }});
    f.push_back({"sweep_of", false,
                 [](ExperimentSpec& s, const json& v) {
                   const auto t = parse_sweep_target(text_of(v));
                   if (!t) throw "unknown sweep target '" + v.get<std::string>() + "'";
                   s.sweep_of = *t;
                 },
                 [](const ExperimentSpec& s) { return json(std::string(to_string(s.sweep_of))); }});
    // Sweep axis keys; only serialized when a sweep is configured.
    auto axis = [](ExperimentSpec& s) -> SweepAxis& {
      if (!s.sweep) s.sweep = SweepAxis{};
      return *s.sweep;
    };
    f.push_back({"sweep_param", false, [axis](ExperimentSpec& s, const json& v) { axis(s).param = text_of(v); },
                 [](const ExperimentSpec& s) { return json(s.sweep->param); }});
    f.push_back({"sweep_min", false,
                 [axis](ExperimentSpec& s, const json& v) {
                   if (!v.is_number() || !std::isfinite(v.get<double>())) throw std::string("expected a number");
                   axis(s).min = v.get<double>();
                 },
                 [](const ExperimentSpec& s) { return json(s.sweep->min); }});
    f.push_back({"sweep_max", false,
                 [axis](ExperimentSpec& s, const json& v) {
                   if (!v.is_number() || !std::isfinite(v.get<double>())) throw std::string("expected a number");
                   axis(s).max = v.get<double>();
                 },
                 [](const ExperimentSpec& s) { return json(s.sweep->max); }});
    f.push_back({"sweep_steps", false,
                 [axis](ExperimentSpec& s, const json& v) {
                   if (!v.is_number_integer() || v.get<std::int64_t>() < 2)
                     throw std::string("expected an integer >= 2");
                   axis(s).steps = static_cast<int>(v.get<std::int64_t>());
                 },
                 [](const ExperimentSpec& s) { return json(s.sweep->steps); }});
    return f;
  }();
  return table;
}

const Field* find_field(std::string_view key) {
  for (const auto& f : fields())
    if (f.key == key) return &f;
  return nullptr;
}

int line_of(std::string_view text, std::size_t offset) {
  offset = std::min(offset, text.size());
  return 1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(offset), '\n'));
}

int line_of_key(std::string_view text, const std::string& key) {
  const auto pos = text.find("\"" + key + "\"");
  return pos == std::string_view::npos ? 0 : line_of(text, pos);
}

void validate_spec(const ExperimentSpec& spec) {
  try {
    spec.sim.validate();
  } catch (const ModelError& e) {
    throw ConfigError("", 0, e.what());
  }
  if (spec.sweep) {
    const auto names = sweepable_parameters();
    if (spec.sweep->param.empty()) throw ConfigError("sweep_param", 0, "missing required field for a sweep");
    if (std::find(names.begin(), names.end(), spec.sweep->param) == names.end())
      throw ConfigError("sweep_param", 0, "'" + spec.sweep->param + "' is not a sweepable parameter");
    if (spec.sweep->steps < 2) throw ConfigError("sweep_steps", 0, "a sweep needs at least 2 steps");
  }
  if (spec.command == Command::Sweep && !spec.sweep)
    throw ConfigError("sweep_param", 0, "missing required field for the sweep command");
}

json parse_value(const std::string& raw) {
  json v = json::parse(raw, nullptr, false);
  if (v.is_discarded()) return json(raw);
  return v;
}

}  // namespace

ExperimentSpec parse_config(std::string_view text, std::span<const std::string> overrides) {
  json doc = json::object();
  const bool blank = std::all_of(text.begin(), text.end(), [](char c) { return std::isspace(static_cast<unsigned char>(c)); });
  if (!blank) {
    try {
      doc = json::parse(text);
    } catch (const json::parse_error& e) {
      throw ConfigError("", line_of(text, e.byte > 0 ? e.byte - 1 : 0), std::string("malformed JSON: ") + e.what());
    }
    if (!doc.is_object()) throw ConfigError("", 1, "configuration must be a JSON object");
  }

  std::vector<std::string> overridden;
  for (const auto& item : overrides) {
    const auto eq = item.find('=');
    if (eq == std::string::npos || eq == 0)
      throw ConfigError("", 0, "override '" + item + "' is not of the form key=value");
    const std::string key = item.substr(0, eq);
    doc[key] = parse_value(item.substr(eq + 1));
    overridden.push_back(key);
  }
  auto line_for = [&](const std::string& key) {
    return std::find(overridden.begin(), overridden.end(), key) != overridden.end() ? 0 : line_of_key(text, key);
  };

  for (const auto& [key, value] : doc.items())
    if (!find_field(key)) throw ConfigError(key, line_for(key), "unknown key");

  std::string profile = "main-text";
  if (doc.contains("profile")) {
    if (!doc["profile"].is_string()) throw ConfigError("profile", line_for("profile"), "expected a string");
    profile = doc["profile"].get<std::string>();
  }
  ExperimentSpec spec;
  try {
    spec = default_spec(profile);
  } catch (const ConfigError& e) {
    throw ConfigError("profile", line_for("profile"), "unknown profile '" + profile + "'");
  }

  if (!doc.contains("command")) throw ConfigError("command", 0, "missing required field");
  for (const auto& f : fields()) {
    if (!doc.contains(f.key)) continue;
    try {
      f.set(spec, doc[f.key]);
    } catch (const std::string& message) {
      throw ConfigError(f.key, line_for(f.key), message);
    }
  }
  validate_spec(spec);
  return spec;
}

std::string serialize(const ExperimentSpec& spec) {
  json doc = json::object();
  for (const auto& f : fields()) {
    if (f.key.rfind("sweep_", 0) == 0 && f.key != "sweep_of" && !spec.sweep) continue;
    doc[f.key] = f.get(spec);
  }
  return doc.dump(2) + "\n";
}

std::vector<std::string> sweepable_parameters() {
  std::vector<std::string> out;
  for (const auto& f : fields())
    if (f.sweepable) out.push_back(f.key);
  return out;
}

std::vector<ExperimentSpec> sweep_instances(const ExperimentSpec& spec) {
  if (!spec.sweep) return {spec};
  const auto& axis = *spec.sweep;
  const Field* field = find_field(axis.param);
  if (!field || !field->sweepable) throw ConfigError("sweep_param", 0, "'" + axis.param + "' is not sweepable");
  std::vector<ExperimentSpec> out;
  out.reserve(axis.steps);
  for (int k = 0; k < axis.steps; ++k) {
    const double value = k == axis.steps - 1 ? axis.max : axis.min + (axis.max - axis.min) * k / (axis.steps - 1);
    ExperimentSpec instance = spec;
    try {
      field->set(instance, json(value));
    } catch (const std::string& message) {
      throw ConfigError(axis.param, 0, "sweep value: " + message);
    }
    validate_spec(instance);
    out.push_back(std::move(instance));
  }
  return out;
}

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

std::string_view stability_name(Stability s) { return s == Stability::Stable ? "stable" : "unstable"; }

const char* kTrajectoryColumns = "event,mean_p,mean_p_g1,mean_p_g2,theta,mean_w,mean_w_g1,mean_w_g2,inequality";

std::string sweep_columns(SweepTarget target) {
  switch (target) {
    case SweepTarget::Escape: return "escape_frequency";
    case SweepTarget::Equilibria: return "p_star,stability,basin_lo,basin_hi";
    case SweepTarget::Gradient: return "p,s_p";
    case SweepTarget::Ensemble:
      return "final_mean_p,final_inequality,final_mean_w,final_mean_w_g1,final_mean_w_g2";
  }
  return "";
}

void write_trajectory(std::ostream& os, const TrajectoryRecord& t) {
  for (std::size_t k = 0; k < t.size(); ++k) {
    os << t.event[k] << ',' << num(t.mean_p[k]) << ',' << num(t.mean_p_g1[k]) << ',' << num(t.mean_p_g2[k]) << ','
       << num(t.theta[k]) << ',' << num(t.mean_w[k]) << ',' << num(t.mean_w_g1[k]) << ',' << num(t.mean_w_g2[k])
       << ',' << num(t.inequality[k]) << '\n';
  }
}

void write_equilibria(std::ostream& os, const std::string& prefix, const std::vector<Equilibrium>& eqs) {
  for (const auto& e : eqs)
    os << prefix << num(e.p_star) << ',' << stability_name(e.stability) << ',' << num(e.basin.lo) << ','
       << num(e.basin.hi) << '\n';
}

json summary_json(const FinalSummary& s) {
  return json{{"final_mean_p", s.mean_p},
              {"final_inequality", s.inequality},
              {"final_mean_w", s.mean_w},
              {"final_mean_w_g1", s.mean_w_g1},
              {"final_mean_w_g2", s.mean_w_g2}};
}

}  // namespace

std::string csv_header(Command command, const ExperimentSpec& spec) {
  switch (command) {
    case Command::PhasePortrait: return "p,chi,s_p,s_x";
    case Command::Equilibria: return "p_star,stability,basin_lo,basin_hi";
    case Command::Escape: return "escape_frequency";
    case Command::Invade: return "chi,p_g,advantage";
    case Command::Trajectory:
    case Command::Ensemble: return kTrajectoryColumns;
    case Command::Sweep: return (spec.sweep ? spec.sweep->param : std::string("value")) + "," + sweep_columns(spec.sweep_of);
  }
  return "";
}

CommandOutput render_command(const ExperimentSpec& spec, int threads) {
  const auto& sim = spec.sim;
  const auto& econ = sim.econ;
  const auto& shape = sim.shape;
  std::ostringstream csv;
  csv << csv_header(spec.command, spec) << '\n';
  json sidecar = json::object();
  sidecar["schema_version"] = kSchemaVersion;
  sidecar["command"] = std::string(to_string(spec.command));
  sidecar["csv"] = std::string(to_string(spec.command)) + ".csv";
  sidecar["header"] = csv_header(spec.command, spec);
  sidecar["seed"] = sim.seed;

  switch (spec.command) {
    case Command::PhasePortrait:
      for (const auto& s : phase_portrait(sim.logic, {spec.grid_p, spec.grid_chi}, econ, shape, threads))
        csv << num(s.p) << ',' << num(s.chi) << ',' << num(s.s_p) << ',' << num(s.s_x) << '\n';
      break;
    case Command::Equilibria:
      write_equilibria(csv, "", find_equilibria(sim.logic, sim.chi, econ, shape, spec.grid_n));
      break;
    case Command::Escape:
      csv << num(escape_frequency(sim.logic, sim.chi, econ, shape, spec.grid_n)) << '\n';
      break;
    case Command::Invade:
      for (int row = 0; row < spec.grid_chi; ++row) {
        const double chi = -1.0 + 2.0 * row / (spec.grid_chi - 1);
        for (int col = 0; col < spec.grid_p; ++col) {
          const double pg = static_cast<double>(col) / (spec.grid_p - 1);
          csv << num(chi) << ',' << num(pg) << ',' << num(logic_switch_advantage(chi, pg, econ, shape, spec.p_party))
              << '\n';
        }
      }
      break;
    case Command::Trajectory:
      write_trajectory(csv, run_trajectory(sim, static_cast<std::uint64_t>(spec.replicate)));
      break;
    case Command::Ensemble: {
      const auto result = run_ensemble(sim, threads);
      write_trajectory(csv, result.mean);
      sidecar["summary"] = summary_json(result.final_state);
      break;
    }
    case Command::Sweep: {
      json summaries = json::array();
      for (const auto& inst : sweep_instances(spec)) {
        const std::string value = num(find_field(spec.sweep->param)->get(inst).get<double>()) + ",";
        const auto& isim = inst.sim;
        switch (spec.sweep_of) {
          case SweepTarget::Escape:
            csv << value << num(escape_frequency(isim.logic, isim.chi, isim.econ, isim.shape, inst.grid_n)) << '\n';
            break;
          case SweepTarget::Equilibria:
            write_equilibria(csv, value, find_equilibria(isim.logic, isim.chi, isim.econ, isim.shape, inst.grid_n));
            break;
          case SweepTarget::Gradient:
            for (int col = 0; col < inst.grid_p; ++col) {
              const double p = static_cast<double>(col) / (inst.grid_p - 1);
              csv << value << num(p) << ',' << num(selection_gradient(isim.logic, p, isim.chi, isim.econ, isim.shape))
                  << '\n';
            }
            break;
          case SweepTarget::Ensemble: {
            const auto fs = run_ensemble(isim, threads).final_state;
            csv << value << num(fs.mean_p) << ',' << num(fs.inequality) << ',' << num(fs.mean_w) << ','
                << num(fs.mean_w_g1) << ',' << num(fs.mean_w_g2) << '\n';
            break;
          }
        }
      }
      break;
    }
  }
  sidecar["spec"] = json::parse(serialize(spec));
  return {csv.str(), sidecar.dump(2) + "\n"};
}

namespace {

bool write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) return false;
  os << content;
  return static_cast<bool>(os.flush());
}

}  // namespace

int run_command(const ExperimentSpec& spec, int threads, std::ostream& err) {
  namespace fs = std::filesystem;
  const fs::path dir(spec.out);
  const std::string stem(to_string(spec.command));
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) {
    err << "cannot create output directory " << dir << ": " << ec.message() << '\n';
    return exit_code::io;
  }
  CommandOutput output;
  try {
    output = render_command(spec, threads);
  } catch (const NumericalError& e) {
    const fs::path dump = dir / (stem + "_state_dump.json");
    write_file(dump, e.snapshot());
    err << "numerical failure: " << e.what() << "; state written to " << dump.string() << '\n';
    return exit_code::numerical;
  } catch (const ConfigError& e) {
    err << e.what() << '\n';
    return exit_code::config;
  } catch (const ModelError& e) {
    err << "config error: " << e.what() << '\n';
    return exit_code::config;
  }
  if (!write_file(dir / (stem + ".csv"), output.csv) || !write_file(dir / (stem + ".json"), output.sidecar)) {
    err << "cannot write output files in " << dir << '\n';
    return exit_code::io;
  }
  return exit_code::ok;
}

}  // namespace polariscope
