#include "polariscope/abm.hpp"

#include <algorithm>
#include <cmath>
#include <json.hpp>
#include <sstream>
#include <thread>

namespace polariscope {

namespace {

// Relation of target class b to focal class a, as a TargetClass index.
int relation(int a, int b) {
  const bool same_group = (a / 2) == (b / 2);
  const bool same_party = (a % 2) == (b % 2);
  return (same_group ? 0 : 2) + (same_party ? 0 : 1);
}

// Acceptance of a resident with strategy p, written as c0 + c1 p + c2 p^2 so
// that class means of p and p^2 give the exact class-average acceptance.
std::array<double, 3> acceptance_polynomial(DecisionLogic logic, int rel) {
  const auto c = static_cast<TargetClass>(rel);
  switch (logic) {
    case DecisionLogic::GroupOnly:
      return is_in_group(c) ? std::array{1.0, 0.0, 0.0} : std::array{1.0, -1.0, 0.0};
    case DecisionLogic::PartyOnly:
      return is_in_party(c) ? std::array{1.0, 0.0, 0.0} : std::array{1.0, -1.0, 0.0};
    case DecisionLogic::GroupOrParty:
    case DecisionLogic::GroupAndParty:
      if (c == TargetClass::InGroupInParty) return {1.0, 0.0, 0.0};
      if (c != TargetClass::OutGroupOutParty) return {1.0, -1.0, 0.0};
      return logic == DecisionLogic::GroupOrParty ? std::array{1.0, 0.0, -1.0} : std::array{1.0, -2.0, 1.0};
    case DecisionLogic::TwoDimOr: break;
  }
  throw ModelError("the individual-based model supports one-dimensional decision logics only");
}

std::uint64_t splitmix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace

void SimConfig::validate() const {
  if (n_per_group < 2) throw ModelError("population needs N >= 2 per group");
  if (is_two_dimensional(logic)) throw ModelError("the individual-based model supports one-dimensional logics only");
  econ.validate();
  shape.validate();
  fraction_from_chi(chi);
  if (!(sigma >= 0.0)) throw ModelError("selection strength sigma must be >= 0");
  if (!(mu >= 0.0 && mu <= 1.0)) throw ModelError("mutation rate mu must lie in [0, 1]");
  if (!(delta > 0.0) || !std::isfinite(delta)) throw ModelError("mutation size delta must be positive");
  Strategy::one(initial_p).validate();
  Strategy::one(seed_p).validate();
  if (!(seed_fraction >= 0.0 && seed_fraction <= 1.0)) throw ModelError("seed_fraction must lie in [0, 1]");
  if (events_per_n < 1) throw ModelError("event budget must be >= 1");
  if (replicates < 1) throw ModelError("replicate count must be >= 1");
}

double copy_probability(double sigma, double advantage) {
  if (advantage == 0.0 || sigma == 0.0) return 0.5;
  return 1.0 / (1.0 + std::exp(-sigma * advantage));
}

std::uint64_t replicate_seed(std::uint64_t master, std::uint64_t index) {
  return splitmix64(master + (index + 1) * 0x9E3779B97F4A7C15ULL);
}

PopulationState::PopulationState(const SimConfig& config) : config_(config) {
  config_.validate();
  const int n = config_.n_per_group;
  const double x = fraction_from_chi(config_.chi);
  const int aligned = static_cast<int>(std::floor(x * n + 1e-9));
  individuals_.reserve(2 * static_cast<std::size_t>(n));
  // Group 1 sits in party 1 when aligned, group 2 in party 2.
  for (Group g : {Group::First, Group::Second}) {
    const int own = g == Group::First ? 0 : 1;
    for (int k = 0; k < n; ++k) individuals_.push_back({g, k < aligned ? own : 1 - own, config_.initial_p});
  }
  if (config_.seed_fraction > 0.0) {
    std::array<int, 4> members{};
    for (const auto& ind : individuals_) ++members[class_index(ind)];
    std::array<int, 4> seeded{};
    for (auto& ind : individuals_) {
      const int cls = class_index(ind);
      const int quota = static_cast<int>(std::lround(config_.seed_fraction * members[cls]));
      if (seeded[cls] < quota) {
        ind.p = config_.seed_p;
        ++seeded[cls];
      }
    }
  }
  resync();
}

std::array<double, 4> PopulationState::relative_weights(int cls, double p) const {
  const auto w = choice_weights(config_.logic, Strategy::one(p));
  std::array<double, 4> out{};
  for (int b = 0; b < 4; ++b) out[b] = w[relation(cls, b)];
  return out;
}

double PopulationState::expected_acceptance(int rel, int target_cls) const {
  const int n = count_[target_cls];
  if (n == 0) return 0.0;
  const auto c = acceptance_polynomial(config_.logic, rel);
  return c[0] + c[1] * (sum_p_[target_cls] / n) + c[2] * (sum_p2_[target_cls] / n);
}

void PopulationState::add_contribution(int cls, double p, double sign) {
  sum_p_[cls] += sign * p;
  sum_p2_[cls] += sign * p * p;
  const auto w = relative_weights(cls, p);
  double total = 0.0;
  for (int b = 0; b < 4; ++b) total += w[b] * count_[b];
  if (total <= 0.0) return;
  for (int b = 0; b < 4; ++b) choice_sum_[cls][b] += sign * w[b] / total;
}

void PopulationState::resync() {
  count_ = {};
  sum_p_ = {};
  sum_p2_ = {};
  choice_sum_ = {};
  for (const auto& ind : individuals_) ++count_[class_index(ind)];
  for (const auto& ind : individuals_) add_contribution(class_index(ind), ind.p, 1.0);
  update_environment();
}

double PopulationState::individual_expected_utility(std::size_t i) const {
  const Individual& ind = individuals_[i];
  const int a = class_index(ind);
  const auto& econ = config_.econ;
  const auto& shape = config_.shape;
  const double baseline = utility(theta_, shape);
  const double scale = benefit_scale(econ, ind.group);
  const double f_in = utility(after_tax_payoff(scale * econ.benefit_in, econ.alpha, theta_), shape);
  const double f_out = utility(after_tax_payoff(scale * econ.benefit_out, econ.alpha, theta_), shape);
  const auto w = relative_weights(a, ind.p);
  double total_weight = 0.0;
  double total = 0.0;
  for (int b = 0; b < 4; ++b) {
    const double weight = w[b] * count_[b];
    if (weight <= 0.0) continue;
    const int rel = relation(a, b);
    const bool in = is_in_group(static_cast<TargetClass>(rel));
    const double win = expected_acceptance(rel, b) * (in ? econ.success_in : econ.success_out);
    total_weight += weight;
    total += weight * (win * (in ? f_in : f_out) + (1.0 - win) * baseline);
  }
  return total_weight > 0.0 ? total / total_weight : baseline;
}

double PopulationState::individual_gross_benefit(std::size_t i) const {
  const Individual& ind = individuals_[i];
  const int a = class_index(ind);
  const auto& econ = config_.econ;
  const double scale = benefit_scale(econ, ind.group);
  const auto w = relative_weights(a, ind.p);
  double total_weight = 0.0;
  double total = 0.0;
  for (int b = 0; b < 4; ++b) {
    const double weight = w[b] * count_[b];
    if (weight <= 0.0) continue;
    const int rel = relation(a, b);
    const bool in = is_in_group(static_cast<TargetClass>(rel));
    total_weight += weight;
    total += weight * expected_acceptance(rel, b) * (in ? econ.success_in * econ.benefit_in
                                                         : econ.success_out * econ.benefit_out);
  }
  return total_weight > 0.0 ? scale * total / total_weight : 0.0;
}

double PopulationState::mean_gross_benefit() const {
  const auto& econ = config_.econ;
  double total = 0.0;
  for (int a = 0; a < 4; ++a) {
    const double scale = benefit_scale(econ, static_cast<Group>(a / 2));
    for (int b = 0; b < 4; ++b) {
      if (count_[b] == 0) continue;
      const int rel = relation(a, b);
      const bool in = is_in_group(static_cast<TargetClass>(rel));
      const double gain = in ? econ.success_in * econ.benefit_in : econ.success_out * econ.benefit_out;
      total += choice_sum_[a][b] * count_[b] * expected_acceptance(rel, b) * gain * scale;
    }
  }
  return total / static_cast<double>(individuals_.size());
}

void PopulationState::set_strategy(std::size_t i, double p) {
  Individual& ind = individuals_[i];
  if (ind.p == p) return;
  const int cls = class_index(ind);
  add_contribution(cls, ind.p, -1.0);
  ind.p = p;
  add_contribution(cls, ind.p, 1.0);
}

double PopulationState::update_environment() {
  const auto& econ = config_.econ;
  theta_ = econ.feedback
               ? public_environment(econ.alpha, econ.gamma, econ.multiplier, mean_gross_benefit(), econ.theta0)
               : econ.theta;
  return theta_;
}

double PopulationState::class_mean_p(int cls) const { return count_[cls] ? sum_p_[cls] / count_[cls] : 0.0; }

double PopulationState::mean_p() const {
  double total = 0.0;
  for (const auto& ind : individuals_) total += ind.p;
  return total / static_cast<double>(individuals_.size());
}

double PopulationState::mean_p(Group g) const {
  double total = 0.0;
  std::size_t n = 0;
  for (const auto& ind : individuals_)
    if (ind.group == g) {
      total += ind.p;
      ++n;
    }
  return n ? total / static_cast<double>(n) : 0.0;
}

bool PopulationState::monomorphic() const {
  return std::all_of(individuals_.begin(), individuals_.end(),
                     [&](const Individual& ind) { return ind.p == individuals_.front().p; });
}

std::string PopulationState::snapshot_json() const {
  nlohmann::json j;
  j["event"] = events_;
  j["theta"] = theta_;
  j["logic"] = std::string(to_string(config_.logic));
  auto& arr = j["individuals"] = nlohmann::json::array();
  for (const auto& ind : individuals_)
    arr.push_back({{"group", static_cast<int>(ind.group) + 1}, {"party", ind.party + 1}, {"p", ind.p}});
  return j.dump(1);
}

PopulationState init_population(const SimConfig& config) { return PopulationState(config); }

Simulation::Simulation(const SimConfig& config, std::uint64_t seed)
    : config_(config), state_(config), rng_(seed) {}

double Simulation::checked_utility(std::size_t i) const {
  const double w = state_.individual_expected_utility(i);
  if (!std::isfinite(w)) {
    std::ostringstream msg;
    msg << "non-finite utility for individual " << i << " at event " << state_.event_count();
    throw NumericalError(msg.str(), state_.snapshot_json());
  }
  return w;
}

void Simulation::copy_event() {
  const std::size_t n = state_.size();
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  std::uniform_int_distribution<std::size_t> pick_other(0, n - 2);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  const std::size_t i = pick(rng_);
  std::size_t j = pick_other(rng_);
  if (j >= i) ++j;
  const double w_i = checked_utility(i);
  const double w_j = checked_utility(j);
  if (unit(rng_) < copy_probability(config_.sigma, w_j - w_i))
    state_.set_strategy(i, state_.individuals_[j].p);

  if (config_.mu > 0.0 && unit(rng_) < config_.mu) {
    const std::size_t k = pick(rng_);
    const double step = unit(rng_) < 0.5 ? -config_.delta : config_.delta;
    state_.set_strategy(k, std::clamp(state_.individuals_[k].p + step, 0.0, 1.0));
  }
  if (config_.econ.feedback) state_.update_environment();
  ++state_.events_;
}

void Simulation::record(TrajectoryRecord& out) {
  state_.resync();
  const auto& econ = config_.econ;
  double w_all = 0.0;
  std::array<double, 2> w_group{};
  std::array<std::size_t, 2> n_group{};
  for (std::size_t i = 0; i < state_.size(); ++i) {
    const double w = checked_utility(i);
    const int g = static_cast<int>(state_.individuals_[i].group);
    w_all += w;
    w_group[g] += w;
    ++n_group[g];
  }
  const double w1 = w_group[0] / static_cast<double>(n_group[0]);
  const double w2 = w_group[1] / static_cast<double>(n_group[1]);
  const bool first_richer = benefit_scale(econ, Group::First) > benefit_scale(econ, Group::Second);

  out.event.push_back(state_.event_count());
  out.mean_p.push_back(state_.mean_p());
  out.mean_p_g1.push_back(state_.mean_p(Group::First));
  out.mean_p_g2.push_back(state_.mean_p(Group::Second));
  out.theta.push_back(state_.theta());
  out.mean_w.push_back(w_all / static_cast<double>(state_.size()));
  out.mean_w_g1.push_back(w1);
  out.mean_w_g2.push_back(w2);
  out.inequality.push_back(first_richer ? inequality(w1, w2) : inequality(w2, w1));
}

TrajectoryRecord run_trajectory(const SimConfig& config, std::uint64_t replicate_index) {
  Simulation sim(config, replicate_seed(config.seed, replicate_index));
  TrajectoryRecord out;
  sim.record(out);
  const std::int64_t n = config.n_per_group;
  const std::int64_t budget = config.event_budget();
  while (sim.state().event_count() < budget) {
    sim.copy_event();
    if (sim.state().event_count() % n == 0 || sim.state().event_count() == budget) sim.record(out);
  }
  return out;
}

EnsembleResult run_ensemble(const SimConfig& config, int threads) {
  config.validate();
  const int reps = config.replicates;
  std::vector<TrajectoryRecord> runs(reps);
  std::vector<std::exception_ptr> errors(reps);
  const int workers = std::clamp(threads, 1, reps);
  {
    std::vector<std::jthread> pool;
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        for (int r = w; r < reps; r += workers) {
          try {
            runs[r] = run_trajectory(config, static_cast<std::uint64_t>(r));
          } catch (...) {
            errors[r] = std::current_exception();
          }
        }
      });
    }
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);

  // Pointwise means, accumulated in replicate order.
  EnsembleResult result;
  TrajectoryRecord& m = result.mean;
  m = runs.front();
  const std::size_t len = m.size();
  auto series = [](TrajectoryRecord& t) {
    return std::array<std::vector<double>*, 8>{&t.mean_p, &t.mean_w, &t.mean_p_g1, &t.mean_p_g2,
                                               &t.theta,  &t.mean_w_g1, &t.mean_w_g2, &t.inequality};
  };
  auto acc = series(m);
  for (int r = 1; r < reps; ++r) {
    auto src = series(runs[r]);
    for (std::size_t s = 0; s < acc.size(); ++s)
      for (std::size_t k = 0; k < len; ++k) (*acc[s])[k] += (*src[s])[k];
  }
  if (reps > 1)
    for (auto* v : acc)
      for (double& x : *v) x /= reps;

  FinalSummary& fs = result.final_state;
  for (int r = 0; r < reps; ++r) {
    const auto& t = runs[r];
    result.final_mean_p.push_back(t.mean_p.back());
    fs.mean_p += t.mean_p.back();
    fs.inequality += t.inequality.back();
    fs.mean_w += t.mean_w.back();
    fs.mean_w_g1 += t.mean_w_g1.back();
    fs.mean_w_g2 += t.mean_w_g2.back();
  }
  if (reps > 1)
    for (double* v : {&fs.mean_p, &fs.inequality, &fs.mean_w, &fs.mean_w_g1, &fs.mean_w_g2}) *v /= reps;
  return result;
}

}  // namespace polariscope
