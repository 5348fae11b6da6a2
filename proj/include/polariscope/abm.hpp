#pragma once

// Individual-based copying process with local mutation, exogenous sorting,
// benefit inequality and optional public-goods feedback on the environment.

#include <array>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "polariscope/model.hpp"

namespace polariscope {

// Thrown when an individual's utility stops being finite. Carries a JSON
// snapshot of the offending population.
class NumericalError : public std::runtime_error {
 public:
  NumericalError(const std::string& what, std::string snapshot)
      : std::runtime_error(what), snapshot_(std::move(snapshot)) {}
  const std::string& snapshot() const { return snapshot_; }

 private:
  std::string snapshot_;
};

struct SimConfig {
  int n_per_group = 1000;
  DecisionLogic logic = DecisionLogic::GroupOrParty;
  EconomicParams econ;
  UtilityShape shape;
  double chi = 1.0;
  double sigma = 10.0;   // selection strength
  double mu = 1e-3;      // mutation probability per copying event
  double delta = 0.01;   // mutation size
  double initial_p = 0.0;
  // A fraction of every (group, party) class starts at seed_p instead.
  double seed_fraction = 0.0;
  double seed_p = 0.0;
  std::int64_t events_per_n = 100;  // event budget in units of N
  std::uint64_t seed = 1;
  int replicates = 1;

  void validate() const;
  std::int64_t event_budget() const { return events_per_n * n_per_group; }
  bool operator==(const SimConfig&) const = default;
};

struct Individual {
  Group group;
  int party;  // 0: party 1, 1: party 2
  double p;
};

// Fermi adoption probability of a strategy whose owner is better off by
// `advantage`.
double copy_probability(double sigma, double advantage);

// Per-replicate seed: splitmix64 applied to master + (index + 1) * golden gamma.
std::uint64_t replicate_seed(std::uint64_t master, std::uint64_t index);

class PopulationState {
 public:
  explicit PopulationState(const SimConfig& config);

  const std::vector<Individual>& individuals() const { return individuals_; }
  std::size_t size() const { return individuals_.size(); }
  double theta() const { return theta_; }
  std::int64_t event_count() const { return events_; }

  // Expected utility of individual i under the current class aggregates.
  double individual_expected_utility(std::size_t i) const;
  // Expected gross benefit per interaction attempt of individual i.
  double individual_gross_benefit(std::size_t i) const;
  // Population mean gross benefit, from the incrementally maintained sums.
  double mean_gross_benefit() const;

  void set_strategy(std::size_t i, double p);
  // Recomputes theta from the current composition (no-op with feedback off).
  double update_environment();
  // Rebuilds every incremental aggregate from scratch.
  void resync();

  int class_count(int cls) const { return count_[cls]; }
  double class_mean_p(int cls) const;
  double mean_p() const;
  double mean_p(Group g) const;
  bool monomorphic() const;

  std::string snapshot_json() const;

 private:
  friend class Simulation;

  static int class_index(const Individual& ind) { return 2 * static_cast<int>(ind.group) + ind.party; }
  std::array<double, 4> relative_weights(int cls, double p) const;
  double expected_acceptance(int rel, int target_cls) const;
  void add_contribution(int cls, double p, double sign);

  SimConfig config_;
  std::vector<Individual> individuals_;
  std::array<int, 4> count_{};
  std::array<double, 4> sum_p_{};
  std::array<double, 4> sum_p2_{};
  // Sum over members of class a of their choice probability towards class b,
  // divided by the count of b.
  std::array<std::array<double, 4>, 4> choice_sum_{};
  double theta_ = 0.0;
  std::int64_t events_ = 0;
};

struct TrajectoryRecord {
  std::vector<std::int64_t> event;
  std::vector<double> mean_p;
  std::vector<double> mean_p_g1;
  std::vector<double> mean_p_g2;
  std::vector<double> theta;
  std::vector<double> mean_w;
  std::vector<double> mean_w_g1;
  std::vector<double> mean_w_g2;
  std::vector<double> inequality;

  std::size_t size() const { return event.size(); }
  bool operator==(const TrajectoryRecord&) const = default;
};

class Simulation {
 public:
  Simulation(const SimConfig& config, std::uint64_t seed);

  // One copying event followed by a possible mutation.
  void copy_event();
  void record(TrajectoryRecord& out);

  PopulationState& state() { return state_; }
  const PopulationState& state() const { return state_; }

 private:
  double checked_utility(std::size_t i) const;

  SimConfig config_;
  PopulationState state_;
  std::mt19937_64 rng_;
};

PopulationState init_population(const SimConfig& config);

TrajectoryRecord run_trajectory(const SimConfig& config, std::uint64_t replicate_index);

struct FinalSummary {
  double mean_p = 0.0;
  double inequality = 0.0;
  double mean_w = 0.0;
  double mean_w_g1 = 0.0;
  double mean_w_g2 = 0.0;
};

struct EnsembleResult {
  TrajectoryRecord mean;
  FinalSummary final_state;
  std::vector<double> final_mean_p;  // per replicate, in replicate order
};

EnsembleResult run_ensemble(const SimConfig& config, int threads = 1);

}  // namespace polariscope
