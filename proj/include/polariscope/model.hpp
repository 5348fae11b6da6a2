#pragma once

// Equation layer: utility curve, interaction-choice distributions, expected
// utilities of rare mutants, public-goods environment, sorting and inequality.
// Everything here is a pure function of its arguments.

#include <array>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace polariscope {

class ModelError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class DecisionLogic { GroupOnly, PartyOnly, GroupOrParty, GroupAndParty, TwoDimOr };

std::string_view to_string(DecisionLogic logic);
std::optional<DecisionLogic> parse_logic(std::string_view name);
bool is_two_dimensional(DecisionLogic logic);

enum class Group { First = 0, Second = 1 };

// Target classes relative to a focal individual, in the order used by every
// InteractionDistribution: in-group/in-party, in-group/out-party,
// out-group/in-party, out-group/out-party.
enum class TargetClass { InGroupInParty = 0, InGroupOutParty = 1, OutGroupInParty = 2, OutGroupOutParty = 3 };

constexpr bool is_in_group(TargetClass c) {
  return c == TargetClass::InGroupInParty || c == TargetClass::InGroupOutParty;
}
constexpr bool is_in_party(TargetClass c) {
  return c == TargetClass::InGroupInParty || c == TargetClass::OutGroupInParty;
}

struct UtilityShape {
  double h = 10.0;  // sigmoid steepness
  double a = 0.02;  // slope of the linear factor

  void validate() const;
  bool operator==(const UtilityShape&) const = default;
};

struct EconomicParams {
  double benefit_in = 1.0;     // B_I
  double benefit_out = 2.0;    // B_O
  double success_in = 1.0;     // q_I
  double success_out = 0.6;    // q_O
  double theta = 1.0;          // fixed environment, used when feedback is off
  double alpha = 0.0;          // redistribution rate
  double gamma = 0.0;          // deadweight loss of taxation
  double multiplier = 1.0;     // public-goods multiplier r
  double theta0 = 0.5;         // baseline environment
  double beta = 0.5;           // inequality share of the scaled group
  bool swap_scaled_group = false;  // scale Group::Second instead of Group::First
  bool feedback = false;       // derive theta from mean benefits

  void validate() const;
  bool operator==(const EconomicParams&) const = default;
};

// One-dimensional strategies use `group` only. Two-dimensional strategies
// carry the willingness towards the own identity group and the own party.
struct Strategy {
  double group = 0.0;
  double party = 0.0;
  bool two_dimensional = false;

  static Strategy one(double p) { return {p, p, false}; }
  static Strategy two(double p_group, double p_party) { return {p_group, p_party, true}; }

  double p() const { return group; }
  void validate() const;
  bool operator==(const Strategy&) const = default;
};

struct SortingState {
  double chi = 0.0;

  static SortingState from_fraction(double x);
  static SortingState from_chi(double chi);
  double fraction() const { return (1.0 + chi) / 2.0; }
};

double chi_from_fraction(double x);
double fraction_from_chi(double chi);

struct InteractionDistribution {
  std::array<double, 4> probability{};

  double operator[](TargetClass c) const { return probability[static_cast<int>(c)]; }
  double sum() const;
};

// F(x) = sigmoid(h x) (1 + a x).
double utility(double payoff, const UtilityShape& shape);

struct RiskExtrema {
  double concave;  // maximally risk averse payoff
  double convex;   // maximally risk tolerant payoff
};
RiskExtrema risk_extrema(const UtilityShape& shape);

// Unnormalized willingness of a focal individual with strategy `s` to pursue
// an interaction with each target class.
std::array<double, 4> choice_weights(DecisionLogic logic, const Strategy& s);

// Probability that a resident target of each class accepts the focal
// individual.
std::array<double, 4> acceptance(DecisionLogic logic, const Strategy& resident);

// Population share of each target class seen from a focal individual whose own
// group places a fraction x of its members in the focal's party.
constexpr std::array<double, 4> class_shares(double x) { return {x, 1.0 - x, 1.0 - x, x}; }

// nullopt when no target class carries positive weight.
std::optional<InteractionDistribution> interaction_distribution(DecisionLogic logic, const Strategy& s,
                                                                double x);

double public_environment(double alpha, double gamma, double r, double mean_benefit, double theta0);
double after_tax_payoff(double gross_benefit, double alpha, double theta);
double group_scaled_benefit(double benefit, double beta, Group group);

// Scale factor applied to the benefits a member of `group` receives.
double benefit_scale(const EconomicParams& econ, Group group);

double inequality(double w_high, double w_low);

// Expected gross benefit per interaction attempt of a focal individual.
double expected_gross_benefit(DecisionLogic choice_logic, const Strategy& focal, DecisionLogic resident_logic,
                              const Strategy& resident, double x, const EconomicParams& econ, Group group);

// Population mean gross benefit of a monomorphic resident population.
double resident_mean_benefit(DecisionLogic logic, const Strategy& resident, double x, const EconomicParams& econ);

// Environment experienced in a monomorphic resident population: econ.theta
// when feedback is off, otherwise the public-goods environment of the
// resident's mean benefit.
double resident_environment(DecisionLogic logic, const Strategy& resident, double x, const EconomicParams& econ);

// Expected utility of a focal individual choosing targets with `choice_logic`
// among residents who accept according to `resident_logic`, at a given
// environment theta.
double expected_utility_at(DecisionLogic choice_logic, const Strategy& focal, DecisionLogic resident_logic,
                           const Strategy& resident, double x, double theta, const EconomicParams& econ,
                           const UtilityShape& shape, Group group = Group::First);

double mutant_expected_utility(DecisionLogic logic, const Strategy& mutant, const Strategy& resident, double x,
                               const EconomicParams& econ, const UtilityShape& shape,
                               Group group = Group::First);

}  // namespace polariscope
