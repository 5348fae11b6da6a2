#include "polariscope/model.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

namespace polariscope {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw ModelError(what);
}

bool finite_all(std::initializer_list<double> values) {
  for (double v : values)
    if (!std::isfinite(v)) return false;
  return true;
}

bool unit(double v) { return v >= 0.0 && v <= 1.0; }

}  // namespace

std::string_view to_string(DecisionLogic logic) {
  switch (logic) {
    case DecisionLogic::GroupOnly: return "group-only";
    case DecisionLogic::PartyOnly: return "party-only";
    case DecisionLogic::GroupOrParty: return "group-or-party";
    case DecisionLogic::GroupAndParty: return "group-and-party";
    case DecisionLogic::TwoDimOr: return "two-dim-or";
  }
  return "unknown";
}

std::optional<DecisionLogic> parse_logic(std::string_view name) {
  for (auto logic : {DecisionLogic::GroupOnly, DecisionLogic::PartyOnly, DecisionLogic::GroupOrParty,
                     DecisionLogic::GroupAndParty, DecisionLogic::TwoDimOr}) {
    if (to_string(logic) == name) return logic;
  }
  return std::nullopt;
}

bool is_two_dimensional(DecisionLogic logic) { return logic == DecisionLogic::TwoDimOr; }

void UtilityShape::validate() const {
  require(std::isfinite(h) && h > 0.0, "utility shape: h must be positive");
  require(std::isfinite(a) && a >= 0.0 && a < 1.0, "utility shape: a must lie in [0, 1)");
}

void EconomicParams::validate() const {
  require(finite_all({benefit_in, benefit_out, success_in, success_out, theta, alpha, gamma, multiplier, theta0,
                      beta}),
          "economic parameters must be finite");
  require(benefit_in >= 0.0 && benefit_out >= 0.0, "benefits must be non-negative");
  require(success_out >= 0.0 && success_out < success_in && success_in <= 1.0,
          "success probabilities must satisfy 0 <= q_O < q_I <= 1");
  require(success_in * benefit_in < success_out * benefit_out,
          "out-group interactions must have the higher expected benefit (q_I B_I < q_O B_O)");
  require(unit(alpha), "alpha must lie in [0, 1]");
  require(unit(gamma), "gamma must lie in [0, 1]");
  require(multiplier >= 1.0, "public-goods multiplier r must be >= 1");
  require(beta > 0.0 && beta < 1.0, "beta must lie in (0, 1)");
}

void Strategy::validate() const {
  require(std::isfinite(group) && unit(group), "strategy component outside [0, 1]");
  if (two_dimensional) require(std::isfinite(party) && unit(party), "strategy component outside [0, 1]");
}

double chi_from_fraction(double x) {
  require(std::isfinite(x) && unit(x), "sorting fraction x must lie in [0, 1]");
  return 2.0 * x - 1.0;
}

double fraction_from_chi(double chi) {
  require(std::isfinite(chi) && chi >= -1.0 && chi <= 1.0, "sorting chi must lie in [-1, 1]");
  return (1.0 + chi) / 2.0;
}

SortingState SortingState::from_fraction(double x) { return {chi_from_fraction(x)}; }
SortingState SortingState::from_chi(double chi) {
  fraction_from_chi(chi);
  return {chi};
}

double InteractionDistribution::sum() const { return std::accumulate(probability.begin(), probability.end(), 0.0); }

double utility(double payoff, const UtilityShape& shape) {
  const double z = shape.h * payoff;
  double sigmoid;
  if (z >= 0.0) {
    sigmoid = 1.0 / (1.0 + std::exp(-z));
  } else {
    const double e = std::exp(z);
    sigmoid = e / (1.0 + e);
  }
  return sigmoid * (1.0 + shape.a * payoff);
}

RiskExtrema risk_extrema(const UtilityShape& shape) {
  const double s3 = std::sqrt(3.0);
  const double concave = std::log((s3 + 1.0) / (s3 - 1.0)) / shape.h;
  return {concave, -concave};
}

std::array<double, 4> choice_weights(DecisionLogic logic, const Strategy& s) {
  const double p = s.group;
  switch (logic) {
    case DecisionLogic::GroupOnly: return {p, p, 1.0 - p, 1.0 - p};
    case DecisionLogic::PartyOnly: return {p, 1.0 - p, p, 1.0 - p};
    case DecisionLogic::GroupOrParty:
    case DecisionLogic::GroupAndParty: {
      const double mixed = p + (1.0 - p) * (1.0 - p);
      return {2.0 * p - p * p, mixed, mixed, 1.0 - p * p};
    }
    case DecisionLogic::TwoDimOr: {
      const double pg = s.group;
      const double pp = s.party;
      return {1.0 - (1.0 - pg) * (1.0 - pp), 1.0 - (1.0 - pg) * pp, 1.0 - pg * (1.0 - pp), 1.0 - pg * pp};
    }
  }
  return {};
}

std::array<double, 4> acceptance(DecisionLogic logic, const Strategy& resident) {
  const double p = resident.group;
  switch (logic) {
    case DecisionLogic::GroupOnly: return {1.0, 1.0, 1.0 - p, 1.0 - p};
    case DecisionLogic::PartyOnly: return {1.0, 1.0 - p, 1.0, 1.0 - p};
    case DecisionLogic::GroupOrParty: return {1.0, 1.0 - p, 1.0 - p, 1.0 - p * p};
    case DecisionLogic::GroupAndParty: return {1.0, 1.0 - p, 1.0 - p, (1.0 - p) * (1.0 - p)};
    case DecisionLogic::TwoDimOr:
      return {1.0, 1.0 - resident.party, 1.0 - resident.group, 1.0 - resident.group * resident.party};
  }
  return {};
}

std::optional<InteractionDistribution> interaction_distribution(DecisionLogic logic, const Strategy& s, double x) {
  require(std::isfinite(x) && unit(x), "sorting fraction x must lie in [0, 1]");
  require(s.two_dimensional == is_two_dimensional(logic), "strategy dimension does not match decision logic");
  s.validate();
  const auto weights = choice_weights(logic, s);
  const auto shares = class_shares(x);
  InteractionDistribution d;
  double total = 0.0;
  for (int c = 0; c < 4; ++c) {
    d.probability[c] = weights[c] * shares[c];
    total += d.probability[c];
  }
  if (!(total > 0.0)) return std::nullopt;
  // Group-only weights already sum to one for every x.
  if (logic != DecisionLogic::GroupOnly)
    for (double& v : d.probability) v /= total;
  return d;
}

double public_environment(double alpha, double gamma, double r, double mean_benefit, double theta0) {
  return alpha * (1.0 - gamma * alpha) * r * mean_benefit - theta0;
}

double after_tax_payoff(double gross_benefit, double alpha, double theta) {
  return (1.0 - alpha) * gross_benefit + theta;
}

double group_scaled_benefit(double benefit, double beta, Group group) {
  return group == Group::First ? 2.0 * beta * benefit : 2.0 * (1.0 - beta) * benefit;
}

double benefit_scale(const EconomicParams& econ, Group group) {
  const Group scaled = econ.swap_scaled_group ? Group::Second : Group::First;
  return group == scaled ? 2.0 * econ.beta : 2.0 * (1.0 - econ.beta);
}

double inequality(double w_high, double w_low) {
  const double total = w_high + w_low;
  if (total == 0.0) return 0.0;
  return (w_high - w_low) / total;
}

namespace {

struct ClassTerms {
  std::optional<InteractionDistribution> dist;
  std::array<double, 4> accept;
};

ClassTerms class_terms(DecisionLogic choice_logic, const Strategy& focal, DecisionLogic resident_logic,
                       const Strategy& resident, double x) {
  return {interaction_distribution(choice_logic, focal, x), acceptance(resident_logic, resident)};
}

}  // namespace

double expected_gross_benefit(DecisionLogic choice_logic, const Strategy& focal, DecisionLogic resident_logic,
                              const Strategy& resident, double x, const EconomicParams& econ, Group group) {
  const auto terms = class_terms(choice_logic, focal, resident_logic, resident, x);
  if (!terms.dist) return 0.0;
  const double scale = benefit_scale(econ, group);
  double total = 0.0;
  for (int c = 0; c < 4; ++c) {
    const bool in = is_in_group(static_cast<TargetClass>(c));
    const double q = in ? econ.success_in : econ.success_out;
    const double b = in ? econ.benefit_in : econ.benefit_out;
    total += terms.dist->probability[c] * terms.accept[c] * q * scale * b;
  }
  return total;
}

double resident_mean_benefit(DecisionLogic logic, const Strategy& resident, double x, const EconomicParams& econ) {
  double total = 0.0;
  for (Group g : {Group::First, Group::Second}) {
    total += x * expected_gross_benefit(logic, resident, logic, resident, x, econ, g) +
             (1.0 - x) * expected_gross_benefit(logic, resident, logic, resident, 1.0 - x, econ, g);
  }
  return total / 2.0;
}

double resident_environment(DecisionLogic logic, const Strategy& resident, double x, const EconomicParams& econ) {
  if (!econ.feedback) return econ.theta;
  return public_environment(econ.alpha, econ.gamma, econ.multiplier, resident_mean_benefit(logic, resident, x, econ),
                            econ.theta0);
}

double expected_utility_at(DecisionLogic choice_logic, const Strategy& focal, DecisionLogic resident_logic,
                           const Strategy& resident, double x, double theta, const EconomicParams& econ,
                           const UtilityShape& shape, Group group) {
  const double baseline = utility(theta, shape);
  const auto terms = class_terms(choice_logic, focal, resident_logic, resident, x);
  if (!terms.dist) return baseline;
  const double scale = benefit_scale(econ, group);
  const double success_in = utility(after_tax_payoff(scale * econ.benefit_in, econ.alpha, theta), shape);
  const double success_out = utility(after_tax_payoff(scale * econ.benefit_out, econ.alpha, theta), shape);
  double total = 0.0;
  for (int c = 0; c < 4; ++c) {
    const bool in = is_in_group(static_cast<TargetClass>(c));
    const double q = in ? econ.success_in : econ.success_out;
    const double win = terms.accept[c] * q;
    total += terms.dist->probability[c] * (win * (in ? success_in : success_out) + (1.0 - win) * baseline);
  }
  return total;
}

double mutant_expected_utility(DecisionLogic logic, const Strategy& mutant, const Strategy& resident, double x,
                               const EconomicParams& econ, const UtilityShape& shape, Group group) {
  const double theta = resident_environment(logic, resident, x, econ);
  return expected_utility_at(logic, mutant, logic, resident, x, theta, econ, shape, group);
}

}  // namespace polariscope
