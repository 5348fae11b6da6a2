#pragma once

// Test-only reference implementations. Nothing here calls the library's
// distribution or utility code; they restate the model as coin flips and
// per-pair sums so the closed forms can be checked against them.

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "polariscope/abm.hpp"
#include "polariscope/model.hpp"

namespace oracle {

using polariscope::DecisionLogic;
using polariscope::EconomicParams;
using polariscope::Strategy;
using polariscope::UtilityShape;

inline double F(double x, const UtilityShape& s) {
  const double z = s.h * x;
  return std::exp(z) / (1.0 + std::exp(z)) * (1.0 + s.a * x);
}

inline double scale_of(const EconomicParams& e, int group /*0 or 1*/) {
  const int scaled = e.swap_scaled_group ? 1 : 0;
  return group == scaled ? 2.0 * e.beta : 2.0 * (1.0 - e.beta);
}

// Relation of a target to the focal: same group, same party.
struct Relation {
  bool same_group;
  bool same_party;
};

// Probability that the focal pursues a target with the given relation.
inline double choice_weight(DecisionLogic logic, const Strategy& s, Relation r) {
  const double p = s.group;
  switch (logic) {
    case DecisionLogic::GroupOnly: return r.same_group ? p : 1 - p;
    case DecisionLogic::PartyOnly: return r.same_party ? p : 1 - p;
    case DecisionLogic::GroupOrParty:
    case DecisionLogic::GroupAndParty:
    case DecisionLogic::TwoDimOr: {
      // Two independent wishes; pursue when either one is met.
      const double pg = s.group;
      const double pp = logic == DecisionLogic::TwoDimOr ? s.party : s.group;
      const double meet_g = r.same_group ? pg : 1 - pg;
      const double meet_p = r.same_party ? pp : 1 - pp;
      return 1 - (1 - meet_g) * (1 - meet_p);
    }
  }
  return 0;
}

// Probability that a resident target with the given relation accepts.
inline double acceptance(DecisionLogic logic, const Strategy& res, Relation r) {
  const double p = res.group;
  if (r.same_group && r.same_party) return 1;
  switch (logic) {
    case DecisionLogic::GroupOnly: return r.same_group ? 1 : 1 - p;
    case DecisionLogic::PartyOnly: return r.same_party ? 1 : 1 - p;
    case DecisionLogic::GroupOrParty:
      if (r.same_group || r.same_party) return 1 - p;
      return 1 - p * p;
    case DecisionLogic::GroupAndParty:
      if (r.same_group || r.same_party) return 1 - p;
      return (1 - p) * (1 - p);
    case DecisionLogic::TwoDimOr:
      if (r.same_group) return 1 - res.party;
      if (r.same_party) return 1 - res.group;
      return 1 - res.group * res.party;
  }
  return 0;
}

// Coin-flip acceptance draw for the same rules as `acceptance`.
template <typename Rng>
bool accepts(DecisionLogic logic, const Strategy& res, Relation r, Rng& rng) {
  std::bernoulli_distribution g(res.group), t(logic == DecisionLogic::TwoDimOr ? res.party : res.group);
  if (r.same_group && r.same_party) return true;
  switch (logic) {
    case DecisionLogic::GroupOnly: return r.same_group || !g(rng);
    case DecisionLogic::PartyOnly: return r.same_party || !g(rng);
    case DecisionLogic::GroupOrParty:
      if (r.same_group || r.same_party) return !g(rng);
      return !(g(rng) && t(rng));
    case DecisionLogic::GroupAndParty:
      if (r.same_group || r.same_party) return !g(rng);
      return !g(rng) && !t(rng);
    case DecisionLogic::TwoDimOr:
      if (r.same_group) return !t(rng);
      if (r.same_party) return !g(rng);
      return !(g(rng) && t(rng));
  }
  return false;
}

template <typename Rng>
bool pursues(DecisionLogic logic, const Strategy& s, Relation r, Rng& rng) {
  std::bernoulli_distribution g(s.group), t(logic == DecisionLogic::TwoDimOr ? s.party : s.group);
  switch (logic) {
    case DecisionLogic::GroupOnly: return g(rng) == r.same_group;
    case DecisionLogic::PartyOnly: return g(rng) == r.same_party;
    default: return (g(rng) == r.same_group) || (t(rng) == r.same_party);
  }
}

struct MonteCarlo {
  double mean;
  double standard_error;
};

// Simulates single interactions of a focal individual in `group` whose own
// group has a fraction x in the focal's party: draw a random member of the
// population, pursue or redraw, ask for acceptance, draw success and map the
// realised payoff through the utility curve.
inline MonteCarlo sample_expected_utility(DecisionLogic logic, const Strategy& mutant, const Strategy& resident,
                                          double x, double theta, const EconomicParams& e, const UtilityShape& shape,
                                          int group, std::int64_t draws, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0, 1);
  const double scale = scale_of(e, group);
  const double f_fail = F(theta, shape);
  const double f_in = F((1 - e.alpha) * scale * e.benefit_in + theta, shape);
  const double f_out = F((1 - e.alpha) * scale * e.benefit_out + theta, shape);
  double sum = 0, sum2 = 0;
  for (std::int64_t k = 0; k < draws; ++k) {
    Relation r{};
    for (int attempt = 0;; ++attempt) {
      // Half the population shares the focal's group; of each group a share
      // x (own group) or 1 - x (other group) sits in the focal's party.
      r.same_group = unit(rng) < 0.5;
      const double in_party = r.same_group ? x : 1 - x;
      r.same_party = unit(rng) < in_party;
      if (pursues(logic, mutant, r, rng)) break;
      if (attempt > 100000) {
        r = {false, false};
        break;
      }
    }
    double u = f_fail;
    if (accepts(logic, resident, r, rng)) {
      const double q = r.same_group ? e.success_in : e.success_out;
      if (unit(rng) < q) u = r.same_group ? f_in : f_out;
    }
    sum += u;
    sum2 += u * u;
  }
  const double mean = sum / draws;
  const double var = std::max(0.0, sum2 / draws - mean * mean);
  return {mean, std::sqrt(var / (draws - 1))};
}

// Direct O(N) average over every member j of the population (self included)
// of the payoff the focal i expects from choosing j.
inline double pairwise_utility(const polariscope::SimConfig& cfg, const std::vector<polariscope::Individual>& pop,
                               std::size_t i, double theta) {
  const auto& e = cfg.econ;
  const auto& focal = pop[i];
  const double scale = scale_of(e, static_cast<int>(focal.group));
  const double f_fail = F(theta, cfg.shape);
  double num = 0, den = 0;
  for (const auto& target : pop) {
    const Relation r{target.group == focal.group, target.party == focal.party};
    const double w = choice_weight(cfg.logic, Strategy::one(focal.p), r);
    const double acc = acceptance(cfg.logic, Strategy::one(target.p), r);
    const double q = r.same_group ? e.success_in : e.success_out;
    const double b = r.same_group ? e.benefit_in : e.benefit_out;
    const double f_win = F((1 - e.alpha) * scale * b + theta, cfg.shape);
    num += w * (acc * q * f_win + (1 - acc * q) * f_fail);
    den += w;
  }
  return den > 0 ? num / den : f_fail;
}

inline double pairwise_gross_benefit(const polariscope::SimConfig& cfg,
                                     const std::vector<polariscope::Individual>& pop, std::size_t i) {
  const auto& e = cfg.econ;
  const auto& focal = pop[i];
  const double scale = scale_of(e, static_cast<int>(focal.group));
  double num = 0, den = 0;
  for (const auto& target : pop) {
    const Relation r{target.group == focal.group, target.party == focal.party};
    const double w = choice_weight(cfg.logic, Strategy::one(focal.p), r);
    const double acc = acceptance(cfg.logic, Strategy::one(target.p), r);
    num += w * acc * (r.same_group ? e.success_in * e.benefit_in : e.success_out * e.benefit_out) * scale;
    den += w;
  }
  return den > 0 ? num / den : 0;
}

// Random economic parameters honouring every invariant.
template <typename Rng>
EconomicParams random_econ(Rng& rng) {
  std::uniform_real_distribution<double> u(0, 1);
  EconomicParams e;
  e.success_in = 0.5 + 0.5 * u(rng);
  e.success_out = e.success_in * (0.2 + 0.75 * u(rng));
  e.benefit_in = 0.2 + 1.3 * u(rng);
  // Out-group expected benefit 5-100% above the in-group's.
  e.benefit_out = e.success_in * e.benefit_in * (1.05 + 0.95 * u(rng)) / e.success_out;
  e.theta = -1.0 + 3.0 * u(rng);
  e.alpha = 0.9 * u(rng);
  e.gamma = u(rng);
  e.multiplier = 1.0 + 4.0 * u(rng);
  e.theta0 = -0.5 + 2.0 * u(rng);
  e.beta = 0.05 + 0.9 * u(rng);
  e.swap_scaled_group = u(rng) < 0.5;
  return e;
}

template <typename Rng>
UtilityShape random_shape(Rng& rng) {
  std::uniform_real_distribution<double> u(0, 1);
  return {2.0 + 18.0 * u(rng), 0.1 * u(rng)};
}

}  // namespace oracle
