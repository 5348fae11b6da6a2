#pragma once

// Adaptive dynamics of monomorphic populations: selection and sorting
// gradients, phase portraits, equilibria along p, escape frequencies and
// decision-logic invasion.

#include <vector>

#include "polariscope/model.hpp"

namespace polariscope {

inline constexpr double kGradientStep = 1e-6;

struct GradientSample {
  double p;
  double chi;
  double s_p;
  double s_x;
};

enum class Stability { Stable, Unstable };

struct Interval {
  double lo;
  double hi;
};

struct Equilibrium {
  double p_star;
  Stability stability;
  Interval basin;  // degenerate [p*, p*] for unstable points
};

// Central difference of f at v with step h, falling back to second-order
// one-sided differences where v -/+ h leaves [lo, hi].
template <typename F>
double bounded_derivative(F&& f, double v, double h, double lo, double hi) {
  if (v - h < lo) return (-3.0 * f(v) + 4.0 * f(v + h) - f(v + 2.0 * h)) / (2.0 * h);
  if (v + h > hi) return (3.0 * f(v) - 4.0 * f(v - h) + f(v - 2.0 * h)) / (2.0 * h);
  return (f(v + h) - f(v - h)) / (2.0 * h);
}

// Population-weighted mutant utility x w(x) + (1 - x) w(1 - x), averaged
// over both identity groups.
double party_weighted_utility(DecisionLogic logic, const Strategy& mutant, const Strategy& resident, double x,
                              const EconomicParams& econ, const UtilityShape& shape);

double selection_gradient(DecisionLogic logic, double p, double chi, const EconomicParams& econ,
                          const UtilityShape& shape, double step = kGradientStep);

double sorting_gradient(DecisionLogic logic, double p, double chi, const EconomicParams& econ,
                        const UtilityShape& shape, double step = kGradientStep);

struct Gradient2d {
  double s_group;
  double s_party;
};

// Gradient of the two-dimensional OR logic with respect to (p_g, p_p).
Gradient2d selection_gradient_2d(double p_group, double p_party, double chi, const EconomicParams& econ,
                                 const UtilityShape& shape, double step = kGradientStep);

struct GridSize {
  int p_points;
  int chi_points;
};

// Row-major by (chi, p): chi outer, p inner. Both axes include their ends.
std::vector<GradientSample> phase_portrait(DecisionLogic logic, GridSize grid, const EconomicParams& econ,
                                           const UtilityShape& shape, int threads = 1);

std::vector<Equilibrium> find_equilibria(DecisionLogic logic, double chi, const EconomicParams& econ,
                                         const UtilityShape& shape, int grid_n = 256);

double escape_frequency(DecisionLogic logic, double chi, const EconomicParams& econ, const UtilityShape& shape,
                        int grid_n = 256);

// Utility of a rare two-dimensional OR mutant (p_g, p_p = 0.5) minus that of
// the group-only resident at p_g. Positive means the OR logic invades.
double logic_switch_advantage(double chi, double p_group, const EconomicParams& econ, const UtilityShape& shape,
                              double p_party = 0.5);

}  // namespace polariscope
