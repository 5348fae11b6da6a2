#include "polariscope/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

namespace polariscope {

namespace {

void require_one_dimensional(DecisionLogic logic) {
  if (is_two_dimensional(logic))
    throw ModelError("this analysis needs a one-dimensional decision logic; use selection_gradient_2d");
}

// Relative class weights of a group's focal individuals in the two parties.
double weighted(double x, double wx, double w1x) { return x * wx + (1.0 - x) * w1x; }

}  // namespace

double party_weighted_utility(DecisionLogic logic, const Strategy& mutant, const Strategy& resident, double x,
                              const EconomicParams& econ, const UtilityShape& shape) {
  const double theta_x = resident_environment(logic, resident, x, econ);
  double total = 0.0;
  for (Group g : {Group::First, Group::Second}) {
    const double wx = expected_utility_at(logic, mutant, logic, resident, x, theta_x, econ, shape, g);
    const double w1x = expected_utility_at(logic, mutant, logic, resident, 1.0 - x, theta_x, econ, shape, g);
    total += weighted(x, wx, w1x);
  }
  return total / 2.0;
}

double selection_gradient(DecisionLogic logic, double p, double chi, const EconomicParams& econ,
                          const UtilityShape& shape, double step) {
  require_one_dimensional(logic);
  const double x = fraction_from_chi(chi);
  const Strategy resident = Strategy::one(p);
  resident.validate();
  auto f = [&](double pm) { return party_weighted_utility(logic, Strategy::one(pm), resident, x, econ, shape); };
  return bounded_derivative(f, p, step, 0.0, 1.0);
}

double sorting_gradient(DecisionLogic logic, double p, double chi, const EconomicParams& econ,
                        const UtilityShape& shape, double step) {
  require_one_dimensional(logic);
  const double x = fraction_from_chi(chi);
  const Strategy resident = Strategy::one(p);
  resident.validate();
  auto f = [&](double xv) { return party_weighted_utility(logic, resident, resident, xv, econ, shape); };
  return bounded_derivative(f, x, step, 0.0, 1.0);
}

Gradient2d selection_gradient_2d(double p_group, double p_party, double chi, const EconomicParams& econ,
                                 const UtilityShape& shape, double step) {
  const double x = fraction_from_chi(chi);
  const Strategy resident = Strategy::two(p_group, p_party);
  resident.validate();
  constexpr auto logic = DecisionLogic::TwoDimOr;
  auto fg = [&](double v) {
    return party_weighted_utility(logic, Strategy::two(v, p_party), resident, x, econ, shape);
  };
  auto fp = [&](double v) {
    return party_weighted_utility(logic, Strategy::two(p_group, v), resident, x, econ, shape);
  };
  return {bounded_derivative(fg, p_group, step, 0.0, 1.0), bounded_derivative(fp, p_party, step, 0.0, 1.0)};
}

std::vector<GradientSample> phase_portrait(DecisionLogic logic, GridSize grid, const EconomicParams& econ,
                                           const UtilityShape& shape, int threads) {
  require_one_dimensional(logic);
  if (grid.p_points < 2 || grid.chi_points < 2) throw ModelError("phase portrait resolutions must be >= 2");
  const std::size_t total = static_cast<std::size_t>(grid.p_points) * grid.chi_points;
  std::vector<GradientSample> out(total);
  auto fill = [&](std::size_t begin, std::size_t end) {
    for (std::size_t k = begin; k < end; ++k) {
      const int row = static_cast<int>(k / grid.p_points);
      const int col = static_cast<int>(k % grid.p_points);
      const double chi = -1.0 + 2.0 * row / (grid.chi_points - 1);
      const double p = static_cast<double>(col) / (grid.p_points - 1);
      out[k] = {p, chi, selection_gradient(logic, p, chi, econ, shape), sorting_gradient(logic, p, chi, econ, shape)};
    }
  };
  const std::size_t workers = std::clamp<std::size_t>(threads, 1, total);
  std::vector<std::jthread> pool;
  const std::size_t chunk = (total + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t begin = w * chunk;
    const std::size_t end = std::min(total, begin + chunk);
    if (begin < end) pool.emplace_back(fill, begin, end);
  }
  return out;
}

std::vector<Equilibrium> find_equilibria(DecisionLogic logic, double chi, const EconomicParams& econ,
                                         const UtilityShape& shape, int grid_n) {
  require_one_dimensional(logic);
  if (grid_n < 64) throw ModelError("find_equilibria needs grid_n >= 64");
  auto s = [&](double p) { return selection_gradient(logic, p, chi, econ, shape); };

  std::vector<double> grid(grid_n), values(grid_n);
  for (int k = 0; k < grid_n; ++k) {
    grid[k] = static_cast<double>(k) / (grid_n - 1);
    values[k] = s(grid[k]);
  }
  auto sign = [](double v) { return (v > 0.0) - (v < 0.0); };

  // Interior roots: sign changes between neighbouring grid points, with exact
  // zeros at interior nodes treated as roots of the enclosing bracket.
  std::vector<Equilibrium> roots;
  int last = 0;
  double last_p = 0.0;
  for (int k = 0; k < grid_n; ++k) {
    const int sk = sign(values[k]);
    if (sk == 0) continue;
    if (last != 0 && sk != last) {
      double lo = last_p;
      double hi = grid[k];
      while (hi - lo >= 1e-8) {
        const double mid = 0.5 * (lo + hi);
        const int sm = sign(s(mid));
        if (sm == 0) {
          lo = hi = mid;
          break;
        }
        (sm == last ? lo : hi) = mid;
      }
      const double root = 0.5 * (lo + hi);
      roots.push_back({root, last > 0 ? Stability::Stable : Stability::Unstable, {root, root}});
    }
    last = sk;
    last_p = grid[k];
  }

  // Boundaries are stable when the nearest non-zero interior gradient points
  // towards them.
  int first_sign = 0;
  for (double v : values)
    if ((first_sign = sign(v)) != 0) break;
  int final_sign = 0;
  for (auto it = values.rbegin(); it != values.rend(); ++it)
    if ((final_sign = sign(*it)) != 0) break;

  std::vector<Equilibrium> all;
  all.push_back({0.0, first_sign < 0 ? Stability::Stable : Stability::Unstable, {0.0, 0.0}});
  all.insert(all.end(), roots.begin(), roots.end());
  all.push_back({1.0, final_sign > 0 ? Stability::Stable : Stability::Unstable, {1.0, 1.0}});

  // A stable point attracts everything up to the neighbouring unstable points.
  for (std::size_t i = 0; i < all.size(); ++i) {
    if (all[i].stability != Stability::Stable) continue;
    double lo = 0.0, hi = 1.0;
    for (std::size_t j = i; j-- > 0;)
      if (all[j].stability == Stability::Unstable) {
        lo = all[j].p_star;
        break;
      }
    for (std::size_t j = i + 1; j < all.size(); ++j)
      if (all[j].stability == Stability::Unstable) {
        hi = all[j].p_star;
        break;
      }
    all[i].basin = {lo, hi};
  }
  return all;
}

double escape_frequency(DecisionLogic logic, double chi, const EconomicParams& econ, const UtilityShape& shape,
                        int grid_n) {
  const auto eq = find_equilibria(logic, chi, econ, shape, grid_n);
  const Equilibrium& top = eq.back();
  if (top.stability != Stability::Stable) return 0.0;
  return std::clamp(1.0 - top.basin.lo, 0.0, 1.0);
}

double logic_switch_advantage(double chi, double p_group, const EconomicParams& econ, const UtilityShape& shape,
                              double p_party) {
  const double x = fraction_from_chi(chi);
  const Strategy resident = Strategy::one(p_group);
  const Strategy mutant = Strategy::two(p_group, p_party);
  resident.validate();
  mutant.validate();
  constexpr auto resident_logic = DecisionLogic::GroupOnly;
  const double theta = resident_environment(resident_logic, resident, x, econ);
  double diff = 0.0;
  for (Group g : {Group::First, Group::Second}) {
    auto w = [&](DecisionLogic logic, const Strategy& s, double xv) {
      return expected_utility_at(logic, s, resident_logic, resident, xv, theta, econ, shape, g);
    };
    diff += weighted(x, w(DecisionLogic::TwoDimOr, mutant, x), w(DecisionLogic::TwoDimOr, mutant, 1.0 - x)) -
            weighted(x, w(resident_logic, resident, x), w(resident_logic, resident, 1.0 - x));
  }
  return diff / 2.0;
}

}  // namespace polariscope
