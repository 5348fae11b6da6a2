// Acceptance checks. Prints one PASS/FAIL line per criterion; pass criterion
// numbers as arguments to run a subset. Exit status is non-zero if any
// selected criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "polariscope/abm.hpp"
#include "polariscope/dynamics.hpp"

#ifndef POLARISCOPE_CLI
#define POLARISCOPE_CLI "polariscope"
#endif

using namespace polariscope;

namespace {

struct Outcome {
  bool pass;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

EconomicParams si_preset() {
  EconomicParams e;
  e.benefit_in = 0.5;
  e.benefit_out = 1.0;
  return e;
}

constexpr DecisionLogic kLogics[] = {DecisionLogic::GroupOnly, DecisionLogic::PartyOnly, DecisionLogic::GroupOrParty,
                                     DecisionLogic::GroupAndParty, DecisionLogic::TwoDimOr};

// 1. closed-form expected utility against the sampling oracle
Outcome oracle_equivalence() {
  std::mt19937_64 rng(20240601);
  std::uniform_real_distribution<double> u(0, 1);
  int bad = 0, total = 0;
  double worst = 0;
  std::string where;
  for (const auto logic : kLogics) {
    for (int k = 0; k < 20; ++k) {
      const auto e = oracle::random_econ(rng);
      const auto shape = oracle::random_shape(rng);
      const bool two = is_two_dimensional(logic);
      const auto m = two ? Strategy::two(u(rng), u(rng)) : Strategy::one(u(rng));
      const auto r = two ? Strategy::two(u(rng), u(rng)) : Strategy::one(u(rng));
      const double x = u(rng);
      const int group = u(rng) < 0.5 ? 0 : 1;
      const double closed = mutant_expected_utility(logic, m, r, x, e, shape, static_cast<Group>(group));
      const auto mc = oracle::sample_expected_utility(logic, m, r, x, e.theta, e, shape, group, 1000000, rng());
      const double z = mc.standard_error > 0 ? std::abs(closed - mc.mean) / mc.standard_error
                                              : (closed == mc.mean ? 0.0 : 1e9);
      ++total;
      if (z > worst) {
        worst = z;
        where = fmt("%s #%d", std::string(to_string(logic)).c_str(), k);
      }
      if (z > 3) ++bad;
    }
  }
  return {bad == 0, fmt("%d/%d settings within 3 SE; worst |z| = %.2f (%s)", total - bad, total, worst, where.c_str())};
}

// 2. library gradients against independent central differences
Outcome gradient_consistency() {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> u(0, 1);
  const UtilityShape shape;
  const DecisionLogic logics[] = {DecisionLogic::GroupOnly, DecisionLogic::PartyOnly, DecisionLogic::GroupOrParty,
                                  DecisionLogic::GroupAndParty};
  int compared = 0, bad = 0;
  double worst = 0;
  for (int k = 0; k < 100; ++k) {
    const auto logic = logics[k % 4];
    auto e = oracle::random_econ(rng);
    e.feedback = u(rng) < 0.5;
    const double p = 0.01 + 0.98 * u(rng);
    const double x = 0.01 + 0.98 * u(rng);
    const double chi = 2 * x - 1;
    // party-weighted utility of a mutant, averaged over the two groups
    auto g = [&](double pm, double xv) {
      double t = 0;
      for (Group grp : {Group::First, Group::Second})
        t += xv * mutant_expected_utility(logic, Strategy::one(pm), Strategy::one(p), xv, e, shape, grp) +
             (1 - xv) * mutant_expected_utility(logic, Strategy::one(pm), Strategy::one(p), 1 - xv, e, shape, grp);
      return t / 2;
    };
    // sorting moves the resident too: the mutant is the resident here
    auto gx = [&](double xv) {
      double t = 0;
      for (Group grp : {Group::First, Group::Second})
        t += xv * mutant_expected_utility(logic, Strategy::one(p), Strategy::one(p), xv, e, shape, grp) +
             (1 - xv) * mutant_expected_utility(logic, Strategy::one(p), Strategy::one(p), 1 - xv, e, shape, grp);
      return t / 2;
    };
    const double sp = selection_gradient(logic, p, chi, e, shape);
    const double sx = sorting_gradient(logic, p, chi, e, shape);
    for (double h : {1e-5, 1e-7}) {
      const double fp = (g(p + h, x) - g(p - h, x)) / (2 * h);
      const double fx = (gx(x + h) - gx(x - h)) / (2 * h);
      for (auto [lib, ind] : {std::pair{sp, fp}, std::pair{sx, fx}}) {
        if (std::abs(lib) <= 1e-8) continue;
        ++compared;
        const double rel = std::abs(lib - ind) / std::abs(lib);
        worst = std::max(worst, rel);
        if (rel > 1e-3) ++bad;
      }
    }
  }
  return {bad == 0 && compared > 0,
          fmt("%d/%d comparisons within relative 1e-3; worst %.2e", compared - bad, compared, worst)};
}

std::string describe(const std::vector<Equilibrium>& eq) {
  std::string s;
  for (const auto& q : eq)
    s += fmt("%s%.4f(%s)", s.empty() ? "" : " ", q.p_star, q.stability == Stability::Stable ? "s" : "u");
  return s;
}

// 3. bistability structure, group-only logic, SI payoffs
Outcome bistability() {
  const UtilityShape shape;
  auto e = si_preset();
  e.theta = risk_extrema(shape).concave;
  const auto averse = find_equilibria(DecisionLogic::GroupOnly, 1.0, e, shape);
  int stable = 0;
  bool one_stable = false;
  for (const auto& q : averse)
    if (q.stability == Stability::Stable) {
      ++stable;
      one_stable = q.p_star == 1.0;
    }
  const bool ok_averse = stable == 1 && one_stable;

  e.theta = 2.0;
  const auto rich = find_equilibria(DecisionLogic::GroupOnly, 1.0, e, shape);
  int interior_unstable = 0, interior_stable = 0;
  bool zero_stable = false, top_stable = false;
  for (const auto& q : rich) {
    const bool interior = q.p_star > 0 && q.p_star < 1;
    if (interior) (q.stability == Stability::Stable ? interior_stable : interior_unstable)++;
    if (q.p_star == 0.0 && q.stability == Stability::Stable) zero_stable = true;
    if (q.p_star == 1.0 && q.stability == Stability::Stable) top_stable = true;
  }
  const bool ok_rich = zero_stable && top_stable && interior_unstable == 1 && interior_stable == 0;
  return {ok_averse && ok_rich, "theta=x_concave: [" + describe(averse) + "]; theta=2: [" + describe(rich) + "]"};
}

// 4. party-only sorting collapse at high polarization
Outcome sorting_collapse() {
  const UtilityShape shape;
  auto e = si_preset();
  e.theta = 1.5;  // near-linear part of the utility curve
  const auto s = [&](double p, double chi) { return sorting_gradient(DecisionLogic::PartyOnly, p, chi, e, shape); };
  const double a = s(0.95, 0.5), b = s(0.95, -0.5), c = s(0.05, 0.5), d = s(0.05, -0.5);
  const bool ok = a < 0 && b > 0 && c > 0 && d < 0;
  return {ok, fmt("p=0.95: s_x(0.5)=%.3g s_x(-0.5)=%.3g; p=0.05: s_x(0.5)=%.3g s_x(-0.5)=%.3g", a, b, c, d)};
}

SimConfig fig4_config(double alpha) {
  SimConfig c;
  c.n_per_group = 200;
  c.logic = DecisionLogic::GroupOrParty;
  c.econ.beta = 0.01;
  c.econ.multiplier = 1;
  c.econ.theta0 = 0.5;
  c.econ.feedback = true;
  c.econ.alpha = alpha;
  c.chi = 1;
  c.sigma = 10;
  c.mu = 1e-3;
  c.delta = 0.01;
  c.initial_p = 0;
  c.events_per_n = 100;
  c.replicates = 50;
  c.seed = 4;
  return c;
}

// 5. redistribution sweep endpoints
Outcome redistribution() {
  const auto none = run_ensemble(fig4_config(0.0));
  const auto full = run_ensemble(fig4_config(1.0));
  const bool ok = none.final_state.mean_p > 0.8 && full.final_state.mean_p < 0.2 && full.final_state.inequality < 0.1;
  return {ok, fmt("alpha=0: mean p=%.4f (need >0.8); alpha=1: mean p=%.4f (need <0.2), inequality=%.4f (need <0.1)",
                  none.final_state.mean_p, full.final_state.mean_p, full.final_state.inequality)};
}

// 6. analytic escape frequency against seeded simulations
Outcome escape_cross_validation() {
  const UtilityShape shape;
  const double theta0s[] = {1.0, 1.05, 1.1, 1.2, 1.3};
  bool ok = true;
  std::string detail;
  for (double theta0 : theta0s) {
    SimConfig c;
    c.n_per_group = 500;
    c.logic = DecisionLogic::GroupOnly;
    c.econ.feedback = true;
    c.econ.alpha = 0.5;
    c.econ.theta0 = theta0;
    c.chi = 1;
    c.sigma = 10;
    c.mu = 0;
    c.initial_p = 1;
    c.seed_p = 0;
    c.events_per_n = 200;
    c.seed = 600 + static_cast<std::uint64_t>(theta0 * 100);
    const double f = escape_frequency(c.logic, c.chi, c.econ, shape);
    int above = 0, below = 0;
    const bool testable = f + 0.05 <= 1.0 && f - 0.05 >= 0.0;
    if (testable) {
      for (int r = 0; r < 50; ++r) {
        c.seed_fraction = f + 0.05;
        if (run_trajectory(c, r).mean_p.back() < 0.5) ++above;
        c.seed_fraction = f - 0.05;
        if (run_trajectory(c, 1000 + r).mean_p.back() >= 0.5) ++below;
      }
    }
    const bool here = testable && above >= 45 && below >= 45;
    ok = ok && here;
    detail += fmt("%stheta0=%.2f f*=%.3f flip %d/50 hold %d/50", detail.empty() ? "" : "; ", theta0, f, above, below);
  }
  return {ok, detail};
}

// 7. mutation-driven escape under a fixed poor environment
Outcome shock_escape() {
  auto run = [](double theta) {
    SimConfig c;
    c.n_per_group = 200;
    c.logic = DecisionLogic::GroupOrParty;
    c.econ = si_preset();
    c.econ.theta = theta;
    c.chi = 1;
    c.initial_p = 1;
    c.events_per_n = 200;
    c.replicates = 50;
    c.seed = 12;
    return run_ensemble(c).final_state.mean_p;
  };
  const double low = run(-1.5), high = run(1.5);
  return {low < 0.2 && high > 0.9,
          fmt("theta=-1.5: mean p=%.4f (need <0.2); theta=1.5: mean p=%.4f (need >0.9)", low, high)};
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// 8. CLI output independent of worker count
Outcome determinism() {
  namespace fs = std::filesystem;
  const fs::path root = fs::temp_directory_path() / "polariscope_acceptance";
  fs::remove_all(root);
  struct Case {
    const char* command;
    std::string extra;
  };
  const std::vector<Case> cases = {
      {"phase-portrait", ""},
      {"equilibria", "--set theta=2 --set profile=si --set logic=group-only"},
      {"escape", "--set feedback=true --set alpha=0.5"},
      {"invade", "--set theta=-0.13 --set grid_p=9 --set grid_chi=9"},
      {"trajectory", "--set N=100 --set events_per_n=20 --set mu=0.01"},
      {"ensemble", "--set N=60 --set events_per_n=10 --set replicates=8 --set mu=0.01 --set feedback=true --set "
                   "alpha=0.3"},
      {"sweep", "--set sweep_param=alpha --set sweep_steps=4 --set sweep_of=ensemble --set N=40 --set "
                "events_per_n=5 --set replicates=4"},
  };
  int same = 0;
  std::string failed;
  for (const auto& c : cases) {
    std::string first;
    bool ok = true;
    for (int threads : {1, 8}) {
      const fs::path dir = root / (std::string(c.command) + "_" + std::to_string(threads));
      const std::string cmd = std::string(POLARISCOPE_CLI) + " " + c.command + " " + c.extra +
                              " --seed 4242 --threads " + std::to_string(threads) + " --out " + dir.string() +
                              " > /dev/null 2>&1";
      if (std::system(cmd.c_str()) != 0) {
        ok = false;
        break;
      }
      const auto csv = slurp(dir / (std::string(c.command) + ".csv"));
      if (csv.empty()) ok = false;
      if (threads == 1) first = csv;
      else if (csv != first) ok = false;
    }
    if (ok) ++same;
    else failed += std::string(failed.empty() ? "" : ", ") + c.command;
  }
  fs::remove_all(root);
  return {same == static_cast<int>(cases.size()),
          fmt("%d/%zu commands byte-identical at 1 vs 8 threads%s%s", same, cases.size(),
              failed.empty() ? "" : "; differing or failing: ", failed.c_str())};
}

struct Criterion {
  int id;
  const char* name;
  double budget_s;  // 0 means no runtime limit
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> all = {
      {1, "oracle equivalence (expected utility)", 120, oracle_equivalence},
      {2, "gradient consistency", 60, gradient_consistency},
      {3, "bistability structure", 0, bistability},
      {4, "party-only sorting collapse", 0, sorting_collapse},
      {5, "redistribution sweep", 600, redistribution},
      {6, "escape-frequency cross-validation", 600, escape_cross_validation},
      {7, "shock escape", 300, shock_escape},
      {8, "determinism across thread counts", 0, determinism},
  };
  std::set<int> wanted;
  for (int i = 1; i < argc; ++i) wanted.insert(std::atoi(argv[i]));

  int failures = 0;
  for (const auto& c : all) {
    if (!wanted.empty() && !wanted.count(c.id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (c.budget_s > 0 && secs > c.budget_s) {
      o.pass = false;
      o.detail += fmt("; runtime %.1fs over the %.0fs limit", secs, c.budget_s);
    }
    if (!o.pass) ++failures;
    std::printf("criterion %d [%s] %s: %s (%.1fs)\n", c.id, o.pass ? "PASS" : "FAIL", c.name, o.detail.c_str(), secs);
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
