// Acceptance gate: one PASS/FAIL line per criterion; exit status 1 if any fails.

#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "interp_oracles.hpp"
#include "pepcmp/closed_form.hpp"
#include "pepcmp/config.hpp"
#include "pepcmp/gram_problem.hpp"
#include "pepcmp/quad_oracle.hpp"
#include "pepcmp/sweep.hpp"

using namespace pepcmp;

namespace {

constexpr double kTol = 1e-8;
constexpr double kRateTol = 1e-4;

SumProblem sum(double alpha, double beta, double rho, double mu) {
  return {FunctionClass(rho, 1.0 / alpha), FunctionClass(mu, 1.0 / beta)};
}

// Extraction bookkeeping shared by every PEP solve (criterion 9).
struct ExtractionLog {
  int solves = 0;
  int non_optimal = 0;
  double worst_ratio_error = 0.0;
  int low_rank_solves = 0;
  int max_rank = 0;
};
ExtractionLog g_extract;

struct Pep {
  bool ok = false;
  double rate = 0.0;
};

Pep pep(const MethodSpec& m, const Problem& p, bool low_rank = false) {
  const ContractionSetup setup = contraction_setup(m, p);
  const GramProblem gp = assemble(setup);
  const Solution sol = solve(gp, kTol);
  ++g_extract.solves;
  if (!sol.optimal()) {
    ++g_extract.non_optimal;
    return {};
  }
  const WorstCase wc = extract_worst_case(sol, setup);
  g_extract.worst_ratio_error =
      std::max(g_extract.worst_ratio_error, std::abs(wc.ratio - std::sqrt(std::max(0.0, sol.value))));
  if (low_rank) {
    const Solution lr = solve_low_rank(gp, kTol);
    if (lr.optimal()) {
      ++g_extract.low_rank_solves;
      g_extract.max_rank = std::max(g_extract.max_rank, extract_worst_case(lr, setup).rank);
    } else {
      ++g_extract.non_optimal;
    }
  }
  return {true, std::sqrt(std::max(0.0, sol.value))};
}

using ClosedFn = RateBound (*)(double, const Problem&);

struct Primal {
  MethodKind kind;
  ClosedFn closed;
};
const Primal kExactMethods[] = {{MethodKind::GM, rate_gm},
                                {MethodKind::FBS1, rate_fbs1},
                                {MethodKind::FBS2, rate_fbs2},
                                {MethodKind::PRS, rate_prs}};

// n admissible steps: evenly inside a bounded range, log-spaced over [0.05, 20] otherwise.
std::vector<double> admissible_grid(MethodKind kind, const Problem& p, int n) {
  const StepRange r = admissible_step_range(kind, p);
  std::vector<double> g;
  for (int i = 1; i <= n; ++i) {
    if (std::isfinite(r.hi)) {
      g.push_back(r.hi * i / (n + 0.5));
    } else {
      g.push_back(0.05 * std::pow(400.0, double(i - 1) / (n - 1)));
    }
  }
  return g;
}

std::vector<double> log_grid(double lo, double hi, int n) {
  std::vector<double> g;
  for (int i = 0; i < n; ++i) g.push_back(lo * std::pow(hi / lo, double(i) / (n - 1)));
  return g;
}

struct Verdict {
  bool pass = true;
  std::string detail;
};

char buf[512];

template <typename... A>
std::string fmt(const char* f, A... a) {
  std::snprintf(buf, sizeof buf, f, a...);
  return buf;
}

// Worst |pep - quad| and |quad - closed| over suites 1 and 5, filled by those suites.
double g_quad_pep = 0.0, g_quad_closed = 0.0;
int g_quad_fail = 0;

Verdict exactness_suite(const std::vector<SumProblem>& configs, const std::string& label) {
  double worst = 0.0;
  int fails = 0, n = 0;
  for (const SumProblem& sp : configs) {
    const Problem p = sp;
    for (const Primal& m : kExactMethods) {
      for (double tau : admissible_grid(m.kind, p, 20)) {
        const Pep r = pep({m.kind, tau}, p, label == "1");
        const double closed = m.closed(tau, p).value;
        const double quad = quad_worst_rate({m.kind, tau}, p).rate;
        ++n;
        if (!r.ok) {
          ++fails;
          ++g_quad_fail;
          continue;
        }
        worst = std::max(worst, std::abs(r.rate - closed));
        g_quad_pep = std::max(g_quad_pep, std::abs(r.rate - quad));
        g_quad_closed = std::max(g_quad_closed, std::abs(quad - closed));
      }
    }
  }
  return {fails == 0 && worst <= kRateTol,
          fmt("%d solves, %d failed, max |pep - closed_form| = %.3g", n, fails, worst)};
}

Verdict criterion1() {
  return exactness_suite({sum(1, 5, 0.9, 0), sum(0.1, 1, 0.1, 0), sum(0.1, 0.2, 0.1, 0)}, "1");
}

Verdict criterion2() {
  const Pep r = pep({MethodKind::PRS, 1.0}, sum(0.1, 1, 0.1, 0));
  const double err = std::abs(r.rate - 9.0 / 11.0);
  return {r.ok && err <= kRateTol, fmt("rate %.10f, target 9/11 = %.10f", r.rate, 9.0 / 11.0)};
}

Verdict criterion3() {
  const Problem p = sum(1, 5, 0.1, 0);
  int below = 0, above = 0, fails = 0, n = 0;
  double max_gap = 0.0, gap_tau = 0.0;
  for (double tau : log_grid(0.1, 100.0, 50)) {
    const Pep r = pep({MethodKind::DRS, tau}, p);
    ++n;
    if (!r.ok) {
      ++fails;
      continue;
    }
    const double corner = rate_drs_corner(tau, p).value, upper = rate_drs_upper(tau, p).value;
    below += r.rate < corner - kRateTol;
    above += r.rate > upper + kRateTol;
    if (tau >= 3.0 && tau <= 15.0 && r.rate - corner > max_gap) {
      max_gap = r.rate - corner;
      gap_tau = tau;
    }
  }
  const Pep at20 = pep({MethodKind::DRS, 20.0}, p);
  const double err20 = std::abs(at20.rate - 81.0 / 105.0);
  const bool pass = fails == 0 && below == 0 && above == 0 && at20.ok && err20 <= 1e-3 && max_gap > 1e-2;
  return {pass, fmt("%d steps, %d failed, %d below corner, %d above upper; tau=20 rate %.6f (81/105 = %.6f); "
                    "largest gap in [3, 15] %.4f at tau=%.3g",
                    n, fails, below, above, at20.rate, 81.0 / 105.0, max_gap, gap_tau)};
}

Verdict criterion4() {
  const std::string text =
      "[problem]\nalpha = 0.1\nbeta = 1\nrho = 0.1\nmu = 0\n[sweep]\nmethods = PRS\n"
      "[best]\ntau_min = 0.1\ntau_max = 20\n";
  const ExperimentConfig cfg = parse_config(text, "criterion4");
  const BestResult best = find_best(cfg, cfg.variants[0], *cfg.best);
  const Pep drs = pep({MethodKind::DRS, 3.3}, cfg.variants[0].problem);
  const bool prs_ok = std::abs(best.best.rate - 9.0 / 11.0) <= kRateTol && std::abs(best.best.tau - 1.0) <= 0.05;
  const bool drs_ok = drs.ok && drs.rate <= 0.76 && drs.rate < best.best.rate;
  return {prs_ok && drs_ok,
          fmt("best PRS rate %.6f at tau=%.4f; DRS at tau=3.3 rate %.6f (required <= 0.76, corner %.6f)",
              best.best.rate, best.best.tau, drs.rate, rate_drs_corner(3.3, cfg.variants[0].problem).value)};
}

Verdict criterion5() {
  const Problem p = sum(1, 5, 0.1, 0.1);
  Verdict v = exactness_suite({std::get<SumProblem>(p)}, "5");
  int below = 0, fails = 0;
  for (double tau : admissible_grid(MethodKind::DRS, p, 20)) {
    const Pep r = pep({MethodKind::DRS, tau}, p);
    if (!r.ok) {
      ++fails;
      continue;
    }
    below += r.rate < rate_drs_corner(tau, p).value - kRateTol;
  }
  v.pass = v.pass && below == 0 && fails == 0;
  v.detail += fmt("; DRS: %d failed, %d below corner", fails, below);
  return v;
}

Verdict criterion6() {
  return {g_quad_fail == 0 && g_quad_pep <= kRateTol && g_quad_closed <= 1e-8,
          fmt("over suites 1 and 5: max |quad - pep| = %.3g, max |quad - closed_form| = %.3g, %d unsolved",
              g_quad_pep, g_quad_closed, g_quad_fail)};
}

Verdict criterion7() {
  const Problem flat = sum(1, 5, 0.1, 0);
  const Problem comp = CompositeProblem{FunctionClass(0.1, 1.0), FunctionClass(0.1, 0.2), OperatorBound(1.0)};
  double worst = 0.0;
  int fails = 0;
  for (double tau : log_grid(0.1, 100.0, 15)) {
    const Pep a = pep({MethodKind::DRS, tau}, flat), b = pep({MethodKind::DRS, tau}, comp);
    if (!a.ok || !b.ok) {
      ++fails;
      continue;
    }
    worst = std::max(worst, std::abs(a.rate - b.rate));
  }
  return {fails == 0 && worst <= 1e-3, fmt("15 steps, %d failed, max |composite - sum| = %.3g", fails, worst)};
}

Verdict criterion8() {
  auto problem = [](double delta) {
    return Problem{CompositeProblem{FunctionClass(0.1, 1.0), FunctionClass(delta, 0.2), OperatorBound(1.0)}};
  };
  const Problem p0 = problem(0.0), p1 = problem(0.1);
  const SigmaRule rule;
  int outside = 0, delta_bad = 0, order_bad = 0, fails = 0, n = 0;
  double lo = 1e300, hi = -1e300;
  for (double tau : log_grid(0.05, 1.95, 30)) {
    auto run = [&](MethodKind k, const Problem& p) {
      const Pep r = pep({k, tau, rule.sigma(k, tau, p)}, p);
      ++n;
      if (!r.ok) {
        ++fails;
      } else {
        lo = std::min(lo, r.rate);
        hi = std::max(hi, r.rate);
        outside += !(r.rate > 0.0 && r.rate < 1.0);
      }
      return r;
    };
    const Pep cpm0 = run(MethodKind::CPM, p0), cpm1 = run(MethodKind::CPM, p1);
    const Pep cvm0 = run(MethodKind::CVM, p0), cvm1 = run(MethodKind::CVM, p1);
    if (cpm0.ok && cpm1.ok) delta_bad += cpm1.rate > cpm0.rate + kRateTol;
    if (cpm0.ok && cvm0.ok) order_bad += cpm0.rate > cvm0.rate + kRateTol;
    if (cpm1.ok && cvm1.ok) order_bad += cpm1.rate > cvm1.rate + kRateTol;
  }
  return {fails == 0 && outside == 0 && delta_bad == 0 && order_bad == 0,
          fmt("%d solves, %d failed; rates in [%.6f, %.6f], %d outside (0, 1); "
              "%d with delta=0.1 worse than delta=0; %d with CPM worse than CVM",
              n, fails, lo, hi, outside, delta_bad, order_bad)};
}

Verdict criterion9() {
  const bool pass = g_extract.non_optimal == 0 && g_extract.worst_ratio_error <= 1e-5 && g_extract.max_rank <= 2 &&
                    g_extract.low_rank_solves > 0;
  return {pass, fmt("%d solves, %d non-optimal, max |ratio - sqrt(value)| = %.3g; suite 1 low-rank solves %d, "
                    "max rank %d",
                    g_extract.solves, g_extract.non_optimal, g_extract.worst_ratio_error, g_extract.low_rank_solves,
                    g_extract.max_rank)};
}

Verdict criterion10() {
  using namespace testing_oracles;
  const int T = 200;
  const size_t a = class_soundness_failures(101, T).size();
  const size_t b = class_detection_failures(102, T).size();
  const size_t c = operator_soundness_failures(103, T).size();
  const size_t d = operator_detection_failures(104, T).size();
  return {a + b + c + d == 0,
          fmt("%d trials each; failures: quadratic membership %zu, out-of-class detection %zu, "
              "operator soundness %zu, operator-norm detection %zu",
              T, a, b, c, d)};
}

}  // namespace

int main() {
  const std::pair<const char*, std::function<Verdict()>> criteria[] = {
      {"tightness of GM/FBS1/FBS2/PRS closed forms", criterion1},
      {"PRS spot value 9/11", criterion2},
      {"DRS sandwich and unidentified-regime gap", criterion3},
      {"method selection: DRS beats best PRS", criterion4},
      {"doubly strongly convex formulas", criterion5},
      {"quadratic oracle equivalence", criterion6},
      {"composite DRS gives no improvement", criterion7},
      {"primal-dual rate properties", criterion8},
      {"worst-case extraction round-trip", criterion9},
      {"interpolation oracles", criterion10},
  };
  int failed = 0, index = 0;
  for (const auto& [name, run] : criteria) {
    ++index;
    Verdict v;
    try {
      v = run();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    failed += !v.pass;
    std::printf("criterion %2d %s: %s (%s)\n", index, v.pass ? "PASS" : "FAIL", name, v.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%d criteria passed\n", index - failed, index);
  return failed == 0 ? 0 : 1;
}
