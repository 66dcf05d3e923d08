#pragma once

// Rate sweeps over step sizes and best-step search.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "pepcmp/closed_form.hpp"
#include "pepcmp/config.hpp"
#include "pepcmp/gram_problem.hpp"
#include "pepcmp/quad_oracle.hpp"

namespace pepcmp {

struct PepRate {
  bool ok = false;
  double rate = 0.0;
  std::string message;  // solver diagnosis when !ok
};

/// Worst-case k-step contraction factor by the performance estimation SDP.
inline PepRate pep_rate(const MethodSpec& method, const Problem& problem, double tol = 1e-8,
                        const std::string& sdpa_dump = {}) {
  const ContractionSetup setup = contraction_setup(method, problem);
  const GramProblem gp = assemble(setup);
  if (!sdpa_dump.empty()) write_sdpa(gp, sdpa_dump);
  const Solution sol = solve(gp, tol);
  if (!sol.optimal()) return {false, 0.0, std::string(sdp::to_string(sol.status)) + ": " + sol.message};
  return {true, std::sqrt(std::max(0.0, sol.value)), sol.message};
}

/// Closed-form rates available for (method, problem), labelled by engine name.
inline std::vector<std::pair<std::string, RateBound>> closed_form_rates(const MethodSpec& method,
                                                                        const Problem& problem) {
  std::vector<std::pair<std::string, RateBound>> out;
  const auto* sp = std::get_if<SumProblem>(&problem);
  if (sp == nullptr) return out;
  const double tau = method.tau;
  auto power = [&](RateBound r) {
    r.value = std::pow(r.value, method.k_steps);
    return r;
  };
  switch (method.kind) {
    case MethodKind::GM: out.emplace_back("closed_form", power(rate_gm(tau, problem))); break;
    case MethodKind::FBS1: out.emplace_back("closed_form", power(rate_fbs1(tau, problem))); break;
    case MethodKind::FBS2: out.emplace_back("closed_form", power(rate_fbs2(tau, problem))); break;
    case MethodKind::PRS: out.emplace_back("closed_form", power(rate_prs(tau, problem))); break;
    case MethodKind::DRS:
      // The upper bound holds per step; for k > 1 it is only reported at k = 1.
      if (sp->g_class.mu() == 0.0 && method.k_steps == 1) {
        out.emplace_back("closed_form_upper", rate_drs_upper(tau, problem));
      }
      out.emplace_back("closed_form_corner", power(rate_drs_corner(tau, problem)));
      break;
    default: break;
  }
  return out;
}

struct Sample {
  double tau = 0.0;
  std::optional<double> sigma;
  std::optional<double> rate;  // empty when skipped or failed
  bool failed = false;         // solver failure (as opposed to an inadmissible step)
  std::string note;
};

struct RateCurve {
  std::string method;  // method name plus variant label
  MethodKind kind = MethodKind::GM;
  std::string engine;
  std::uint64_t fingerprint = 0;
  std::vector<Sample> samples;  // strictly increasing tau
};

struct SweepOptions {
  int workers = 1;
  std::string sdpa_dir;  // when set, every PEP is dumped there
  std::function<void(const std::string&)> log;
};

namespace detail {

/// Runs job(i) for i in [0, n) on `workers` threads; results must be written by index.
inline void parallel_for(int n, int workers, const std::function<void(int)>& job) {
  workers = std::max(1, std::min(workers, n));
  if (workers == 1) {
    for (int i = 0; i < n; ++i) job(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (int i = next++; i < n; i = next++) job(i);
    });
  }
  for (auto& t : pool) t.join();
}

inline std::string sample_tag(const std::string& method, double tau) {
  return method + " tau=" + config_detail::format_number(tau);
}

}  // namespace detail

/// Computes every (variant, method, tau, engine) sample of the configuration.
/// Curves come back sorted by (method, engine) and each curve by tau.
inline std::vector<RateCurve> sweep(const ExperimentConfig& cfg, const SweepOptions& opt = {}) {
  auto log = [&](const std::string& s) {
    if (opt.log) opt.log(s);
  };
  struct Job {
    const Variant* variant;
    MethodKind kind;
    double tau;
  };
  std::vector<Job> jobs;
  for (const auto& v : cfg.variants)
    for (MethodKind m : cfg.methods)
      for (double tau : cfg.grid_for(m)) jobs.push_back({&v, m, tau});

  struct Output {
    std::optional<double> sigma;
    bool admissible = false;
    std::string reason;
    std::vector<std::pair<std::string, Sample>> rows;  // engine -> sample
  };
  std::vector<Output> outputs(jobs.size());
  const bool want_pep = std::find(cfg.engines.begin(), cfg.engines.end(), Engine::Pep) != cfg.engines.end();
  const bool want_cf =
      std::find(cfg.engines.begin(), cfg.engines.end(), Engine::ClosedForm) != cfg.engines.end();
  const bool want_quad =
      std::find(cfg.engines.begin(), cfg.engines.end(), Engine::QuadOracle) != cfg.engines.end();

  detail::parallel_for(static_cast<int>(jobs.size()), opt.workers, [&](int i) {
    const Job& job = jobs[static_cast<size_t>(i)];
    Output& out = outputs[static_cast<size_t>(i)];
    const Problem& problem = job.variant->problem;
    MethodSpec spec{job.kind, job.tau, cfg.sigma_for(job.kind).sigma(job.kind, job.tau, problem), cfg.k_steps};
    out.sigma = spec.sigma;
    out.reason = validate(spec, problem);
    out.admissible = out.reason.empty();
    if (!out.admissible) return;
    auto base = [&] {
      Sample s;
      s.tau = job.tau;
      s.sigma = spec.sigma;
      return s;
    };
    if (want_pep) {
      Sample s = base();
      std::string dump;
      if (!opt.sdpa_dir.empty()) {
        dump = opt.sdpa_dir + "/" + std::string(to_string(job.kind)) + job.variant->label + "_tau" +
               config_detail::format_number(job.tau) + ".dat-s";
      }
      try {
        const PepRate r = pep_rate(spec, problem, cfg.tol, dump);
        if (r.ok) {
          s.rate = r.rate;
          s.note = r.message;
        } else {
          s.failed = true;
          s.note = r.message;
        }
      } catch (const std::exception& e) {
        s.failed = true;
        s.note = e.what();
      }
      out.rows.emplace_back("pep", std::move(s));
    }
    if (want_cf) {
      for (auto& [engine, bound] : closed_form_rates(spec, problem)) {
        Sample s = base();
        s.rate = bound.value;
        out.rows.emplace_back(engine, std::move(s));
      }
    }
    if (want_quad) {
      Sample s = base();
      s.rate = quad_worst_rate(spec, problem, cfg.quad_grid).rate;
      out.rows.emplace_back("quad_oracle", std::move(s));
    }
  });

  // Engines available per (variant, method), so skipped steps get a row in each.
  auto engines_for = [&](const Variant& v, MethodKind m) {
    std::vector<std::string> names;
    if (want_pep) names.push_back("pep");
    if (want_cf) {
      if (const auto* sp = std::get_if<SumProblem>(&v.problem)) {
        if (m == MethodKind::DRS) {
          if (sp->g_class.mu() == 0.0 && cfg.k_steps == 1) names.push_back("closed_form_upper");
          names.push_back("closed_form_corner");
        } else if (!is_primal_dual(m)) {
          names.push_back("closed_form");
        }
      }
    }
    if (want_quad) names.push_back("quad_oracle");
    return names;
  };

  std::vector<RateCurve> curves;
  size_t j = 0;
  for (const auto& v : cfg.variants) {
    for (MethodKind m : cfg.methods) {
      const std::string label = std::string(to_string(m)) + v.label;
      const auto engines = engines_for(v, m);
      if (want_cf && engines.size() == static_cast<size_t>(want_pep) + static_cast<size_t>(want_quad)) {
        log("note: no closed form for " + label);
      }
      std::vector<RateCurve> local;
      for (const auto& e : engines) local.push_back({label, m, e, fingerprint(v.problem), {}});
      for (size_t t = 0; t < cfg.grid_for(m).size(); ++t, ++j) {
        const Output& out = outputs[j];
        if (!out.admissible) {
          log("skip " + detail::sample_tag(label, jobs[j].tau) + ": " + out.reason);
          std::optional<double> sigma;
          if (out.sigma && *out.sigma > 0.0 && std::isfinite(*out.sigma)) sigma = out.sigma;
          for (auto& c : local) c.samples.push_back({jobs[j].tau, sigma, std::nullopt, false, out.reason});
          continue;
        }
        for (const auto& [engine, sample] : out.rows) {
          if (sample.failed) log("solver failure " + detail::sample_tag(label, jobs[j].tau) + ": " + sample.note);
          for (auto& c : local) {
            if (c.engine == engine) c.samples.push_back(sample);
          }
        }
      }
      for (auto& c : local) curves.push_back(std::move(c));
    }
  }
  std::stable_sort(curves.begin(), curves.end(), [](const RateCurve& a, const RateCurve& b) {
    return a.method != b.method ? a.method < b.method : a.engine < b.engine;
  });
  return curves;
}

inline bool any_failure(const std::vector<RateCurve>& curves) {
  for (const auto& c : curves)
    for (const auto& s : c.samples)
      if (s.failed) return true;
  return false;
}

struct BestChoice {
  MethodKind method = MethodKind::GM;
  double tau = 0.0;
  double rate = 0.0;
  bool failures = false;  // some PEP evaluation failed along the way
};

struct BestResult {
  std::vector<BestChoice> per_method;  // in method-list order; methods with no admissible tau omitted
  BestChoice best;
};

/// Grid search plus golden-section refinement (in log tau) of each method's
/// PEP rate over [tau_min, tau_max]; ties go to the smaller tau, then to the
/// earlier method.
inline BestResult find_best(const ExperimentConfig& cfg, const Variant& variant, const BestSearch& search,
                            int workers = 1) {
  if (!(search.tau_min > 0.0) || !(search.tau_max >= search.tau_min)) {
    throw ConfigError("find_best: empty tau interval");
  }
  BestResult result;
  bool have = false;
  const Problem& problem = variant.problem;
  for (MethodKind kind : search.methods) {
    auto spec_at = [&](double tau) {
      return MethodSpec{kind, tau, cfg.sigma_for(kind).sigma(kind, tau, problem), cfg.k_steps};
    };
    bool failures = false;
    auto rate_at = [&](double tau) -> std::optional<double> {
      const MethodSpec spec = spec_at(tau);
      if (!validate(spec, problem).empty()) return std::nullopt;
      const PepRate r = pep_rate(spec, problem, cfg.tol);
      if (!r.ok) {
        failures = true;
        return std::nullopt;
      }
      return r.rate;
    };
    const int n = search.grid;
    std::vector<double> taus(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
      taus[static_cast<size_t>(i)] =
          n == 1 ? search.tau_min : search.tau_min * std::pow(search.tau_max / search.tau_min, double(i) / (n - 1));
    }
    std::vector<std::optional<double>> rates(taus.size());
    std::vector<char> failed(taus.size(), 0);
    detail::parallel_for(n, workers, [&](int i) {
      const MethodSpec spec = spec_at(taus[static_cast<size_t>(i)]);
      if (!validate(spec, problem).empty()) return;
      const PepRate r = pep_rate(spec, problem, cfg.tol);
      if (r.ok) rates[static_cast<size_t>(i)] = r.rate;
      else failed[static_cast<size_t>(i)] = 1;
    });
    failures = std::find(failed.begin(), failed.end(), 1) != failed.end();
    int bi = -1;
    for (int i = 0; i < n; ++i) {
      if (rates[static_cast<size_t>(i)] && (bi < 0 || *rates[static_cast<size_t>(i)] < *rates[static_cast<size_t>(bi)])) {
        bi = i;
      }
    }
    if (bi < 0) continue;
    double best_tau = taus[static_cast<size_t>(bi)];
    double best_rate = *rates[static_cast<size_t>(bi)];

    // Golden section on the bracket around the best grid point.
    const int lo_i = std::max(0, bi - 1), hi_i = std::min(n - 1, bi + 1);
    double lo = std::log(taus[static_cast<size_t>(lo_i)]), hi = std::log(taus[static_cast<size_t>(hi_i)]);
    const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
    auto eval = [&](double s) {
      auto r = rate_at(std::exp(s));
      return r ? *r : std::numeric_limits<double>::infinity();
    };
    double x1 = hi - phi * (hi - lo), x2 = lo + phi * (hi - lo);
    double f1 = eval(x1), f2 = eval(x2);
    while (hi - lo > search.resolution) {
      if (f1 <= f2) {
        hi = x2;
        x2 = x1;
        f2 = f1;
        x1 = hi - phi * (hi - lo);
        f1 = eval(x1);
      } else {
        lo = x1;
        x1 = x2;
        f1 = f2;
        x2 = lo + phi * (hi - lo);
        f2 = eval(x2);
      }
    }
    for (auto [s, f] : {std::pair{x1, f1}, std::pair{x2, f2}}) {
      if (f < best_rate || (f == best_rate && std::exp(s) < best_tau)) {
        best_rate = f;
        best_tau = std::exp(s);
      }
    }
    const BestChoice choice{kind, best_tau, best_rate, failures};
    result.per_method.push_back(choice);
    const double tie = 1e-9;
    if (!have || best_rate < result.best.rate - tie ||
        (std::abs(best_rate - result.best.rate) <= tie && best_tau < result.best.tau)) {
      result.best = choice;
      have = true;
    }
  }
  if (!have) throw ConfigError("find_best: no admissible step size in [tau_min, tau_max] for any method");
  return result;
}

}  // namespace pepcmp
