#pragma once

// Analytic contraction factors of the primal splitting methods on f + g with
// f in F_{rho, 1/alpha} and g in F_{mu, 1/beta}.
//
// The corner sets are a in {rho, 1/alpha} and b in {mu, 1/beta}. Infinite
// curvatures are handled through the prox multiplier p(t) = 1/(1 + tau t),
// which tends to 0 as t grows.

#include <algorithm>
#include <cmath>
#include <string>
#include <variant>

#include "pepcmp/core_model.hpp"

namespace pepcmp {

enum class BoundKind { Upper, Lower, Exact };

inline std::string_view to_string(BoundKind k) {
  switch (k) {
    case BoundKind::Upper: return "upper";
    case BoundKind::Lower: return "lower";
    case BoundKind::Exact: return "exact";
  }
  return "?";
}

struct RateBound {
  double value = 0.0;
  BoundKind kind = BoundKind::Exact;
};

namespace detail {

inline const SumProblem& require_sum(const Problem& problem, const char* who) {
  const auto* sp = std::get_if<SumProblem>(&problem);
  if (sp == nullptr) throw InvalidArgument(std::string(who) + ": needs a sum problem f + g");
  return *sp;
}

inline void require_admissible(MethodKind kind, double tau, const Problem& problem, const char* who) {
  if (!admissible_step_range(kind, problem).contains(tau)) {
    throw InvalidArgument(std::string(who) + ": tau outside " +
                          admissible_step_range(kind, problem).describe());
  }
}

// 1/(1 + tau t), 0 at t = inf.
inline double prox_mult(double tau, double t) { return std::isinf(t) ? 0.0 : 1.0 / (1.0 + tau * t); }

// (1 - tau t)/(1 + tau t) = 2 p - 1.
inline double reflect_mult(double tau, double t) { return 2.0 * prox_mult(tau, t) - 1.0; }

// (1 + tau^2 a b)/((1 + tau a)(1 + tau b)) = p_a p_b + (1 - p_a)(1 - p_b).
inline double drs_mult(double tau, double a, double b) {
  const double pa = prox_mult(tau, a), pb = prox_mult(tau, b);
  return pa * pb + (1.0 - pa) * (1.0 - pb);
}

}  // namespace detail

/// max{|1 - tau(rho + mu)|, |1 - tau(1/alpha + 1/beta)|}.
inline RateBound rate_gm(double tau, const Problem& problem) {
  const auto& p = detail::require_sum(problem, "rate_gm");
  detail::require_admissible(MethodKind::GM, tau, problem, "rate_gm");
  const double lo = std::abs(1.0 - tau * (p.f_class.mu() + p.g_class.mu()));
  const double hi = std::abs(1.0 - tau * (p.f_class.L() + p.g_class.L()));
  return {std::max(lo, hi), BoundKind::Exact};
}

/// max{|1 - tau rho|, |1 - tau/alpha|} / (1 + tau mu).
inline RateBound rate_fbs1(double tau, const Problem& problem) {
  const auto& p = detail::require_sum(problem, "rate_fbs1");
  detail::require_admissible(MethodKind::FBS1, tau, problem, "rate_fbs1");
  const double m = std::max(std::abs(1.0 - tau * p.f_class.mu()), std::abs(1.0 - tau * p.f_class.L()));
  return {m / (1.0 + tau * p.g_class.mu()), BoundKind::Exact};
}

/// max{|1 - tau mu|, |1 - tau/beta|} / (1 + tau rho).
inline RateBound rate_fbs2(double tau, const Problem& problem) {
  const auto& p = detail::require_sum(problem, "rate_fbs2");
  detail::require_admissible(MethodKind::FBS2, tau, problem, "rate_fbs2");
  const double m = std::max(std::abs(1.0 - tau * p.g_class.mu()), std::abs(1.0 - tau * p.g_class.L()));
  return {m / (1.0 + tau * p.f_class.mu()), BoundKind::Exact};
}

/// max_a |1 - tau a|/(1 + tau a) * max_b |1 - tau b|/(1 + tau b).
inline RateBound rate_prs(double tau, const Problem& problem) {
  const auto& p = detail::require_sum(problem, "rate_prs");
  detail::require_admissible(MethodKind::PRS, tau, problem, "rate_prs");
  auto side = [tau](const FunctionClass& c) {
    return std::max(std::abs(detail::reflect_mult(tau, c.mu())), std::abs(detail::reflect_mult(tau, c.L())));
  };
  return {side(p.f_class) * side(p.g_class), BoundKind::Exact};
}

/// min{(1 + r_PRS)/2, (1 + tau^2 rho/beta)/((1 + tau rho)(1 + tau/beta))}; mu = 0 only.
inline RateBound rate_drs_upper(double tau, const Problem& problem) {
  const auto& p = detail::require_sum(problem, "rate_drs_upper");
  detail::require_admissible(MethodKind::DRS, tau, problem, "rate_drs_upper");
  if (p.g_class.mu() > 0.0) throw InvalidArgument("rate_drs_upper: only defined for mu = 0");
  const double prs = rate_prs(tau, problem).value;
  const double corner = detail::drs_mult(tau, p.f_class.mu(), p.g_class.L());
  return {std::min(0.5 * (1.0 + prs), corner), BoundKind::Upper};
}

/// max over corners (a, b) of (1 + tau^2 a b)/((1 + tau a)(1 + tau b)).
inline RateBound rate_drs_corner(double tau, const Problem& problem) {
  const auto& p = detail::require_sum(problem, "rate_drs_corner");
  detail::require_admissible(MethodKind::DRS, tau, problem, "rate_drs_corner");
  double best = 0.0;
  for (double a : {p.f_class.mu(), p.f_class.L()})
    for (double b : {p.g_class.mu(), p.g_class.L()}) best = std::max(best, detail::drs_mult(tau, a, b));
  return {best, BoundKind::Lower};
}

}  // namespace pepcmp
