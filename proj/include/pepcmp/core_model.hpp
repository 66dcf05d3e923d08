#pragma once

// Function classes, problem configurations and method specifications.
//
// Parameters are always stored as (mu, L) moduli. A class F_{mu,L} holds the
// mu-strongly convex, L-smooth convex functions; L may be +inf, in which case
// the class is the (possibly strongly) convex nonsmooth one.

#include <cmath>
#include <limits>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>

namespace pepcmp {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class FunctionClass {
 public:
  FunctionClass(double mu, double L) : mu_(mu), L_(L) {
    if (!std::isfinite(mu) || mu < 0.0) {
      throw InvalidArgument("function class: mu must be finite and >= 0");
    }
    if (std::isnan(L) || L <= 0.0) {
      throw InvalidArgument("function class: L must be > 0 or +inf");
    }
    if (!(mu < L)) {
      throw InvalidArgument("function class: requires mu < L");
    }
  }

  double mu() const { return mu_; }
  double L() const { return L_; }
  bool smooth() const { return std::isfinite(L_); }

  /// 1/L with the convention 1/inf = 0.
  double inv_L() const { return smooth() ? 1.0 / L_ : 0.0; }

  bool contains(const FunctionClass& other) const {
    return mu_ <= other.mu_ && other.L_ <= L_;
  }

  friend bool operator==(const FunctionClass&, const FunctionClass&) = default;

 private:
  double mu_;
  double L_;
};

/// Norm bound ||M|| <= L_op on a linear operator.
class OperatorBound {
 public:
  explicit OperatorBound(double L_op) : L_op_(L_op) {
    if (!std::isfinite(L_op) || L_op <= 0.0) {
      throw InvalidArgument("operator bound: L_op must be finite and > 0");
    }
  }
  double L_op() const { return L_op_; }
  friend bool operator==(const OperatorBound&, const OperatorBound&) = default;

 private:
  double L_op_;
};

/// min f(x) + g(x)
struct SumProblem {
  FunctionClass f_class;
  FunctionClass g_class;
};

/// min f(x) + h(Mx)
struct CompositeProblem {
  FunctionClass f_class;
  FunctionClass h_class;
  OperatorBound op;
};

using Problem = std::variant<SumProblem, CompositeProblem>;

inline const FunctionClass& f_class_of(const Problem& p) {
  return std::visit([](const auto& q) -> const FunctionClass& { return q.f_class; }, p);
}

enum class MethodKind { GM, FBS1, FBS2, PRS, DRS, CPM, CVM };

inline constexpr MethodKind kAllMethods[] = {MethodKind::GM,  MethodKind::FBS1, MethodKind::FBS2,
                                             MethodKind::PRS, MethodKind::DRS,  MethodKind::CPM,
                                             MethodKind::CVM};

inline std::string_view to_string(MethodKind kind) {
  switch (kind) {
    case MethodKind::GM: return "GM";
    case MethodKind::FBS1: return "FBS1";
    case MethodKind::FBS2: return "FBS2";
    case MethodKind::PRS: return "PRS";
    case MethodKind::DRS: return "DRS";
    case MethodKind::CPM: return "CPM";
    case MethodKind::CVM: return "CVM";
  }
  return "?";
}

inline std::optional<MethodKind> parse_method(std::string_view name) {
  for (MethodKind k : kAllMethods) {
    if (to_string(k) == name) return k;
  }
  return std::nullopt;
}

inline bool is_primal_dual(MethodKind kind) {
  return kind == MethodKind::CPM || kind == MethodKind::CVM;
}

struct MethodSpec {
  MethodKind kind;
  double tau;
  std::optional<double> sigma;  // CPM and CVM only
  int k_steps = 1;
};

/// Interval of admissible step sizes with explicit endpoint openness.
struct StepRange {
  double lo = 0.0;
  double hi = kInf;
  bool lo_closed = false;
  bool hi_closed = false;

  bool contains(double t) const {
    if (std::isnan(t)) return false;
    bool above = lo_closed ? t >= lo : t > lo;
    bool below = std::isinf(hi) ? true : (hi_closed ? t <= hi : t < hi);
    return above && below;
  }

  bool empty() const { return hi < lo || (hi == lo && !(lo_closed && hi_closed)); }

  std::string describe() const {
    std::ostringstream os;
    os.precision(5);
    os << (lo_closed ? "[" : "(") << lo << ", ";
    if (std::isinf(hi)) {
      os << "inf)";
    } else {
      os << hi << (hi_closed ? "]" : ")");
    }
    return os.str();
  }
};

/// Admissibility of a (tau, sigma) pair for the primal-dual methods.
struct PrimalDualRule {
  MethodKind kind;
  double L_op;
  double f_L;  // smoothness of f (CVM condition)

  /// Range of tau for which some sigma > 0 is admissible.
  StepRange tau_range() const {
    if (kind == MethodKind::CPM) return {};
    // 1/tau - sigma L^2 >= 1/(2 alpha) with sigma > 0 needs tau < 2 alpha.
    if (!std::isfinite(f_L)) return {};
    return {0.0, 2.0 / f_L, false, false};
  }

  bool admissible(double tau, double sigma) const {
    if (!(tau > 0.0) || !(sigma > 0.0) || !std::isfinite(tau) || !std::isfinite(sigma)) {
      return false;
    }
    const double L2 = L_op * L_op;
    if (kind == MethodKind::CPM) return sigma * tau * L2 <= 1.0;
    return 1.0 / tau - sigma * L2 >= 0.5 * f_L;
  }
};

namespace detail {
inline StepRange primal_range(MethodKind kind, const FunctionClass& f, const FunctionClass& g) {
  switch (kind) {
    case MethodKind::GM: {
      const double s = f.L() + g.L();
      return {0.0, std::isfinite(s) ? 2.0 / s : 0.0, false, false};
    }
    case MethodKind::FBS1:
      return {0.0, f.smooth() ? 2.0 / f.L() : 0.0, false, false};
    case MethodKind::FBS2:
      return {0.0, g.smooth() ? 2.0 / g.L() : 0.0, false, true};
    case MethodKind::PRS:
    case MethodKind::DRS:
      return {};
    default:
      break;
  }
  throw InvalidArgument("primal_range: not a primal method");
}

// Class of g = h o M with ||M|| <= L_op: M may be singular, so only
// convexity survives; smoothness scales by L_op^2.
inline FunctionClass composed_class(const CompositeProblem& p) {
  const double L = p.h_class.L() * p.op.L_op() * p.op.L_op();
  return FunctionClass(0.0, L);
}
}  // namespace detail

/// Admissible tau interval for `kind` on `problem`. For CPM/CVM the interval
/// is the tau-projection; use `primal_dual_rule` for the joint (tau, sigma) test.
inline StepRange admissible_step_range(MethodKind kind, const Problem& problem) {
  if (is_primal_dual(kind)) {
    const auto* cp = std::get_if<CompositeProblem>(&problem);
    if (cp == nullptr) {
      throw InvalidArgument(std::string(to_string(kind)) + " requires a composite problem f + h(Mx)");
    }
    return PrimalDualRule{kind, cp->op.L_op(), cp->f_class.L()}.tau_range();
  }
  if (const auto* sp = std::get_if<SumProblem>(&problem)) {
    return detail::primal_range(kind, sp->f_class, sp->g_class);
  }
  const auto& cp = std::get<CompositeProblem>(problem);
  return detail::primal_range(kind, cp.f_class, detail::composed_class(cp));
}

inline PrimalDualRule primal_dual_rule(MethodKind kind, const Problem& problem) {
  const auto* cp = std::get_if<CompositeProblem>(&problem);
  if (!is_primal_dual(kind) || cp == nullptr) {
    throw InvalidArgument("primal_dual_rule: needs CPM/CVM on a composite problem");
  }
  return {kind, cp->op.L_op(), cp->f_class.L()};
}

/// Empty string when `method` may run on `problem`, else the violated condition.
inline std::string validate(const MethodSpec& method, const Problem& problem) {
  if (method.k_steps < 1) return "k_steps must be >= 1";
  if (!std::isfinite(method.tau) || method.tau <= 0.0) return "tau must be finite and > 0";
  StepRange range;
  try {
    range = admissible_step_range(method.kind, problem);
  } catch (const InvalidArgument& e) {
    return e.what();
  }
  if (is_primal_dual(method.kind)) {
    if (!method.sigma) return "sigma required for " + std::string(to_string(method.kind));
    const auto rule = primal_dual_rule(method.kind, problem);
    if (!rule.admissible(method.tau, *method.sigma)) {
      std::ostringstream os;
      if (method.kind == MethodKind::CPM) {
        os << "sigma*tau*||M||^2 = " << (*method.sigma * method.tau * rule.L_op * rule.L_op)
           << " exceeds 1";
      } else {
        os << "1/tau - sigma*||M||^2 < 1/(2 alpha) or sigma <= 0";
      }
      return os.str();
    }
    return {};
  }
  if (method.sigma) return "sigma is only meaningful for CPM/CVM";
  if (!range.contains(method.tau)) {
    std::ostringstream os;
    os.precision(6);
    os << "tau outside " << range.describe();
    return os.str();
  }
  return {};
}

}  // namespace pepcmp
