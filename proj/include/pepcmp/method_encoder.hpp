#pragma once

// Symbolic encoding of method iterations.
//
// Each oracle call (gradient, prox, operator application) introduces a fresh
// atom and a record tying it to the function or operator it came from. A prox
// step is encoded through its optimality condition: out = in - step * s with
// s a subgradient of the function at `out`.

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "pepcmp/core_model.hpp"
#include "pepcmp/interp.hpp"
#include "pepcmp/linear_expr.hpp"

namespace pepcmp {

/// Role of each function id inside an encoding.
enum FunctionRole : FuncId { kF = 0, kG = 1, kH = 2, kHConj = 3 };

inline std::string_view role_name(FuncId id) {
  switch (id) {
    case kF: return "f";
    case kG: return "g";
    case kH: return "h";
    case kHConj: return "h*";
    default: return "?";
  }
}

/// Shared atom basis, value variables and records of an encoding.
class Encoder {
 public:
  explicit Encoder(bool composite = false) : composite_(composite) {}

  bool composite() const { return composite_; }
  int atom_count() const { return static_cast<int>(atom_names_.size()); }
  int value_count() const { return value_count_; }
  const std::vector<std::string>& atom_names() const { return atom_names_; }
  const std::map<FuncId, std::vector<EvalRecord>>& eval_records() const { return eval_records_; }
  const std::vector<OperatorRecord>& operator_records() const { return operator_records_; }

  size_t record_count(FuncId func) const {
    auto it = eval_records_.find(func);
    return it == eval_records_.end() ? 0 : it->second.size();
  }

  LinearExpr new_atom(std::string name) {
    atom_names_.push_back(std::move(name));
    return LinearExpr::atom(atom_count() - 1);
  }

  /// Fresh gradient atom g = grad func(point).
  std::pair<LinearExpr, EvalRecord> encode_gradient_eval(FuncId func, const LinearExpr& point) {
    LinearExpr g = new_atom("grad " + std::string(role_name(func)) + "#" +
                            std::to_string(record_count(func)));
    EvalRecord rec{point, g, value_count_++, func};
    eval_records_[func].push_back(rec);
    return {g, rec};
  }

  /// out = prox_{step func}(input), encoded as out = input - step * s, s in d func(out).
  std::pair<LinearExpr, EvalRecord> encode_prox_step(FuncId func, const LinearExpr& input,
                                                     double step) {
    if (!(step > 0.0)) throw InvalidArgument("encode_prox_step: step must be > 0");
    LinearExpr s = new_atom("subgrad " + std::string(role_name(func)) + "#" +
                            std::to_string(record_count(func)));
    LinearExpr out = input - step * s;
    EvalRecord rec{out, s, value_count_++, func};
    eval_records_[func].push_back(rec);
    return {out, rec};
  }

  /// Fresh image atom: M input (forward) or M^T input (adjoint).
  std::pair<LinearExpr, OperatorRecord> encode_operator(const LinearExpr& input, OperatorSide side) {
    if (!composite_) throw InvalidArgument("encode_operator: no linear operator in a sum problem");
    const bool fwd = side == OperatorSide::Forward;
    LinearExpr img = new_atom(std::string(fwd ? "M" : "Mt") + "#" +
                              std::to_string(operator_records_.size()));
    OperatorRecord rec{input, img, side};
    operator_records_.push_back(rec);
    return {img, rec};
  }

  /// grad (h o M)(point) = M^T grad h(M point).
  LinearExpr encode_composite_gradient(const LinearExpr& point) {
    LinearExpr w = encode_operator(point, OperatorSide::Forward).first;
    LinearExpr s = encode_gradient_eval(kH, w).first;
    return encode_operator(s, OperatorSide::Adjoint).first;
  }

  /// y = prox_{step h o M}(input): y + step M^T s = input with s in d h(M y).
  LinearExpr encode_composite_prox(const LinearExpr& input, double step) {
    if (!(step > 0.0)) throw InvalidArgument("encode_composite_prox: step must be > 0");
    // The adjoint image v = M^T s is created first so that y is expressible;
    // its input s is the h-subgradient atom created right after.
    LinearExpr v = new_atom("Mt#" + std::to_string(operator_records_.size()));
    LinearExpr y = input - step * v;
    LinearExpr w = encode_operator(y, OperatorSide::Forward).first;
    LinearExpr s = encode_gradient_eval(kH, w).first;
    operator_records_.push_back(OperatorRecord{s, v, OperatorSide::Adjoint});
    return y;
  }

 private:
  bool composite_;
  std::vector<std::string> atom_names_;
  int value_count_ = 0;
  std::map<FuncId, std::vector<EvalRecord>> eval_records_;
  std::vector<OperatorRecord> operator_records_;
};

/// Primal (and, for CPM/CVM, dual) state of a method.
struct MethodState {
  LinearExpr x;
  std::optional<LinearExpr> u;
};

struct Trajectory {
  MethodState start;
  MethodState output;
};

namespace detail {

inline LinearExpr g_gradient(Encoder& enc, const LinearExpr& p) {
  return enc.composite() ? enc.encode_composite_gradient(p) : enc.encode_gradient_eval(kG, p).first;
}

inline LinearExpr g_prox(Encoder& enc, const LinearExpr& in, double step) {
  return enc.composite() ? enc.encode_composite_prox(in, step) : enc.encode_prox_step(kG, in, step).first;
}

inline MethodState step_once(Encoder& enc, const MethodSpec& m, const MethodState& s) {
  const double tau = m.tau;
  const LinearExpr& x = s.x;
  switch (m.kind) {
    case MethodKind::GM: {
      LinearExpr gf = enc.encode_gradient_eval(kF, x).first;
      LinearExpr gg = g_gradient(enc, x);
      return {x - tau * gf - tau * gg, std::nullopt};
    }
    case MethodKind::FBS1: {
      LinearExpr gf = enc.encode_gradient_eval(kF, x).first;
      return {g_prox(enc, x - tau * gf, tau), std::nullopt};
    }
    case MethodKind::FBS2: {
      LinearExpr gg = g_gradient(enc, x);
      return {enc.encode_prox_step(kF, x - tau * gg, tau).first, std::nullopt};
    }
    case MethodKind::PRS: {
      LinearExpr y = enc.encode_prox_step(kF, x, tau).first;
      LinearExpr z = g_prox(enc, 2.0 * y - x, tau);
      return {2.0 * z - 2.0 * y + x, std::nullopt};
    }
    case MethodKind::DRS: {
      LinearExpr y = enc.encode_prox_step(kF, x, tau).first;
      LinearExpr z = g_prox(enc, 2.0 * y - x, tau);
      return {z - y + x, std::nullopt};
    }
    case MethodKind::CPM:
    case MethodKind::CVM: {
      const double sigma = m.sigma.value();
      const LinearExpr& u = s.u.value();
      LinearExpr mtu = enc.encode_operator(u, OperatorSide::Adjoint).first;
      LinearExpr xp;
      if (m.kind == MethodKind::CPM) {
        xp = enc.encode_prox_step(kF, x - tau * mtu, tau).first;
      } else {
        LinearExpr gf = enc.encode_gradient_eval(kF, x).first;
        xp = x - tau * gf - tau * mtu;
      }
      LinearExpr mx = enc.encode_operator(2.0 * xp - x, OperatorSide::Forward).first;
      LinearExpr up = enc.encode_prox_step(kHConj, u + sigma * mx, sigma).first;
      return {xp, up};
    }
  }
  throw InvalidArgument("step_once: unknown method");
}

}  // namespace detail

/// Encodes `k_steps` iterations of `method` from the given start state.
inline Trajectory encode_method(Encoder& enc, const MethodSpec& method, const Problem& problem,
                                const MethodState& start) {
  if (std::string err = validate(method, problem); !err.empty()) {
    throw InvalidArgument("encode_method: " + err);
  }
  if (is_primal_dual(method.kind) && !start.u) {
    throw InvalidArgument("encode_method: primal-dual method needs a dual start");
  }
  MethodState s = start;
  for (int k = 0; k < method.k_steps; ++k) s = detail::step_once(enc, method, s);
  return {start, s};
}

/// Function classes indexed by the function ids used by the encoder.
inline std::map<FuncId, FunctionClass> function_classes(const MethodSpec& method,
                                                        const Problem& problem) {
  std::map<FuncId, FunctionClass> out;
  if (const auto* sp = std::get_if<SumProblem>(&problem)) {
    out.emplace(kF, sp->f_class);
    out.emplace(kG, sp->g_class);
    return out;
  }
  const auto& cp = std::get<CompositeProblem>(problem);
  out.emplace(kF, cp.f_class);
  if (is_primal_dual(method.kind)) {
    out.emplace(kHConj, conjugate_class(cp.h_class));
  } else {
    out.emplace(kH, cp.h_class);
  }
  return out;
}

/// Two coupled trajectories over a shared basis, plus the metric they induce.
struct ContractionSetup {
  MethodSpec method;
  Problem problem;
  Encoder encoder;
  Trajectory a;
  Trajectory b;
  std::map<FuncId, FunctionClass> classes;
  std::optional<OperatorBound> op;

  /// ||Phi(a) - Phi(b)||^2, joint primal-dual norm when a dual part exists.
  GramForm output_distance() const { return distance(a.output, b.output); }
  /// ||start_a - start_b||^2.
  GramForm start_distance() const { return distance(a.start, b.start); }

  static GramForm distance(const MethodState& p, const MethodState& q) {
    GramForm d = GramForm::sqnorm(p.x - q.x);
    if (p.u && q.u) d += GramForm::sqnorm(*p.u - *q.u);
    return d;
  }
};

inline ContractionSetup contraction_setup(const MethodSpec& method, const Problem& problem) {
  const bool composite = std::holds_alternative<CompositeProblem>(problem);
  Encoder enc(composite);
  const bool pd = is_primal_dual(method.kind);
  MethodState sa{enc.new_atom("x_a"), std::nullopt};
  MethodState sb{enc.new_atom("x_b"), std::nullopt};
  if (pd) {
    sa.u = enc.new_atom("u_a");
    sb.u = enc.new_atom("u_b");
  }
  Trajectory ta = encode_method(enc, method, problem, sa);
  Trajectory tb = encode_method(enc, method, problem, sb);
  std::optional<OperatorBound> op;
  if (const auto* cp = std::get_if<CompositeProblem>(&problem)) op = cp->op;
  return ContractionSetup{method, problem, std::move(enc), std::move(ta), std::move(tb),
                          function_classes(method, problem), op};
}

}  // namespace pepcmp
