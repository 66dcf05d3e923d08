#pragma once

// Interpolation conditions.
//
// Given sampled (point, gradient, value) triples, `class_constraints` emits
// the affine inequalities that are necessary and sufficient for a function of
// F_{mu,L} to pass through them. `operator_constraints` does the same for
// pairs (x, Mx) and (u, M^T u) of a linear operator with ||M|| <= L.

#include <string>
#include <vector>

#include "pepcmp/core_model.hpp"
#include "pepcmp/linear_expr.hpp"

namespace pepcmp {

using FuncId = int;

struct EvalRecord {
  LinearExpr point;
  LinearExpr grad;
  ValueId value;
  FuncId func;
};

enum class OperatorSide { Forward, Adjoint };

struct OperatorRecord {
  LinearExpr input;
  LinearExpr output;
  OperatorSide side;
};

enum class Sense { GreaterEqualZero, EqualZero };

struct AffineConstraint {
  GramForm form;
  Sense sense = Sense::GreaterEqualZero;
  std::string label;
};

/// Square matrix of affine forms required to be positive semidefinite.
struct AffinePsdBlock {
  int size = 0;
  std::vector<GramForm> entries;  // row-major, symmetric
  std::string label;

  const GramForm& at(int i, int j) const { return entries[static_cast<size_t>(i * size + j)]; }

  Eigen::MatrixXd evaluate(const Eigen::MatrixXd& gram, const Eigen::VectorXd& values) const {
    Eigen::MatrixXd S(size, size);
    for (int i = 0; i < size; ++i)
      for (int j = 0; j < size; ++j) S(i, j) = at(i, j).evaluate(gram, values);
    return S;
  }
};

/// Conjugation swaps the moduli: (mu, L) -> (1/L, 1/mu), with 1/inf = 0 and 1/0 = inf.
inline FunctionClass conjugate_class(const FunctionClass& c) {
  const double mu = c.smooth() ? 1.0 / c.L() : 0.0;
  const double L = c.mu() > 0.0 ? 1.0 / c.mu() : kInf;
  return FunctionClass(mu, L);
}

/// For every ordered pair (i, j), i != j:
///   f_i >= f_j + <g_j, x_i - x_j>
///          + 1/(2(1 - mu/L)) [ |g_i - g_j|^2 / L + mu |x_i - x_j|^2
///                              - 2 mu/L <g_j - g_i, x_j - x_i> ]
/// written as `form >= 0`. Terms carrying 1/L vanish exactly when L = inf.
inline std::vector<AffineConstraint> class_constraints(const std::vector<EvalRecord>& records,
                                                       const FunctionClass& cls) {
  std::vector<AffineConstraint> out;
  const size_t n = records.size();
  if (n < 2) return out;
  for (size_t k = 1; k < n; ++k) {
    if (records[k].func != records[0].func) {
      throw InvalidArgument("class_constraints: records belong to different functions");
    }
  }
  const double inv_L = cls.inv_L();
  const double mu = cls.mu();
  const double scale = 1.0 / (2.0 * (1.0 - mu * inv_L));
  out.reserve(n * (n - 1));
  for (size_t i = 0; i < n; ++i) {
    for (size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      const EvalRecord& ri = records[i];
      const EvalRecord& rj = records[j];
      const LinearExpr dx = ri.point - rj.point;
      const LinearExpr dg = ri.grad - rj.grad;
      GramForm form = GramForm::value(ri.value) + GramForm::value(rj.value, -1.0);
      form += -1.0 * GramForm::inner(rj.grad, dx);
      GramForm curv;
      if (inv_L > 0.0) curv += inv_L * GramForm::sqnorm(dg);
      if (mu > 0.0) {
        curv += mu * GramForm::sqnorm(dx);
        // <g_j - g_i, x_j - x_i> = <dg, dx>
        if (inv_L > 0.0) curv += (-2.0 * mu * inv_L) * GramForm::inner(dg, dx);
      }
      form += (-scale) * curv;
      out.push_back({std::move(form), Sense::GreaterEqualZero,
                     "interp f" + std::to_string(ri.func) + " (" + std::to_string(i) + "," +
                         std::to_string(j) + ")"});
    }
  }
  return out;
}

struct OperatorConstraints {
  std::vector<AffineConstraint> equalities;
  std::vector<AffinePsdBlock> blocks;
};

namespace detail {
inline AffinePsdBlock dominance_block(const std::vector<const OperatorRecord*>& recs, double L2,
                                      const std::string& label) {
  AffinePsdBlock b;
  b.size = static_cast<int>(recs.size());
  b.label = label;
  b.entries.resize(recs.size() * recs.size());
  for (size_t i = 0; i < recs.size(); ++i) {
    for (size_t j = 0; j < recs.size(); ++j) {
      b.entries[i * recs.size() + j] = L2 * GramForm::inner(recs[i]->input, recs[j]->input) -
                                       GramForm::inner(recs[i]->output, recs[j]->output);
    }
  }
  return b;
}
}  // namespace detail

/// Interpolation by a linear operator with ||M|| <= L:
///   <y_i, u_j> = <x_i, v_j>            for forward (x_i, y_i), adjoint (u_j, v_j)
///   L^2 Gram(x) - Gram(y) >= 0,  L^2 Gram(u) - Gram(v) >= 0   (PSD)
inline OperatorConstraints operator_constraints(const std::vector<OperatorRecord>& records,
                                                const OperatorBound& op) {
  std::vector<const OperatorRecord*> fwd, adj;
  for (const auto& r : records) (r.side == OperatorSide::Forward ? fwd : adj).push_back(&r);
  OperatorConstraints out;
  for (size_t i = 0; i < fwd.size(); ++i) {
    for (size_t j = 0; j < adj.size(); ++j) {
      out.equalities.push_back(
          {GramForm::inner(fwd[i]->output, adj[j]->input) -
               GramForm::inner(fwd[i]->input, adj[j]->output),
           Sense::EqualZero, "op consistency (" + std::to_string(i) + "," + std::to_string(j) + ")"});
    }
  }
  const double L2 = op.L_op() * op.L_op();
  if (!fwd.empty()) out.blocks.push_back(detail::dominance_block(fwd, L2, "op forward norm"));
  if (!adj.empty()) out.blocks.push_back(detail::dominance_block(adj, L2, "op adjoint norm"));
  return out;
}

inline OperatorConstraints operator_constraints(const std::vector<OperatorRecord>& forward,
                                                const std::vector<OperatorRecord>& adjoint,
                                                const OperatorBound& op) {
  for (const auto& r : forward) {
    if (r.side != OperatorSide::Forward) throw InvalidArgument("operator_constraints: expected forward record");
  }
  for (const auto& r : adjoint) {
    if (r.side != OperatorSide::Adjoint) throw InvalidArgument("operator_constraints: expected adjoint record");
  }
  std::vector<OperatorRecord> all(forward);
  all.insert(all.end(), adjoint.begin(), adjoint.end());
  return operator_constraints(all, op);
}

}  // namespace pepcmp
