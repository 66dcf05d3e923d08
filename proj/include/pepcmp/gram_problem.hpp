#pragma once

// Gram lifting of a contraction PEP and its solution.
//
// Variables are the upper triangle of the Gram matrix G (n x n, PSD) and the
// m function-value variables. Every constraint is affine in these, except the
// PSD blocks (G itself plus the operator dominance blocks), which are affine
// matrix-valued maps required to be PSD.

#include <fstream>
#include <iomanip>
#include <ostream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "pepcmp/interp.hpp"
#include "pepcmp/method_encoder.hpp"
#include "pepcmp/sdp_solver.hpp"

namespace pepcmp {

struct GramProblem {
  int n = 0;  // atoms
  int m = 0;  // value variables
  GramForm objective;  // maximized
  std::vector<AffineConstraint> eq_constraints;
  std::vector<AffineConstraint> ineq_constraints;
  std::vector<AffinePsdBlock> psd_blocks;  // in addition to G itself
  std::vector<std::string> atom_names;
};

struct Solution {
  sdp::Status status = sdp::Status::NumericalFailure;
  double value = 0.0;
  Eigen::MatrixXd gram;
  Eigen::VectorXd values;
  Eigen::VectorXd ineq_duals;  // one per inequality
  Eigen::VectorXd eq_duals;    // one per equality
  std::vector<Eigen::MatrixXd> block_duals;  // G first, then psd_blocks
  double relative_gap = 0.0;
  double primal_infeasibility = 0.0;
  double dual_infeasibility = 0.0;
  int iterations = 0;
  std::string message;

  bool optimal() const { return status == sdp::Status::Optimal; }
};

class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Objective ||Phi a - Phi b||^2, the initial-distance bound and every
/// interpolation condition of the setup.
inline GramProblem assemble(const ContractionSetup& setup, double start_radius_sq = 1.0) {
  const Encoder& enc = setup.encoder;
  GramProblem p;
  p.n = enc.atom_count();
  p.m = enc.value_count();
  p.atom_names = enc.atom_names();
  p.objective = setup.output_distance();
  p.ineq_constraints.push_back({GramForm::constant(start_radius_sq) + (-1.0 * setup.start_distance()),
                                Sense::GreaterEqualZero, "initial distance"});
  for (const auto& [func, records] : enc.eval_records()) {
    auto it = setup.classes.find(func);
    if (it == setup.classes.end()) {
      throw InvalidArgument("assemble: no class for function " + std::string(role_name(func)));
    }
    for (auto& c : class_constraints(records, it->second)) {
      c.label = std::string(role_name(func)) + " " + c.label;
      p.ineq_constraints.push_back(std::move(c));
    }
  }
  if (!enc.operator_records().empty()) {
    if (!setup.op) throw InvalidArgument("assemble: operator records without an operator bound");
    auto oc = operator_constraints(enc.operator_records(), *setup.op);
    for (auto& c : oc.equalities) p.eq_constraints.push_back(std::move(c));
    for (auto& b : oc.blocks) p.psd_blocks.push_back(std::move(b));
  }
  const int n = p.n;
  auto check = [n, &p](const GramForm& f) {
    for (const auto& [k, c] : f.gram_terms()) {
      if (k.first < 0 || k.second >= n) throw InvalidArgument("assemble: inconsistent atom basis");
    }
    for (const auto& [v, c] : f.value_terms()) {
      if (v < 0 || v >= p.m) throw InvalidArgument("assemble: inconsistent value variables");
    }
  };
  check(p.objective);
  for (const auto& c : p.ineq_constraints) check(c.form);
  for (const auto& c : p.eq_constraints) check(c.form);
  for (const auto& b : p.psd_blocks)
    for (const auto& e : b.entries) check(e);
  return p;
}

namespace detail {

template <typename Matrix>
Matrix sym(const Matrix& M) {
  return (M + M.transpose()) / 2;
}

inline int gram_var(int n, int i, int j) {
  if (i > j) std::swap(i, j);
  // row-major upper triangle
  return i * n - i * (i - 1) / 2 + (j - i);
}

inline Eigen::VectorXd form_coeffs(const GramForm& f, int n, int nvars) {
  Eigen::VectorXd a = Eigen::VectorXd::Zero(nvars);
  const int ng = n * (n + 1) / 2;
  for (const auto& [k, c] : f.gram_terms()) a(gram_var(n, k.first, k.second)) += c;
  for (const auto& [v, c] : f.value_terms()) a(ng + v) += c;
  return a;
}

inline sdp::ConicProblem<double> to_conic(const GramProblem& p) {
  using Matrix = Eigen::MatrixXd;
  sdp::ConicProblem<double> cp;
  const int n = p.n;
  const int ng = n * (n + 1) / 2;
  const int nv = ng + p.m;
  cp.num_vars = nv;
  cp.b = form_coeffs(p.objective, n, nv);

  // G = sum_{i<=j} y_ij E_ij, i.e. Z = 0 - sum y_ij (-E_ij).
  sdp::ConicProblem<double>::PsdBlock gb;
  gb.C = Matrix::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) {
      Matrix E = Matrix::Zero(n, n);
      E(i, j) = -1.0;
      E(j, i) = -1.0;
      gb.A.emplace_back(gram_var(n, i, j), std::move(E));
    }
  }
  cp.blocks.push_back(std::move(gb));

  for (const auto& blk : p.psd_blocks) {
    sdp::ConicProblem<double>::PsdBlock b;
    const int d = blk.size;
    b.C = Matrix::Zero(d, d);
    std::vector<Matrix> coeff(nv, Matrix::Zero(d, d));
    std::vector<bool> used(nv, false);
    for (int r = 0; r < d; ++r) {
      for (int c = 0; c < d; ++c) {
        const GramForm& f = blk.at(r, c);
        b.C(r, c) = f.constant();
        Eigen::VectorXd a = form_coeffs(f, n, nv);
        for (int v = 0; v < nv; ++v) {
          if (a(v) != 0.0) {
            coeff[v](r, c) -= a(v);
            used[v] = true;
          }
        }
      }
    }
    b.C = sym(b.C);
    for (int v = 0; v < nv; ++v) {
      if (used[v]) b.A.emplace_back(v, sym(coeff[v]));
    }
    cp.blocks.push_back(std::move(b));
  }

  const int ni = static_cast<int>(p.ineq_constraints.size());
  cp.lp_c.resize(ni);
  cp.lp_A.resize(ni, nv);
  for (int r = 0; r < ni; ++r) {
    const GramForm& f = p.ineq_constraints[r].form;
    cp.lp_c(r) = f.constant();
    cp.lp_A.row(r) = -form_coeffs(f, n, nv).transpose();
  }
  const int ne = static_cast<int>(p.eq_constraints.size());
  cp.eq_E.resize(ne, nv);
  cp.eq_e.resize(ne);
  for (int r = 0; r < ne; ++r) {
    const GramForm& f = p.eq_constraints[r].form;
    cp.eq_E.row(r) = form_coeffs(f, n, nv).transpose();
    cp.eq_e(r) = -f.constant();
  }
  return cp;
}

// Congruence scaling G = D G' D and values = E v' so that the largest
// coefficient on each diagonal Gram entry and on each value is 1. PSD-ness of
// every block is preserved.
struct Scaling {
  Eigen::VectorXd atom;   // D
  Eigen::VectorXd value;  // E
};

inline Scaling equilibrate(const GramProblem& p) {
  Eigen::VectorXd diag = Eigen::VectorXd::Zero(p.n);
  Eigen::VectorXd vals = Eigen::VectorXd::Zero(p.m);
  auto scan = [&](const GramForm& f) {
    for (const auto& [k, c] : f.gram_terms())
      if (k.first == k.second) diag(k.first) = std::max(diag(k.first), std::abs(c));
    for (const auto& [v, c] : f.value_terms()) vals(v) = std::max(vals(v), std::abs(c));
  };
  scan(p.objective);
  for (const auto& c : p.ineq_constraints) scan(c.form);
  for (const auto& c : p.eq_constraints) scan(c.form);
  for (const auto& b : p.psd_blocks)
    for (const auto& e : b.entries) scan(e);
  Scaling s{Eigen::VectorXd::Ones(p.n), Eigen::VectorXd::Ones(p.m)};
  for (int i = 0; i < p.n; ++i)
    if (diag(i) > 0.0) s.atom(i) = 1.0 / std::sqrt(diag(i));
  for (int v = 0; v < p.m; ++v)
    if (vals(v) > 0.0) s.value(v) = 1.0 / vals(v);
  return s;
}

inline GramForm scale_form(const GramForm& f, const Scaling& s) {
  GramForm out = GramForm::constant(f.constant());
  for (const auto& [k, c] : f.gram_terms()) out.add_gram(k.first, k.second, c * s.atom(k.first) * s.atom(k.second));
  for (const auto& [v, c] : f.value_terms()) out.add_value(v, c * s.value(v));
  return out;
}

inline GramProblem scale_problem(const GramProblem& p, const Scaling& s) {
  GramProblem q = p;
  q.objective = scale_form(p.objective, s);
  for (auto& c : q.ineq_constraints) c.form = scale_form(c.form, s);
  for (auto& c : q.eq_constraints) c.form = scale_form(c.form, s);
  for (auto& b : q.psd_blocks)
    for (auto& e : b.entries) e = scale_form(e, s);
  return q;
}

}  // namespace detail

namespace detail {

template <typename Scalar>
Solution unpack(const sdp::Result<Scalar>& r, const GramProblem& problem, const Scaling& scaling, int num_vars) {
  Solution s;
  s.status = r.status;
  s.message = r.message;
  s.iterations = r.iterations;
  s.relative_gap = r.relative_gap;
  s.primal_infeasibility = r.primal_infeasibility;
  s.dual_infeasibility = r.dual_infeasibility;
  const int n = problem.n;
  if (r.y.size() != num_vars) return s;
  const Eigen::VectorXd y = r.y.template cast<double>();
  s.gram.resize(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) s.gram(i, j) = s.gram(j, i) = y(gram_var(n, i, j));
  s.gram = scaling.atom.asDiagonal() * s.gram * scaling.atom.asDiagonal();
  s.values = scaling.value.cwiseProduct(y.tail(problem.m));
  s.value = problem.objective.evaluate(s.gram, s.values);
  s.ineq_duals = r.x_lp.template cast<double>();
  s.eq_duals = r.eq_multipliers.template cast<double>();
  for (const auto& X : r.X) s.block_duals.push_back(X.template cast<double>());
  return s;
}

}  // namespace detail

/// Maximizes the objective of `problem`. Never throws on solver trouble; the
/// status says what happened. A run that stalls in double precision is
/// repeated in extended precision.
inline Solution solve(const GramProblem& problem, double tol = 1e-8) {
  if (!(tol > 0.0)) throw InvalidArgument("solve: tol must be > 0");
  const detail::Scaling scaling = detail::equilibrate(problem);
  const auto cp = detail::to_conic(detail::scale_problem(problem, scaling));
  sdp::Options opt;
  opt.tol = tol;
  Solution s = detail::unpack(sdp::solve(cp, opt), problem, scaling, cp.num_vars);
  if (s.status == sdp::Status::NumericalFailure) {
    Solution ext = detail::unpack(sdp::solve(sdp::cast<long double>(cp), opt), problem, scaling, cp.num_vars);
    if (ext.status != sdp::Status::NumericalFailure) return ext;
  }
  return s;
}

/// Worst-case violation of the constraints of `problem` at (gram, values):
/// max over inequalities of -form, equalities of |form|, PSD blocks (G
/// included) of -lambda_min.
inline double max_violation(const GramProblem& problem, const Eigen::MatrixXd& gram,
                            const Eigen::VectorXd& values) {
  double v = 0.0;
  for (const auto& c : problem.ineq_constraints) v = std::max(v, -c.form.evaluate(gram, values));
  for (const auto& c : problem.eq_constraints)
    v = std::max(v, std::abs(c.form.evaluate(gram, values)));
  auto lam_min = [](const Eigen::MatrixXd& S) {
    if (S.rows() == 0) return 0.0;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(detail::sym(S), Eigen::EigenvaluesOnly);
    return es.eigenvalues()(0);
  };
  v = std::max(v, -lam_min(gram));
  for (const auto& b : problem.psd_blocks) v = std::max(v, -lam_min(b.evaluate(gram, values)));
  return v;
}

/// Solves `problem`, then re-solves minimizing trace(G) among points whose
/// objective is within `slack` of the optimum. Interior point methods return
/// maximal-rank optimizers; the second pass recovers a low-dimensional
/// worst case when one exists.
inline Solution solve_low_rank(const GramProblem& problem, double tol = 1e-8, double slack = 1e-6) {
  Solution first = solve(problem, tol);
  if (!first.optimal()) return first;
  GramProblem q = problem;
  GramForm trace;
  for (int i = 0; i < problem.n; ++i) trace.add_gram(i, i, -1.0);
  q.objective = trace;
  q.ineq_constraints.push_back({problem.objective + GramForm::constant(-(first.value - slack)),
                                Sense::GreaterEqualZero, "objective level"});
  Solution second = solve(q, tol);
  if (!second.optimal()) return first;
  second.value = problem.objective.evaluate(second.gram, second.values);
  return second;
}

/// Explicit vectors realizing a Gram matrix, one column per atom.
struct WorstCase {
  int rank = 0;
  Eigen::MatrixXd atoms;    // rank x n
  Eigen::VectorXd values;   // function values
  double ratio = 0.0;       // ||Phi a - Phi b|| / ||a - b|| on these vectors
};

/// Factorizes G = V^T V keeping eigenvalues above `rel_threshold * lambda_max`.
inline WorstCase extract_worst_case(const Solution& sol, const ContractionSetup& setup,
                                    double rel_threshold = 1e-6) {
  if (!sol.optimal()) {
    throw SolverError(std::string("extract_worst_case: solution status is ") +
                      sdp::to_string(sol.status));
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(detail::sym(sol.gram));
  const Eigen::VectorXd& lam = es.eigenvalues();
  const int n = static_cast<int>(lam.size());
  const double lmax = n > 0 ? lam(n - 1) : 0.0;
  std::vector<int> keep;
  for (int i = n - 1; i >= 0; --i) {
    if (lam(i) > rel_threshold * lmax && lam(i) > 0.0) keep.push_back(i);
  }
  WorstCase wc;
  wc.rank = static_cast<int>(keep.size());
  wc.atoms.resize(wc.rank, n);
  for (int r = 0; r < wc.rank; ++r) {
    wc.atoms.row(r) = std::sqrt(lam(keep[r])) * es.eigenvectors().col(keep[r]).transpose();
  }
  wc.values = sol.values;

  auto dist2 = [&](const MethodState& p, const MethodState& q) {
    double d = (p.x - q.x).evaluate(wc.atoms).squaredNorm();
    if (p.u && q.u) d += (*p.u - *q.u).evaluate(wc.atoms).squaredNorm();
    return d;
  };
  const double num = dist2(setup.a.output, setup.b.output);
  const double den = dist2(setup.a.start, setup.b.start);
  wc.ratio = den > 0.0 ? std::sqrt(num / den) : 0.0;
  return wc;
}

/// Writes the lifted problem in SDPA sparse format (".dat-s"):
///   line "<matrix> <block> <row> <col> <value>" for each nonzero, 1-based,
/// where matrix 0 is the constant term F0 and matrix i >= 1 multiplies the
/// i-th free variable in  F(y) = sum_i y_i F_i - F0 >= 0,  minimizing -b^T y.
/// Equalities appear as pairs of opposite inequalities in the diagonal block.
inline void write_sdpa(const GramProblem& problem, std::ostream& os) {
  const auto cp = detail::to_conic(problem);
  const int nv = cp.num_vars;
  const int ne = cp.eq_rows();
  const int nlp = cp.lp_rows() + 2 * ne;
  os << "* PEP contraction problem: " << problem.n << " atoms, " << problem.m << " values\n";
  os << nv << "\n";
  const int nblocks = static_cast<int>(cp.blocks.size()) + (nlp > 0 ? 1 : 0);
  os << nblocks << "\n";
  for (const auto& b : cp.blocks) os << b.C.rows() << " ";
  if (nlp > 0) os << -nlp;
  os << "\n";
  os << std::setprecision(17);
  for (int v = 0; v < nv; ++v) os << -cp.b(v) << (v + 1 < nv ? " " : "\n");
  // SDPA form: F(y) = sum y_i F_i - F0 >= 0 with F_i = -A_i, F0 = -C.
  auto emit = [&os](int mat, int blk, const Eigen::MatrixXd& M) {
    for (int r = 0; r < M.rows(); ++r)
      for (int c = r; c < M.cols(); ++c)
        if (M(r, c) != 0.0) os << mat << " " << blk << " " << r + 1 << " " << c + 1 << " " << M(r, c) << "\n";
  };
  for (size_t k = 0; k < cp.blocks.size(); ++k) {
    const int blk = static_cast<int>(k) + 1;
    emit(0, blk, -cp.blocks[k].C);
    for (const auto& [var, A] : cp.blocks[k].A) emit(var + 1, blk, -A);
  }
  if (nlp > 0) {
    const int blk = static_cast<int>(cp.blocks.size()) + 1;
    auto row = [&](int r, double c0, const Eigen::RowVectorXd& a) {
      if (c0 != 0.0) os << 0 << " " << blk << " " << r + 1 << " " << r + 1 << " " << -c0 << "\n";
      for (int v = 0; v < nv; ++v)
        if (a(v) != 0.0) os << v + 1 << " " << blk << " " << r + 1 << " " << r + 1 << " " << a(v) << "\n";
    };
    for (int r = 0; r < cp.lp_rows(); ++r) row(r, cp.lp_c(r), -cp.lp_A.row(r));
    for (int r = 0; r < ne; ++r) {
      row(cp.lp_rows() + 2 * r, -cp.eq_e(r), cp.eq_E.row(r));
      row(cp.lp_rows() + 2 * r + 1, cp.eq_e(r), -cp.eq_E.row(r));
    }
  }
}

inline void write_sdpa(const GramProblem& problem, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("write_sdpa: cannot open " + path);
  write_sdpa(problem, os);
}

}  // namespace pepcmp
