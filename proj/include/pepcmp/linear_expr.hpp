#pragma once

// Symbolic algebra for PEP trajectories.
//
// Unknown vectors are "atoms" (starting points, gradients, operator images).
// Every iterate is a LinearExpr: a finite linear combination of atoms. Inner
// products of LinearExprs are linear in the Gram matrix G_ij = <atom_i, atom_j>,
// so a GramForm (quadratic part in G, linear part in function values, plus a
// constant) represents every scalar quantity the PEP manipulates.

#include <cmath>
#include <map>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace pepcmp {

using AtomId = int;
using ValueId = int;

class LinearExpr {
 public:
  LinearExpr() = default;

  static LinearExpr atom(AtomId id) {
    LinearExpr e;
    e.terms_[id] = 1.0;
    return e;
  }

  const std::map<AtomId, double>& terms() const { return terms_; }

  double coeff(AtomId id) const {
    auto it = terms_.find(id);
    return it == terms_.end() ? 0.0 : it->second;
  }

  bool is_zero() const { return terms_.empty(); }

  LinearExpr& operator+=(const LinearExpr& o) {
    for (const auto& [id, c] : o.terms_) add_term(id, c);
    return *this;
  }
  LinearExpr& operator-=(const LinearExpr& o) {
    for (const auto& [id, c] : o.terms_) add_term(id, -c);
    return *this;
  }
  LinearExpr& operator*=(double s) {
    if (s == 0.0) {
      terms_.clear();
      return *this;
    }
    for (auto& [id, c] : terms_) c *= s;
    return *this;
  }

  friend LinearExpr operator+(LinearExpr a, const LinearExpr& b) { return a += b; }
  friend LinearExpr operator-(LinearExpr a, const LinearExpr& b) { return a -= b; }
  friend LinearExpr operator*(double s, LinearExpr a) { return a *= s; }
  friend LinearExpr operator*(LinearExpr a, double s) { return a *= s; }
  friend LinearExpr operator-(LinearExpr a) { return a *= -1.0; }

  /// Dense coefficient vector over atoms 0..n-1.
  Eigen::VectorXd dense(int n) const {
    Eigen::VectorXd v = Eigen::VectorXd::Zero(n);
    for (const auto& [id, c] : terms_) v(id) = c;
    return v;
  }

  /// Evaluate against concrete atom coordinates (one column per atom).
  Eigen::VectorXd evaluate(const Eigen::MatrixXd& atoms) const {
    Eigen::VectorXd v = Eigen::VectorXd::Zero(atoms.rows());
    for (const auto& [id, c] : terms_) v += c * atoms.col(id);
    return v;
  }

 private:
  void add_term(AtomId id, double c) {
    auto [it, inserted] = terms_.try_emplace(id, c);
    if (!inserted) {
      it->second += c;
      if (it->second == 0.0) terms_.erase(it);
    }
  }

  std::map<AtomId, double> terms_;
};

/// Scalar affine functional of (Gram matrix, function values).
class GramForm {
 public:
  GramForm() = default;

  /// <a, b> lifted into Gram entries.
  static GramForm inner(const LinearExpr& a, const LinearExpr& b) {
    GramForm f;
    for (const auto& [i, ci] : a.terms()) {
      for (const auto& [j, cj] : b.terms()) f.add_gram(i, j, ci * cj);
    }
    return f;
  }
  static GramForm sqnorm(const LinearExpr& a) { return inner(a, a); }
  static GramForm value(ValueId v, double c = 1.0) {
    GramForm f;
    f.add_value(v, c);
    return f;
  }
  static GramForm constant(double c) {
    GramForm f;
    f.constant_ = c;
    return f;
  }

  /// Adds c * G_ij. Keys are unordered pairs, so G_ij and G_ji accumulate together.
  void add_gram(AtomId i, AtomId j, double c) {
    if (c == 0.0) return;
    gram_[i <= j ? std::pair{i, j} : std::pair{j, i}] += c;
  }
  void add_value(ValueId v, double c) {
    if (c == 0.0) return;
    values_[v] += c;
  }

  GramForm& operator+=(const GramForm& o) {
    for (const auto& [k, c] : o.gram_) gram_[k] += c;
    for (const auto& [k, c] : o.values_) values_[k] += c;
    constant_ += o.constant_;
    return *this;
  }
  GramForm& operator*=(double s) {
    for (auto& [k, c] : gram_) c *= s;
    for (auto& [k, c] : values_) c *= s;
    constant_ *= s;
    return *this;
  }
  friend GramForm operator+(GramForm a, const GramForm& b) { return a += b; }
  friend GramForm operator-(GramForm a, GramForm b) { return a += (b *= -1.0); }
  friend GramForm operator*(double s, GramForm a) { return a *= s; }

  /// Total weight on each unordered pair (i <= j).
  const std::map<std::pair<AtomId, AtomId>, double>& gram_terms() const { return gram_; }
  const std::map<ValueId, double>& value_terms() const { return values_; }
  double constant() const { return constant_; }

  /// Symmetric matrix Q with form = trace(Q G) + values + constant.
  Eigen::MatrixXd gram_matrix(int n) const {
    Eigen::MatrixXd Q = Eigen::MatrixXd::Zero(n, n);
    for (const auto& [k, c] : gram_) {
      if (k.first == k.second) {
        Q(k.first, k.first) += c;
      } else {
        Q(k.first, k.second) += 0.5 * c;
        Q(k.second, k.first) += 0.5 * c;
      }
    }
    return Q;
  }

  double evaluate(const Eigen::MatrixXd& gram, const Eigen::VectorXd& values) const {
    double s = constant_;
    for (const auto& [k, c] : gram_) s += c * gram(k.first, k.second);
    for (const auto& [k, c] : values_) s += c * values(k);
    return s;
  }

 private:
  std::map<std::pair<AtomId, AtomId>, double> gram_;
  std::map<ValueId, double> values_;
  double constant_ = 0.0;
};

}  // namespace pepcmp
