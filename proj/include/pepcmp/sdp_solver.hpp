#pragma once

// Dense primal-dual interior point method for small semidefinite programs.
//
// Dual form handled here (the form PEPs naturally take):
//
//   maximize   b^T y
//   subject to Z_k = C_k - sum_i y_i A_{k,i}  is PSD      (dense blocks)
//              z   = c - A_lp y               >= 0        (linear inequalities)
//              E y = e                                    (linear equalities)
//
// Equalities are eliminated up front by a null-space parametrization
// y = y0 + N w. The remaining pair
//
//   (P) min <C, X>  s.t.  <A_i, X> = b_i, X PSD      (D) max b^T y  s.t.  Z PSD
//
// is solved by an infeasible path-following method using the HKM search
// direction with a Mehrotra predictor-corrector. Everything is dense and
// deterministic; sizes of interest are a few hundred variables at most.

#include <algorithm>
#include <cstdio>
#include <cmath>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace pepcmp::sdp {

enum class Status { Optimal, Infeasible, NumericalFailure };

inline const char* to_string(Status s) {
  switch (s) {
    case Status::Optimal: return "optimal";
    case Status::Infeasible: return "infeasible";
    case Status::NumericalFailure: return "numerical-failure";
  }
  return "?";
}

template <typename Scalar>
struct ConicProblem {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  struct PsdBlock {
    Matrix C;
    // Sparse list of (variable index, symmetric coefficient matrix).
    std::vector<std::pair<int, Matrix>> A;
  };

  int num_vars = 0;
  Vector b;
  std::vector<PsdBlock> blocks;
  Vector lp_c;   // rows of the inequality part
  Matrix lp_A;   // lp_rows x num_vars
  Matrix eq_E;   // eq_rows x num_vars
  Vector eq_e;

  int lp_rows() const { return static_cast<int>(lp_c.size()); }
  int eq_rows() const { return static_cast<int>(eq_e.size()); }
};

template <typename To, typename From>
ConicProblem<To> cast(const ConicProblem<From>& p) {
  ConicProblem<To> q;
  q.num_vars = p.num_vars;
  q.b = p.b.template cast<To>();
  for (const auto& blk : p.blocks) {
    typename ConicProblem<To>::PsdBlock b;
    b.C = blk.C.template cast<To>();
    for (const auto& [v, A] : blk.A) b.A.emplace_back(v, A.template cast<To>());
    q.blocks.push_back(std::move(b));
  }
  q.lp_c = p.lp_c.template cast<To>();
  q.lp_A = p.lp_A.template cast<To>();
  q.eq_E = p.eq_E.template cast<To>();
  q.eq_e = p.eq_e.template cast<To>();
  return q;
}

struct Options {
  double tol = 1e-8;
  int max_iterations = 200;
  int stall_iterations = 8;
  // A stalled run whose best iterate reaches this level still counts as optimal.
  double acceptable_tol = 1e-6;
  double step_fraction = 0.95;
};

template <typename Scalar>
struct Result {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  Status status = Status::NumericalFailure;
  Vector y;                     // dual variables (original coordinates)
  std::vector<Matrix> X;        // primal blocks, one per PSD block
  Vector x_lp;                  // multipliers of the inequalities
  Vector eq_multipliers;        // multipliers of the equalities
  std::vector<Matrix> Z;        // dual slack blocks
  Vector z_lp;
  double primal_objective = 0;  // <C, X> (+ equality part)
  double dual_objective = 0;    // b^T y
  double relative_gap = 0;
  double primal_infeasibility = 0;
  double dual_infeasibility = 0;
  int iterations = 0;
  std::string message;
};

namespace detail {

template <typename Matrix>
Matrix sym(const Matrix& M) {
  return (M + M.transpose()) / 2;
}

// Largest alpha in (0, inf] with M + alpha dM PSD, given the Cholesky factor of M.
template <typename Scalar, typename Matrix>
Scalar max_step_psd(const Eigen::LLT<Matrix>& chol, const Matrix& dM) {
  const Matrix& L = chol.matrixL();
  Matrix T = L.template triangularView<Eigen::Lower>().solve(dM);
  T = L.template triangularView<Eigen::Lower>().solve(T.transpose()).transpose();
  Eigen::SelfAdjointEigenSolver<Matrix> es(sym(T), Eigen::EigenvaluesOnly);
  const Scalar lam = es.eigenvalues().minCoeff();
  if (lam >= 0) return std::numeric_limits<Scalar>::infinity();
  return Scalar(-1) / lam;
}

template <typename Scalar, typename Vector>
Scalar max_step_lp(const Vector& x, const Vector& dx) {
  Scalar a = std::numeric_limits<Scalar>::infinity();
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (dx(i) < 0) a = std::min(a, -x(i) / dx(i));
  }
  return a;
}

template <typename Matrix>
typename Matrix::Scalar inner(const Matrix& A, const Matrix& B) {
  return A.cwiseProduct(B).sum();
}

}  // namespace detail

/// Solves the dual-form conic problem. Deterministic for identical inputs.
template <typename Scalar>
Result<Scalar> solve(const ConicProblem<Scalar>& prob, const Options& opt = {}) {
  using Matrix = typename ConicProblem<Scalar>::Matrix;
  using Vector = typename ConicProblem<Scalar>::Vector;
  using std::abs;
  using std::sqrt;

  Result<Scalar> res;
  const int nv = prob.num_vars;
  const int nb = static_cast<int>(prob.blocks.size());
  const int nlp = prob.lp_rows();

  // Null-space elimination of the equalities.
  Vector y0 = Vector::Zero(nv);
  Matrix N = Matrix::Identity(nv, nv);
  if (prob.eq_rows() > 0) {
    Eigen::CompleteOrthogonalDecomposition<Matrix> cod(prob.eq_E);
    y0 = cod.solve(prob.eq_e);
    if ((prob.eq_E * y0 - prob.eq_e).norm() > Scalar(1e-9) * (1 + prob.eq_e.norm())) {
      res.status = Status::Infeasible;
      res.message = "inconsistent equality constraints";
      return res;
    }
    Eigen::JacobiSVD<Matrix> svd(prob.eq_E, Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    const Scalar thresh = Scalar(1e-10) * std::max<Scalar>(Scalar(1), sv.size() ? sv(0) : Scalar(0));
    int rank = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i) rank += sv(i) > thresh ? 1 : 0;
    N = svd.matrixV().rightCols(nv - rank);
  }
  // Directions that no constraint sees are dropped; if the objective sees
  // one of them the problem is unbounded.
  {
    const int m0 = static_cast<int>(N.cols());
    int rows = nlp;
    for (const auto& blk : prob.blocks) rows += static_cast<int>(blk.C.size());
    Matrix K = Matrix::Zero(rows, nv);
    int r0 = 0;
    for (const auto& blk : prob.blocks) {
      const int d = static_cast<int>(blk.C.rows());
      for (const auto& [var, Ai] : blk.A) {
        K.block(r0, var, d * d, 1) += Eigen::Map<const Vector>(Ai.data(), d * d);
      }
      r0 += d * d;
    }
    if (nlp > 0) K.bottomRows(nlp) = prob.lp_A;
    const Matrix KN = K * N;
    Eigen::JacobiSVD<Matrix> svd(KN, Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    const Scalar thresh = Scalar(1e-10) * std::max<Scalar>(Scalar(1), sv.size() ? sv(0) : Scalar(0));
    int rank = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i) rank += sv(i) > thresh ? 1 : 0;
    if (rank < m0) {
      const Matrix free_dirs = N * svd.matrixV().rightCols(m0 - rank);
      if ((free_dirs.transpose() * prob.b).norm() > Scalar(1e-9) * (1 + prob.b.norm())) {
        res.status = Status::Infeasible;
        res.message = "objective unbounded along an unconstrained direction";
        res.y = y0;
        return res;
      }
      N = Matrix(N * svd.matrixV().leftCols(rank));
    }
  }
  const int m = static_cast<int>(N.cols());

  // Reduced data.
  std::vector<Matrix> C(nb);
  std::vector<std::vector<Matrix>> A(nb);
  std::vector<int> dims(nb);
  for (int k = 0; k < nb; ++k) {
    const auto& blk = prob.blocks[k];
    const int d = static_cast<int>(blk.C.rows());
    dims[k] = d;
    C[k] = blk.C;
    A[k].assign(m, Matrix::Zero(d, d));
    for (const auto& [var, Ai] : blk.A) {
      C[k] -= y0(var) * Ai;
      for (int j = 0; j < m; ++j) {
        if (N(var, j) != Scalar(0)) A[k][j] += N(var, j) * Ai;
      }
    }
  }
  Vector c_lp = nlp > 0 ? Vector(prob.lp_c - prob.lp_A * y0) : Vector(Vector::Zero(0));
  Matrix A_lp = nlp > 0 ? Matrix(prob.lp_A * N) : Matrix(Matrix::Zero(0, m));
  const Vector b = N.transpose() * prob.b;
  const Scalar obj_const = prob.b.dot(y0);

  auto A_apply = [&](const std::vector<Matrix>& Xb, const Vector& xl) {
    Vector out = Vector::Zero(m);
    for (int k = 0; k < nb; ++k)
      for (int j = 0; j < m; ++j) out(j) += detail::inner(A[k][j], Xb[k]);
    if (nlp > 0) out += A_lp.transpose() * xl;
    return out;
  };
  auto A_adjoint = [&](const Vector& w, std::vector<Matrix>& Sb, Vector& sl) {
    for (int k = 0; k < nb; ++k) {
      Sb[k] = Matrix::Zero(dims[k], dims[k]);
      for (int j = 0; j < m; ++j) Sb[k] += w(j) * A[k][j];
    }
    sl = nlp > 0 ? Vector(A_lp * w) : Vector(Vector::Zero(0));
  };

  // Starting point in the spirit of SDPT3's default.
  int total_dim = nlp;
  for (int d : dims) total_dim += d;
  Scalar normC = c_lp.norm();
  for (int k = 0; k < nb; ++k) normC = std::max(normC, C[k].norm());
  Scalar xi = std::max<Scalar>(10, sqrt(Scalar(total_dim)));
  Scalar eta = std::max<Scalar>(xi, normC);
  for (int j = 0; j < m; ++j) {
    Scalar nA = nlp > 0 ? A_lp.col(j).norm() : Scalar(0);
    for (int k = 0; k < nb; ++k) nA = std::max(nA, A[k][j].norm());
    xi = std::max(xi, Scalar(total_dim) * (1 + abs(b(j))) / (1 + nA));
    eta = std::max(eta, nA);
  }
  std::vector<Matrix> X(nb), Z(nb);
  for (int k = 0; k < nb; ++k) {
    X[k] = xi * Matrix::Identity(dims[k], dims[k]);
    Z[k] = eta * Matrix::Identity(dims[k], dims[k]);
  }
  Vector xl = Vector::Constant(nlp, xi), zl = Vector::Constant(nlp, eta);
  Vector y = Vector::Zero(m);

  const Scalar norm_b = b.norm();
  const Scalar tol = Scalar(opt.tol);
  std::vector<Matrix> tmpB(nb);
  Vector tmpL;

  // Best iterate seen so far; returned when the method stalls.
  struct Snapshot {
    std::vector<Matrix> X, Z;
    Vector xl, zl, y;
    Scalar merit = std::numeric_limits<Scalar>::infinity();
    Scalar pobj = 0, dobj = 0, relgap = 0, pinf = 0, dinf = 0;
    int iter = 0;
  } best;

  int iter = 0;
  for (; iter <= opt.max_iterations; ++iter) {
    // Residuals.
    const Vector rp = b - A_apply(X, xl);
    A_adjoint(y, tmpB, tmpL);
    std::vector<Matrix> Rd(nb);
    Scalar rd_norm2 = 0;
    for (int k = 0; k < nb; ++k) {
      Rd[k] = C[k] - tmpB[k] - Z[k];
      rd_norm2 += Rd[k].squaredNorm();
    }
    Vector rdl = nlp > 0 ? Vector(c_lp - tmpL - zl) : Vector(Vector::Zero(0));
    rd_norm2 += rdl.squaredNorm();

    Scalar pobj = c_lp.dot(xl), gapXZ = xl.dot(zl);
    for (int k = 0; k < nb; ++k) {
      pobj += detail::inner(C[k], X[k]);
      gapXZ += detail::inner(X[k], Z[k]);
    }
    const Scalar dobj = b.dot(y);
    const Scalar mu = gapXZ / Scalar(std::max(total_dim, 1));
    const Scalar pinf = rp.norm() / (1 + norm_b);
    const Scalar dinf = sqrt(rd_norm2) / (1 + normC);
    const Scalar relgap = abs(pobj - dobj) / (1 + abs(pobj) + abs(dobj));
    const Scalar merit = std::max({pinf, dinf, relgap});
#ifdef PEPCMP_SDP_TRACE
    std::fprintf(stderr, "it %3d pobj %.10e dobj %.10e pinf %.2e dinf %.2e gap %.2e mu %.2e\n", iter,
                 double(pobj), double(dobj), double(pinf), double(dinf), double(relgap), double(mu));
#endif
    res.iterations = iter;
    res.primal_objective = static_cast<double>(pobj + obj_const);
    res.dual_objective = static_cast<double>(dobj + obj_const);
    res.relative_gap = static_cast<double>(relgap);
    res.primal_infeasibility = static_cast<double>(pinf);
    res.dual_infeasibility = static_cast<double>(dinf);
    if (merit < best.merit) {
      best = Snapshot{X, Z, xl, zl, y, merit, pobj, dobj, relgap, pinf, dinf, iter};
    }
    if (merit <= tol) {
      res.status = Status::Optimal;
      break;
    }
    // (P) unbounded below while feasible: (D) has no feasible point.
    if (pinf <= tol && pobj < Scalar(-1e10) * (1 + abs(dobj))) {
      res.status = Status::Infeasible;
      res.message = "primal objective unbounded: dual (maximization) problem infeasible";
      break;
    }
    if (dinf <= tol && dobj > Scalar(1e10) * (1 + abs(pobj))) {
      res.status = Status::Infeasible;
      res.message = "dual objective unbounded: primal problem infeasible";
      break;
    }
    if (iter == opt.max_iterations) {
      res.message = "iteration limit reached";
      break;
    }
    if (iter - best.iter >= opt.stall_iterations) {
      res.message = "no progress";
      break;
    }

    // Factorizations.
    std::vector<Matrix> Zinv(nb);
    bool ok = true;
    for (int k = 0; k < nb; ++k) {
      Eigen::LLT<Matrix> llt(Z[k]);
      if (llt.info() != Eigen::Success) {
        ok = false;
        break;
      }
      Zinv[k] = detail::sym(Matrix(llt.solve(Matrix::Identity(dims[k], dims[k]))));
    }
    if (!ok) {
      res.message = "dual slack lost definiteness";
      break;
    }
    const Vector xz = nlp > 0 ? Vector(xl.cwiseQuotient(zl)) : Vector(Vector::Zero(0));

    // Schur complement M_ij = sum_k tr(A_i X A_j Z^-1) + lp part.
    Matrix M = Matrix::Zero(m, m);
    std::vector<std::vector<Matrix>> XAZ(nb);
    for (int k = 0; k < nb; ++k) {
      XAZ[k].resize(m);
      for (int j = 0; j < m; ++j) XAZ[k][j] = X[k] * A[k][j] * Zinv[k];
      for (int i = 0; i < m; ++i) {
        for (int j = i; j < m; ++j) {
          // tr(A_i W) with W = X A_j Z^-1
          const Scalar v = A[k][i].cwiseProduct(XAZ[k][j].transpose()).sum();
          M(i, j) += v;
          if (j != i) M(j, i) += v;
        }
      }
    }
    if (nlp > 0) M += A_lp.transpose() * xz.asDiagonal() * A_lp;
    M = detail::sym(M);
    // M is positive definite in exact arithmetic but its diagonal spans many
    // orders of magnitude near the optimum. Factor the Jacobi-scaled D M D and
    // fall back to a rank-revealing factorization when even that is singular.
    Vector dscale(m);
    for (int i = 0; i < m; ++i) dscale(i) = M(i, i) > 0 ? 1 / sqrt(M(i, i)) : Scalar(1);
    const Matrix Ms = dscale.asDiagonal() * M * dscale.asDiagonal();
    Eigen::LLT<Matrix> schur(Ms);
    const bool use_llt = schur.info() == Eigen::Success;
    Eigen::CompleteOrthogonalDecomposition<Matrix> schur_cod;
    if (!use_llt) {
      schur_cod.setThreshold(Scalar(1e-14));
      schur_cod.compute(Ms);
#ifdef PEPCMP_SDP_TRACE
      std::fprintf(stderr, "  schur rank-revealing fallback, rank %d of %d\n", int(schur_cod.rank()), int(m));
#endif
    }
    auto schur_solve = [&](const Vector& r) -> Vector {
      const Vector rs = dscale.cwiseProduct(r);
      return dscale.cwiseProduct(use_llt ? Vector(schur.solve(rs)) : Vector(schur_cod.solve(rs)));
    };

    // Direction for target sigma*mu with optional second-order correction.
    auto direction = [&](Scalar target, const std::vector<Matrix>* corrX, const Vector* corrL,
                         std::vector<Matrix>& dX, Vector& dxl, Vector& dy, std::vector<Matrix>& dZ,
                         Vector& dzl) {
      // Gk = target Z^-1 - X - X Rd Z^-1 - corr
      std::vector<Matrix> G(nb);
      for (int k = 0; k < nb; ++k) {
        G[k] = target * Zinv[k] - X[k] - X[k] * Rd[k] * Zinv[k];
        if (corrX) G[k] -= (*corrX)[k];
      }
      Vector gl;
      if (nlp > 0) {
        gl = (Vector::Constant(nlp, target) - xl.cwiseProduct(zl) - xl.cwiseProduct(rdl));
        if (corrL) gl -= *corrL;
        gl = gl.cwiseQuotient(zl);
      } else {
        gl = Vector::Zero(0);
      }
      // A(dX) = rp with dX = G + X (sum dy A) Z^-1  =>  M dy = rp - A(G)
      const Vector rhs = rp - A_apply(G, gl);
      dy = schur_solve(rhs);
      for (int refine = 0; refine < 2; ++refine) dy += schur_solve(Vector(rhs - M * dy));
      A_adjoint(dy, dZ, dzl);
      for (int k = 0; k < nb; ++k) {
        dZ[k] = Rd[k] - dZ[k];
        dX[k] = detail::sym(Matrix(target * Zinv[k] - X[k] - X[k] * dZ[k] * Zinv[k] -
                           (corrX ? (*corrX)[k] : Matrix::Zero(dims[k], dims[k]))));
      }
      if (nlp > 0) {
        dzl = rdl - dzl;
        Vector num = Vector::Constant(nlp, target) - xl.cwiseProduct(zl) - xl.cwiseProduct(dzl);
        if (corrL) num -= *corrL;
        dxl = num.cwiseQuotient(zl);
      } else {
        dxl = Vector::Zero(0);
      }
    };

    auto step_lengths = [&](const std::vector<Matrix>& dX, const Vector& dxl,
                            const std::vector<Matrix>& dZ, const Vector& dzl) {
      Scalar ap = std::numeric_limits<Scalar>::infinity();
      Scalar ad = ap;
      for (int k = 0; k < nb; ++k) {
        Eigen::LLT<Matrix> lx(X[k]), lz(Z[k]);
        ap = std::min(ap, detail::max_step_psd<Scalar>(lx, dX[k]));
        ad = std::min(ad, detail::max_step_psd<Scalar>(lz, dZ[k]));
      }
      if (nlp > 0) {
        ap = std::min(ap, detail::max_step_lp<Scalar>(xl, dxl));
        ad = std::min(ad, detail::max_step_lp<Scalar>(zl, dzl));
      }
      return std::pair{ap, ad};
    };

    std::vector<Matrix> dX(nb), dZ(nb);
    Vector dxl, dzl, dy;
    direction(Scalar(0), nullptr, nullptr, dX, dxl, dy, dZ, dzl);
    auto [ap_aff, ad_aff] = step_lengths(dX, dxl, dZ, dzl);
    ap_aff = std::min<Scalar>(1, ap_aff);
    ad_aff = std::min<Scalar>(1, ad_aff);
    Scalar mu_aff = (xl + ap_aff * dxl).dot(zl + ad_aff * dzl);
    for (int k = 0; k < nb; ++k)
      mu_aff += detail::inner(Matrix(X[k] + ap_aff * dX[k]), Matrix(Z[k] + ad_aff * dZ[k]));
    mu_aff /= Scalar(std::max(total_dim, 1));
    Scalar sigma = mu > 0 ? std::pow(std::max<Scalar>(0, mu_aff) / mu, 3) : Scalar(0);
    sigma = std::clamp<Scalar>(sigma, Scalar(0), Scalar(1));

    std::vector<Matrix> corr(nb);
    for (int k = 0; k < nb; ++k) corr[k] = dX[k] * dZ[k] * Zinv[k];
    Vector corrl = nlp > 0 ? Vector(dxl.cwiseProduct(dzl)) : Vector(Vector::Zero(0));
    direction(sigma * mu, &corr, &corrl, dX, dxl, dy, dZ, dzl);
    auto [ap, ad] = step_lengths(dX, dxl, dZ, dzl);
    const Scalar gamma = Scalar(opt.step_fraction);
    ap = std::min<Scalar>(1, gamma * ap);
    ad = std::min<Scalar>(1, gamma * ad);

    for (int k = 0; k < nb; ++k) {
      X[k] = detail::sym(Matrix(X[k] + ap * dX[k]));
      Z[k] = detail::sym(Matrix(Z[k] + ad * dZ[k]));
    }
    if (nlp > 0) {
      xl += ap * dxl;
      zl += ad * dzl;
    }
    y += ad * dy;
  }
  if (res.status != Status::Infeasible && !best.X.empty()) {
    X = best.X;
    Z = best.Z;
    xl = best.xl;
    zl = best.zl;
    y = best.y;
    res.iterations = best.iter;
    if (best.merit <= tol) {
      res.status = Status::Optimal;
      res.message.clear();
    } else if (best.merit <= Scalar(opt.acceptable_tol)) {
      res.status = Status::Optimal;
      res.message = "reduced accuracy (" + res.message + ")";
    } else {
      res.status = Status::NumericalFailure;
      if (res.message.empty()) res.message = "did not converge";
    }
    res.primal_objective = static_cast<double>(best.pobj + obj_const);
    res.dual_objective = static_cast<double>(best.dobj + obj_const);
    res.relative_gap = static_cast<double>(best.relgap);
    res.primal_infeasibility = static_cast<double>(best.pinf);
    res.dual_infeasibility = static_cast<double>(best.dinf);
  }

  // Map back to original coordinates.
  res.y = y0 + N * y;
  res.X = X;
  res.Z = Z;
  res.x_lp = xl;
  res.z_lp = zl;
  if (prob.eq_rows() > 0) {
    // Stationarity in the original space: b - A(X) - A_lp^T x = E^T lambda.
    Vector r = prob.b;
    for (int k = 0; k < nb; ++k)
      for (const auto& [var, Ai] : prob.blocks[k].A) r(var) -= detail::inner(Ai, X[k]);
    if (nlp > 0) r -= prob.lp_A.transpose() * xl;
    res.eq_multipliers = prob.eq_E.transpose().completeOrthogonalDecomposition().solve(r);
  }
  return res;
}

}  // namespace pepcmp::sdp
