#pragma once

// Worst case over quadratic instances: f(x) = a x^2/2, g(x) = b x^2/2 (or
// h(w) = b w^2/2 composed with M = m). Every method then acts linearly, as a
// scalar multiplier (primal methods) or a 2x2 matrix on (x, u) (CPM, CVM),
// and its contraction factor is the absolute value or spectral norm.

#include <array>
#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "pepcmp/closed_form.hpp"
#include "pepcmp/core_model.hpp"

namespace pepcmp {

struct QuadPoint {
  double a = 0.0;  // curvature of f
  double b = 0.0;  // curvature of g, or of h in a composite problem
  double m = 1.0;  // operator scalar; g = h(m x) has curvature b m^2
};

namespace detail {

inline double g_curvature(const QuadPoint& p) {
  if (p.m == 0.0) return 0.0;
  return p.b * p.m * p.m;
}

}  // namespace detail

/// Multiplier of one primal iteration on the quadratic instance.
inline double scalar_map(MethodKind kind, double tau, const QuadPoint& p) {
  const double a = p.a;
  const double b = detail::g_curvature(p);
  switch (kind) {
    case MethodKind::GM:
      if (tau == 0.0) return 1.0;
      return 1.0 - tau * (a + b);
    case MethodKind::FBS1:
      return (1.0 - tau * a) * detail::prox_mult(tau, b);
    case MethodKind::FBS2:
      return (1.0 - tau * b) * detail::prox_mult(tau, a);
    case MethodKind::PRS:
      return detail::reflect_mult(tau, a) * detail::reflect_mult(tau, b);
    case MethodKind::DRS:
      return detail::drs_mult(tau, a, b);
    default:
      break;
  }
  throw InvalidArgument("scalar_map: not a primal method");
}

/// Linear map (x, u) -> (x+, u+) of one CPM/CVM iteration on the quadratic instance.
inline Eigen::Matrix2d matrix_map(MethodKind kind, double tau, double sigma, const QuadPoint& p) {
  if (!is_primal_dual(kind)) throw InvalidArgument("matrix_map: not a primal-dual method");
  if (!(tau > 0.0) || !(sigma > 0.0)) throw InvalidArgument("matrix_map: tau and sigma must be > 0");
  const double m = p.m;
  // x+ = A x + B u
  double A, B;
  if (kind == MethodKind::CPM) {
    if (std::isinf(p.a)) {
      A = 0.0;
      B = 0.0;
    } else {
      A = 1.0 / (1.0 + tau * p.a);
      B = -tau * m * A;
    }
  } else {
    if (std::isinf(p.a)) throw InvalidArgument("matrix_map: CVM needs a finite curvature of f");
    A = 1.0 - tau * p.a;
    B = -tau * m;
  }
  // prox_{sigma h*}(z) = c z with c = b/(b + sigma); h* is the indicator of {0} when b = 0.
  const double c = std::isinf(p.b) ? 1.0 : p.b / (p.b + sigma);
  Eigen::Matrix2d T;
  T << A, B, c * sigma * m * (2.0 * A - 1.0), c * (1.0 + 2.0 * sigma * m * B);
  return T;
}

struct QuadWorst {
  double rate = 0.0;
  QuadPoint point;
};

namespace detail {

inline double spectral_norm(const Eigen::Matrix2d& T) {
  const double f2 = T.squaredNorm();
  const double det = T.determinant();
  const double disc = std::max(0.0, f2 * f2 - 4.0 * det * det);
  return std::sqrt(std::max(0.0, 0.5 * (f2 + std::sqrt(disc))));
}

// Box axis sampled through s in [0, 1]; unbounded axes use lo + s/(1 - s).
struct Axis {
  double lo = 0.0;
  double hi = 0.0;

  double at(double s) const {
    if (std::isinf(hi)) return s >= 1.0 ? hi : lo + s / (1.0 - s);
    return lo + s * (hi - lo);
  }
  bool degenerate() const { return hi == lo; }
};

}  // namespace detail

/// Largest k-step contraction factor over the quadratic box, by a grid of
/// `grid_n` points per axis followed by coordinate-wise refinement.
inline QuadWorst quad_worst_rate(const MethodSpec& method, const Problem& problem, int grid_n = 41) {
  if (grid_n < 2) throw InvalidArgument("quad_worst_rate: grid_n must be >= 2");
  if (std::string err = validate(method, problem); !err.empty()) {
    throw InvalidArgument("quad_worst_rate: " + err);
  }
  const bool pd = is_primal_dual(method.kind);
  std::array<detail::Axis, 3> axes;
  if (const auto* sp = std::get_if<SumProblem>(&problem)) {
    axes = {detail::Axis{sp->f_class.mu(), sp->f_class.L()}, detail::Axis{sp->g_class.mu(), sp->g_class.L()},
            detail::Axis{1.0, 1.0}};
  } else {
    const auto& cp = std::get<CompositeProblem>(problem);
    axes = {detail::Axis{cp.f_class.mu(), cp.f_class.L()}, detail::Axis{cp.h_class.mu(), cp.h_class.L()},
            detail::Axis{0.0, cp.op.L_op()}};
  }
  const int k = method.k_steps;
  auto rate_at = [&](const std::array<double, 3>& s) {
    const QuadPoint p{axes[0].at(s[0]), axes[1].at(s[1]), axes[2].at(s[2])};
    if (pd) {
      const Eigen::Matrix2d T = matrix_map(method.kind, method.tau, *method.sigma, p);
      Eigen::Matrix2d P = Eigen::Matrix2d::Identity();
      for (int i = 0; i < k; ++i) P = T * P;
      return detail::spectral_norm(P);
    }
    return std::pow(std::abs(scalar_map(method.kind, method.tau, p)), k);
  };

  std::array<int, 3> counts;
  for (int d = 0; d < 3; ++d) counts[d] = axes[d].degenerate() ? 1 : grid_n;
  std::array<double, 3> best_s{0.0, 0.0, 0.0};
  double best = -1.0;
  std::array<double, 3> s;
  for (int i = 0; i < counts[0]; ++i) {
    s[0] = counts[0] == 1 ? 0.0 : double(i) / (counts[0] - 1);
    for (int j = 0; j < counts[1]; ++j) {
      s[1] = counts[1] == 1 ? 0.0 : double(j) / (counts[1] - 1);
      for (int l = 0; l < counts[2]; ++l) {
        s[2] = counts[2] == 1 ? 0.0 : double(l) / (counts[2] - 1);
        const double r = rate_at(s);
        if (r > best) {
          best = r;
          best_s = s;
        }
      }
    }
  }

  // Pattern search in the unit cube, halving the step until it drops below 1e-8.
  double h = 1.0 / (grid_n - 1);
  for (int guard = 0; h >= 1e-8 && guard < 100000; ++guard) {
    bool moved = false;
    for (int d = 0; d < 3; ++d) {
      if (counts[d] == 1) continue;
      for (double dir : {-1.0, 1.0}) {
        std::array<double, 3> t = best_s;
        t[d] = std::clamp(t[d] + dir * h, 0.0, 1.0);
        if (t[d] == best_s[d]) continue;
        const double r = rate_at(t);
        if (r > best) {
          best = r;
          best_s = t;
          moved = true;
        }
      }
    }
    if (!moved) h *= 0.5;
  }
  return {best, QuadPoint{axes[0].at(best_s[0]), axes[1].at(best_s[1]), axes[2].at(best_s[2])}};
}

}  // namespace pepcmp
