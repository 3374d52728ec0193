#pragma once

// Numerical workhorses shared by the solvers: the principal Lambert W
// branch, a predicate bisection with an exact iteration count, and a
// central-cut ellipsoid method for small nonsmooth convex programs.

#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace ehcrn {

/// Principal branch W0(x) for x >= -1/e, solving w * exp(w) = x.
///
/// Three seeds cover the domain: a branch-point expansion in
/// p = sqrt(2 (1 + e x)) near x = -1/e, log1p(x) in the middle, and the
/// asymptotic ln x - ln ln x + ln ln x / ln x for large x.  Halley steps
/// polish to machine accuracy; they are skipped right at the branch point
/// where the derivative vanishes and the expansion is already exact to
/// O(p^7).
inline double lambert_w0(double x) {
  constexpr double kInvE = 0.36787944117144233;
  if (std::isnan(x) || x < -kInvE * (1.0 + 1e-12) - 1e-300) {
    throw std::domain_error("lambert_w0: argument below -1/e");
  }
  const double delta = 1.0 + x * 2.718281828459045235;  // 1 + e*x, >= 0 up to rounding
  if (delta <= 0.0) return -1.0;

  double w;
  if (x < -0.29) {
    const double p = std::sqrt(2.0 * delta);
    w = -1.0 + p * (1.0 + p * (-1.0 / 3.0 + p * (11.0 / 72.0 + p * (-43.0 / 540.0 + p * (769.0 / 17280.0 - p * 221.0 / 8505.0)))));
    if (p < 1e-5) return w;
  } else if (x < 4.0) {
    w = std::log1p(x);
    w *= 1.0 - std::log1p(w) / (2.0 + w);  // cheap correction before polishing
  } else {
    const double l1 = std::log(x);
    const double l2 = std::log(l1);
    w = l1 - l2 + l2 / l1;
  }

  for (int i = 0; i < 12; ++i) {
    const double ew = std::exp(w);
    const double f = w * ew - x;
    const double wp1 = w + 1.0;
    const double denom = ew * wp1 - (w + 2.0) * f / (2.0 * wp1);
    if (denom == 0.0) break;
    const double step = f / denom;
    w -= step;
    if (std::abs(step) <= 4e-16 * (1.0 + std::abs(w))) break;
  }
  return w;
}

struct BisectionResult {
  double value = 0.0;
  int iterations = 0;
};

/// Halves [lo, hi] until hi - lo <= delta, maintaining predicate(lo) true
/// and predicate(hi) false; returns the largest certified-true point.  A
/// true upper endpoint short-circuits (the whole interval passes); a false
/// lower endpoint is a caller error.
inline BisectionResult bisection(const std::function<bool(double)>& predicate, double lo, double hi,
                                 double delta) {
  if (!(delta > 0.0) || !(hi >= lo)) throw std::invalid_argument("bisection: bad interval or tolerance");
  if (!predicate(lo)) throw std::invalid_argument("bisection: predicate false at lower endpoint");
  if (predicate(hi)) return {hi, 0};
  BisectionResult out;
  while (hi - lo > delta) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;  // interval at floating-point resolution
    if (predicate(mid)) {
      lo = mid;
    } else {
      hi = mid;
    }
    ++out.iterations;
  }
  out.value = lo;
  return out;
}

// One oracle answer: either an objective value with a subgradient, or a
// feasibility cut (value ignored) whose subgradient separates the query
// point from the feasible region.
struct EllipsoidCut {
  double value = 0.0;
  std::vector<double> subgradient;
  bool feasibility_cut = false;
};

struct EllipsoidResult {
  std::vector<double> best_point;
  double best_value = std::numeric_limits<double>::infinity();
  long long iterations = 0;
  bool certified = false;  // stopped on the subgradient bound, not the cap
  bool found = false;      // at least one objective cut was seen
  std::string failure;     // nonempty if the shape matrix degenerated
};

// Central-cut ellipsoid localizer for minimization.  Keeps center c and a
// factor B of the shape matrix P = B B' (the ellipsoid is
// { x : (x-c)' P^{-1} (x-c) <= 1 }); every cut through the center shrinks
// the volume by the fixed factor (n^2/(n^2-1))^(n/2) * sqrt((n-1)/(n+1)),
// tracked via log_det.  Updating the factor instead of P itself keeps the
// shape positive semidefinite no matter how ill-conditioned it becomes.
class EllipsoidState {
 public:
  EllipsoidState(std::vector<double> center, double radius) : c_(std::move(center)) {
    n_ = static_cast<int>(c_.size());
    if (n_ < 1 || !(radius > 0.0)) throw std::invalid_argument("EllipsoidState: bad dimension or radius");
    B_.assign(static_cast<std::size_t>(n_) * n_, 0.0);
    for (int i = 0; i < n_; ++i) B_[idx(i, i)] = radius;
    log_det_ = 2.0 * n_ * std::log(radius);
  }

  int dimension() const { return n_; }
  const std::vector<double>& center() const { return c_; }
  double log_det() const { return log_det_; }
  long long cuts() const { return cuts_; }

  /// Applies a cut that discards { x : g . (x - c) > 0 }.  Returns
  /// sqrt(g' P g) = |B' g|, the width of the ellipsoid along g before the
  /// update; for an objective cut of a convex function this bounds
  /// f(c) - min f.
  double apply_cut(const std::vector<double>& g) {
    if (static_cast<int>(g.size()) != n_) throw std::invalid_argument("EllipsoidState: cut dimension mismatch");
    std::vector<double> bg(n_, 0.0);  // B' g
    for (int j = 0; j < n_; ++j) {
      double s = 0.0;
      for (int i = 0; i < n_; ++i) s += B_[idx(i, j)] * g[i];
      bg[j] = s;
    }
    double norm_sq = 0.0;
    for (double v : bg) norm_sq += v * v;
    const double width = std::sqrt(norm_sq);
    if (!(width > 0.0) || !std::isfinite(width)) {
      degenerate_ = true;
      return 0.0;
    }
    for (double& v : bg) v /= width;  // unit direction u in factor coordinates
    std::vector<double> bu(n_, 0.0);  // B u, the cut direction in x space
    for (int i = 0; i < n_; ++i) {
      double s = 0.0;
      for (int j = 0; j < n_; ++j) s += B_[idx(i, j)] * bg[j];
      bu[i] = s;
    }
    const double n = n_;
    for (int i = 0; i < n_; ++i) c_[i] -= bu[i] / (n + 1.0);
    if (n_ == 1) {
      B_[0] *= 0.5;
      log_det_ += std::log(0.25);
    } else {
      const double scale = n * n / (n * n - 1.0);
      const double root = std::sqrt(scale);
      const double sigma = 1.0 - std::sqrt((n - 1.0) / (n + 1.0));
      for (int i = 0; i < n_; ++i) {
        for (int j = 0; j < n_; ++j) {
          B_[idx(i, j)] = root * (B_[idx(i, j)] - sigma * bu[i] * bg[j]);
        }
      }
      log_det_ += n * std::log(scale) + std::log((n - 1.0) / (n + 1.0));
    }
    ++cuts_;
    return width;
  }

  bool degenerate() const { return degenerate_; }

 private:
  std::size_t idx(int i, int j) const { return static_cast<std::size_t>(i) * n_ + j; }

  int n_ = 0;
  std::vector<double> c_;
  std::vector<double> B_;  // row-major factor, P = B B'
  double log_det_ = 0.0;
  long long cuts_ = 0;
  bool degenerate_ = false;
};

/// Minimizes a convex function over the ball B(center0, radius0) subject to
/// convex constraints reported through feasibility cuts.  Stops once an
/// objective cut certifies f(c) - min f <= tol, or after max_iter cuts
/// (default 500 n^2).  A vanishing subgradient at a feasible center is an
/// exact certificate.
inline EllipsoidResult ellipsoid_optimize(const std::function<EllipsoidCut(const std::vector<double>&)>& oracle,
                                          std::vector<double> center0, double radius0, double tol,
                                          long long max_iter = 0) {
  EllipsoidState state(std::move(center0), radius0);
  const int n = state.dimension();
  if (max_iter <= 0) max_iter = 500LL * n * n;
  EllipsoidResult out;
  for (long long it = 0; it < max_iter; ++it) {
    const EllipsoidCut cut = oracle(state.center());
    ++out.iterations;
    double gnorm = 0.0;
    for (double g : cut.subgradient) {
      if (!std::isfinite(g)) {
        out.failure = "non-finite subgradient";
        return out;
      }
      gnorm = std::max(gnorm, std::abs(g));
    }
    if (!cut.feasibility_cut) {
      if (!std::isfinite(cut.value)) {
        out.failure = "non-finite objective value";
        return out;
      }
      if (!out.found || cut.value < out.best_value) {
        out.found = true;
        out.best_value = cut.value;
        out.best_point = state.center();
      }
      if (gnorm == 0.0) {
        out.certified = true;
        return out;
      }
    }
    const double width = state.apply_cut(cut.subgradient);
    if (state.degenerate()) {
      out.failure = "degenerate shape matrix";
      return out;
    }
    if (!cut.feasibility_cut && width <= tol) {
      out.certified = true;
      return out;
    }
  }
  return out;
}

}  // namespace ehcrn
