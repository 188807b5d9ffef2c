#pragma once

#include <Eigen/Dense>
#include <limits>
#include <memory>
#include <span>
#include <vector>

#include "finsler/jet.hpp"

namespace finsler {

/// A point of the slit tangent bundle: base coordinates x, fiber
/// coordinates y != 0.
struct FiberPoint {
  Eigen::VectorXd x;
  Eigen::VectorXd y;

  int dim() const { return static_cast<int>(x.size()); }
  double norm() const { return std::sqrt(x.squaredNorm() + y.squaredNorm()); }
};

/// A scalar function on the slit tangent bundle that can be evaluated both
/// pointwise and as a truncated Taylor jet. Implementations must be
/// immutable after construction.
class ScalarKernel {
 public:
  virtual ~ScalarKernel() = default;

  virtual int dim() const = 0;
  virtual double value(const FiberPoint& p) const = 0;
  virtual Jet jet(const std::shared_ptr<const JetSpace>& space,
                  const FiberPoint& p) const = 0;

  virtual bool in_domain(const Eigen::VectorXd&) const { return true; }
  /// Distance from x to the domain boundary (+inf for unbounded domains).
  virtual double domain_margin(const Eigen::VectorXd&) const {
    return std::numeric_limits<double>::infinity();
  }
};

/// All mixed partial derivatives of a kernel at a fiber point, up to the
/// configured orders.
class JetTable {
 public:
  explicit JetTable(Jet jet) : jet_(std::move(jet)) {}

  int dim() const { return jet_.space()->dim(); }
  const JetOrders& orders() const { return jet_.validity(); }

  double value() const { return jet_.value(); }
  /// alpha/beta hold one exponent per variable (length dim each).
  double partial(std::span<const int> alpha, std::span<const int> beta) const {
    return jet_.partial(alpha, beta);
  }

  const Jet& jet() const { return jet_; }

 private:
  Jet jet_;
};

/// Evaluates all mixed partials of the kernel at p, exact to round-off.
JetTable eval_jet(const ScalarKernel& kernel, const FiberPoint& p,
                  JetOrders orders = {});

/// Central finite-difference estimate of one mixed partial, with one level
/// of Richardson extrapolation (leading error O(step^4)). Independent of
/// the jet engine; capped at |alpha|+|beta| <= 4. step <= 0 selects the
/// default 1e-3 * (1 + |p|).
double fd_derivative(const ScalarKernel& kernel, const FiberPoint& p,
                     std::span<const int> alpha, std::span<const int> beta,
                     double step = 0.0);

/// Relative defect of degree-homogeneity in y:
/// |k(x, s*y) - s^degree * k(x, y)| / |k(x, y)|.
double check_homogeneity(const ScalarKernel& kernel, const FiberPoint& p,
                         double degree, double scale);

}  // namespace finsler
