#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "finsler/errors.hpp"

namespace finsler {

/// Truncation orders of a jet: the partial derivative for multi-indices
/// (alpha over x, beta over y) is carried iff |alpha| <= max_x,
/// |beta| <= max_y and |alpha|+|beta| <= max_total.
struct JetOrders {
  int max_x = 2;
  int max_y = 5;
  int max_total = 6;

  friend bool operator==(const JetOrders&, const JetOrders&) = default;
};

JetOrders min_orders(const JetOrders& a, const JetOrders& b);

/// Monomial basis of truncated Taylor polynomials in 2*dim variables
/// (dim base variables followed by dim fiber variables), together with the
/// product and derivative index tables. Spaces are immutable and shared.
class JetSpace {
 public:
  /// Cached accessor; safe for concurrent use.
  static std::shared_ptr<const JetSpace> get(int dim, JetOrders orders);

  int dim() const { return dim_; }
  int num_vars() const { return 2 * dim_; }
  const JetOrders& orders() const { return orders_; }
  int size() const { return static_cast<int>(xdeg_.size()); }

  int xdeg(int m) const { return xdeg_[m]; }
  int ydeg(int m) const { return ydeg_[m]; }
  int tdeg(int m) const { return xdeg_[m] + ydeg_[m]; }

  std::span<const std::uint8_t> exponents(int m) const {
    return {exps_.data() + static_cast<std::size_t>(m) * num_vars(),
            static_cast<std::size_t>(num_vars())};
  }

  /// Index of the monomial with the given exponents, -1 if outside the basis.
  int index_of(std::span<const std::uint8_t> exps) const;

  /// Index of monomial m multiplied by variable var, -1 if outside.
  int raise(int m, int var) const { return raise_[m * num_vars() + var]; }

  /// Index of the product of monomials a and b, -1 if outside.
  int product(int a, int b) const { return prod_[static_cast<std::size_t>(a) * size() + b]; }

  /// Product of the factorials of the exponents of monomial m
  /// (the factor turning a Taylor coefficient into a partial derivative).
  double factorial_scale(int m) const { return fact_[m]; }

  bool within(int m, const JetOrders& v) const {
    return xdeg_[m] <= v.max_x && ydeg_[m] <= v.max_y && tdeg(m) <= v.max_total;
  }

  /// Indices of monomials inside the validity region v, sorted by total degree.
  std::vector<int> region(const JetOrders& v) const;

  JetSpace(int dim, JetOrders orders);

 private:
  int dim_;
  JetOrders orders_;
  std::vector<std::uint8_t> exps_;
  std::vector<int> xdeg_, ydeg_;
  std::vector<std::int32_t> prod_;
  std::vector<std::int32_t> raise_;
  std::vector<double> fact_;
  std::vector<std::pair<std::uint64_t, int>> lookup_;  // sorted packed keys
};

/// A truncated multivariate Taylor expansion of a scalar function around a
/// point of the slit tangent bundle. Coefficients outside the validity
/// region are meaningless and masked; arithmetic propagates validity so
/// that every readable coefficient is exact up to round-off.
class Jet {
 public:
  Jet() = default;

  static Jet constant(std::shared_ptr<const JetSpace> space, double v);
  /// var indexes the 2n variables: [0,n) base, [n,2n) fiber.
  static Jet variable(std::shared_ptr<const JetSpace> space, int var, double value);

  const std::shared_ptr<const JetSpace>& space() const { return space_; }
  const JetOrders& validity() const { return valid_; }

  /// Value of the underlying function at the expansion point.
  double value() const;

  /// Mixed partial derivative; alpha/beta hold one exponent per variable.
  /// Throws CapabilityError if the multi-index lies outside the validity
  /// region.
  double partial(std::span<const int> alpha, std::span<const int> beta) const;

  Jet derivative(int var) const;

  Jet& operator+=(const Jet& o);
  Jet& operator-=(const Jet& o);
  Jet& operator*=(double s);
  Jet& operator+=(double s);

  friend Jet operator+(Jet a, const Jet& b) { return a += b; }
  friend Jet operator-(Jet a, const Jet& b) { return a -= b; }
  friend Jet operator*(const Jet& a, const Jet& b);
  friend Jet operator/(const Jet& a, const Jet& b);
  friend Jet operator*(Jet a, double s) { return a *= s; }
  friend Jet operator*(double s, Jet a) { return a *= s; }
  friend Jet operator+(Jet a, double s) { return a += s; }
  friend Jet operator+(double s, Jet a) { return a += s; }
  friend Jet operator-(Jet a, double s) { return a += -s; }
  friend Jet operator-(double s, const Jet& a);
  friend Jet operator-(const Jet& a);
  friend Jet operator/(const Jet& a, double s) { return a * (1.0 / s); }
  friend Jet operator/(double s, const Jet& a);

  friend Jet sqrt(const Jet& u);
  friend Jet exp(const Jet& u);
  friend Jet log(const Jet& u);
  friend Jet pow(const Jet& u, long long e);
  /// Rational power p/q; requires a positive constant term when q != 1.
  friend Jet pow(const Jet& u, long long p, long long q);

  /// r = r + s*o, in place.
  void axpy(double s, const Jet& o);

 private:
  Jet(std::shared_ptr<const JetSpace> space, JetOrders valid);
  friend Jet analytic_series(const Jet& u, std::span<const double> coef);
  void require_readable() const;

  std::shared_ptr<const JetSpace> space_;
  std::vector<double> c_;
  JetOrders valid_{-1, -1, -1};
};

/// Composition with an analytic function given by its Taylor coefficients
/// coef[k] = f^(k)(c)/k! at the constant term c of u.
Jet analytic_series(const Jet& u, std::span<const double> coef);

}  // namespace finsler
