#include "finsler/kernel.hpp"

#include <cmath>
#include <numeric>

#include "finsler/errors.hpp"

namespace finsler {

JetTable eval_jet(const ScalarKernel& kernel, const FiberPoint& p,
                  JetOrders orders) {
  if (!kernel.in_domain(p.x))
    throw DomainError("evaluation point outside the kernel domain");
  auto space = JetSpace::get(kernel.dim(), orders);
  return JetTable(kernel.jet(space, p));
}

namespace {

// Central difference recursion over a flattened variable list.
double fd_recurse(const ScalarKernel& kernel, const FiberPoint& p,
                  std::span<const int> vars, double h) {
  if (vars.empty()) {
    if (!kernel.in_domain(p.x))
      throw DomainError("finite-difference stencil left the kernel domain");
    return kernel.value(p);
  }
  const int v = vars.back();
  const auto rest = vars.first(vars.size() - 1);
  const int n = p.dim();
  FiberPoint plus = p, minus = p;
  if (v < n) {
    plus.x[v] += h;
    minus.x[v] -= h;
  } else {
    plus.y[v - n] += h;
    minus.y[v - n] -= h;
  }
  return (fd_recurse(kernel, plus, rest, h) - fd_recurse(kernel, minus, rest, h)) /
         (2.0 * h);
}

}  // namespace

double fd_derivative(const ScalarKernel& kernel, const FiberPoint& p,
                     std::span<const int> alpha, std::span<const int> beta,
                     double step) {
  const int n = kernel.dim();
  if (static_cast<int>(alpha.size()) != n || static_cast<int>(beta.size()) != n)
    throw CapabilityError("multi-index length does not match dimension");
  std::vector<int> vars;
  int total = 0;
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < alpha[i]; ++k) vars.push_back(i);
    for (int k = 0; k < beta[i]; ++k) vars.push_back(n + i);
    total += alpha[i] + beta[i];
  }
  if (total > 4)
    throw CapabilityError("finite-difference oracle capped at total order 4");
  if (total == 0) {
    if (!kernel.in_domain(p.x))
      throw DomainError("evaluation point outside the kernel domain");
    return kernel.value(p);
  }
  const double h = step > 0.0 ? step : 1e-3 * (1.0 + p.norm());
  const double coarse = fd_recurse(kernel, p, vars, h);
  const double fine = fd_recurse(kernel, p, vars, h / 2.0);
  // One Richardson level on the O(h^2) central scheme.
  return (4.0 * fine - coarse) / 3.0;
}

double check_homogeneity(const ScalarKernel& kernel, const FiberPoint& p,
                         double degree, double scale) {
  if (scale <= 0.0) throw ParamError("homogeneity scale must be positive");
  if (!kernel.in_domain(p.x))
    throw DomainError("evaluation point outside the kernel domain");
  const double base = kernel.value(p);
  FiberPoint q = p;
  q.y *= scale;
  const double scaled = kernel.value(q);
  return std::abs(scaled - std::pow(scale, degree) * base) / std::abs(base);
}

}  // namespace finsler
