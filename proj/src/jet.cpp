#include "finsler/jet.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <tuple>

namespace finsler {

namespace {

std::uint64_t pack_exps(std::span<const std::uint8_t> e) {
  std::uint64_t key = 0;
  for (std::size_t i = 0; i < e.size(); ++i) {
    key |= static_cast<std::uint64_t>(e[i] & 0x3f) << (6 * i);
  }
  return key;
}

double factorial(int k) {
  double f = 1;
  for (int i = 2; i <= k; ++i) f *= i;
  return f;
}

}  // namespace

JetOrders min_orders(const JetOrders& a, const JetOrders& b) {
  return {std::min(a.max_x, b.max_x), std::min(a.max_y, b.max_y),
          std::min(a.max_total, b.max_total)};
}

JetSpace::JetSpace(int dim, JetOrders o) : dim_(dim), orders_(o) {
  if (dim < 1) throw ParamError("jet space dimension must be positive");
  if (o.max_x < 0 || o.max_y < 0 || o.max_total < 0)
    throw ParamError("jet orders must be non-negative");
  const int nv = 2 * dim;

  // Enumerate all admissible exponent vectors.
  std::vector<std::vector<std::uint8_t>> mono;
  std::vector<std::uint8_t> cur(nv, 0);
  auto rec = [&](auto&& self, int var, int xd, int yd) -> void {
    if (var == nv) {
      mono.push_back(cur);
      return;
    }
    const bool is_x = var < dim;
    const int group_left = is_x ? o.max_x - xd : o.max_y - yd;
    const int total_left = o.max_total - xd - yd;
    for (int e = 0; e <= std::min(group_left, total_left); ++e) {
      cur[var] = static_cast<std::uint8_t>(e);
      self(self, var + 1, xd + (is_x ? e : 0), yd + (is_x ? 0 : e));
    }
    cur[var] = 0;
  };
  rec(rec, 0, 0, 0);

  std::sort(mono.begin(), mono.end(), [&](const auto& a, const auto& b) {
    int ta = 0, tb = 0;
    for (auto v : a) ta += v;
    for (auto v : b) tb += v;
    if (ta != tb) return ta < tb;
    return a < b;
  });

  const int m = static_cast<int>(mono.size());
  exps_.resize(static_cast<std::size_t>(m) * nv);
  xdeg_.resize(m);
  ydeg_.resize(m);
  fact_.resize(m);
  lookup_.reserve(m);
  for (int i = 0; i < m; ++i) {
    int xd = 0, yd = 0;
    double f = 1;
    for (int v = 0; v < nv; ++v) {
      const int e = mono[i][v];
      exps_[static_cast<std::size_t>(i) * nv + v] = mono[i][v];
      (v < dim ? xd : yd) += e;
      f *= factorial(e);
    }
    xdeg_[i] = xd;
    ydeg_[i] = yd;
    fact_[i] = f;
    lookup_.emplace_back(pack_exps(mono[i]), i);
  }
  std::sort(lookup_.begin(), lookup_.end());

  raise_.assign(static_cast<std::size_t>(m) * nv, -1);
  prod_.assign(static_cast<std::size_t>(m) * m, -1);
  std::vector<std::uint8_t> tmp(nv);
  for (int i = 0; i < m; ++i) {
    for (int v = 0; v < nv; ++v) {
      std::copy_n(&exps_[static_cast<std::size_t>(i) * nv], nv, tmp.begin());
      tmp[v]++;
      raise_[i * nv + v] = static_cast<std::int32_t>(index_of(tmp));
    }
    for (int j = 0; j <= i; ++j) {
      if (tdeg(i) + tdeg(j) > o.max_total) continue;
      bool ok = true;
      for (int v = 0; v < nv; ++v) {
        const int s = exps_[static_cast<std::size_t>(i) * nv + v] +
                      exps_[static_cast<std::size_t>(j) * nv + v];
        if (s > 63) ok = false;
        tmp[v] = static_cast<std::uint8_t>(s);
      }
      const int k = ok ? index_of(tmp) : -1;
      prod_[static_cast<std::size_t>(i) * m + j] = static_cast<std::int32_t>(k);
      prod_[static_cast<std::size_t>(j) * m + i] = static_cast<std::int32_t>(k);
    }
  }
}

int JetSpace::index_of(std::span<const std::uint8_t> exps) const {
  const std::uint64_t key = pack_exps(exps);
  auto it = std::lower_bound(lookup_.begin(), lookup_.end(),
                             std::make_pair(key, -1));
  if (it == lookup_.end() || it->first != key) return -1;
  return it->second;
}

std::vector<int> JetSpace::region(const JetOrders& v) const {
  std::vector<int> out;
  out.reserve(size());
  for (int m = 0; m < size(); ++m) {
    if (within(m, v)) out.push_back(m);
  }
  return out;
}

std::shared_ptr<const JetSpace> JetSpace::get(int dim, JetOrders o) {
  if (o.max_total > 10)
    throw CapabilityError("requested jet total order exceeds engine cap (10)");
  static std::mutex mu;
  static std::map<std::tuple<int, int, int, int>, std::shared_ptr<const JetSpace>>
      cache;
  std::lock_guard<std::mutex> lock(mu);
  auto key = std::make_tuple(dim, o.max_x, o.max_y, o.max_total);
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;
  auto sp = std::make_shared<const JetSpace>(dim, o);
  cache.emplace(key, sp);
  return sp;
}

Jet::Jet(std::shared_ptr<const JetSpace> space, JetOrders valid)
    : space_(std::move(space)), c_(space_->size(), 0.0), valid_(valid) {}

Jet Jet::constant(std::shared_ptr<const JetSpace> space, double v) {
  Jet j(space, space->orders());
  j.c_[0] = v;
  return j;
}

Jet Jet::variable(std::shared_ptr<const JetSpace> space, int var, double value) {
  const JetOrders& o = space->orders();
  JetOrders valid = o;
  const int idx = space->raise(0, var);
  if (idx >= 0) {
    Jet j(space, valid);
    j.c_[0] = value;
    j.c_[idx] = 1.0;
    return j;
  }
  // The linear monomial is outside the basis: the jet is exact only on the
  // region where that variable's group order is zero.
  const bool is_x = var < space->dim();
  if (is_x) {
    valid.max_x = 0;
  } else {
    valid.max_y = 0;
  }
  Jet j(space, valid);
  j.c_[0] = value;
  return j;
}

void Jet::require_readable() const {
  if (!space_ || valid_.max_x < 0 || valid_.max_y < 0 || valid_.max_total < 0)
    throw CapabilityError("jet validity exhausted; raise the order budget");
}

double Jet::value() const {
  require_readable();
  return c_[0];
}

double Jet::partial(std::span<const int> alpha, std::span<const int> beta) const {
  require_readable();
  const int n = space_->dim();
  if (static_cast<int>(alpha.size()) != n || static_cast<int>(beta.size()) != n)
    throw CapabilityError("multi-index length does not match dimension");
  std::vector<std::uint8_t> e(2 * n);
  int xd = 0, yd = 0;
  for (int i = 0; i < n; ++i) {
    e[i] = static_cast<std::uint8_t>(alpha[i]);
    e[n + i] = static_cast<std::uint8_t>(beta[i]);
    xd += alpha[i];
    yd += beta[i];
  }
  if (xd > valid_.max_x || yd > valid_.max_y || xd + yd > valid_.max_total)
    throw CapabilityError("partial derivative outside jet validity");
  const int m = space_->index_of(e);
  if (m < 0) throw CapabilityError("partial derivative outside jet basis");
  return c_[m] * space_->factorial_scale(m);
}

Jet Jet::derivative(int var) const {
  const int nv = space_->num_vars();
  if (var < 0 || var >= nv) throw CapabilityError("derivative variable out of range");
  JetOrders v = valid_;
  if (var < space_->dim()) {
    v.max_x -= 1;
  } else {
    v.max_y -= 1;
  }
  v.max_total -= 1;
  Jet r(space_, v);
  if (v.max_x < 0 || v.max_y < 0 || v.max_total < 0) return r;
  for (int m : space_->region(v)) {
    const int src = space_->raise(m, var);
    if (src < 0) continue;
    r.c_[m] = c_[src] * (space_->exponents(src)[var]);
  }
  return r;
}

Jet& Jet::operator+=(const Jet& o) {
  for (std::size_t i = 0; i < c_.size(); ++i) c_[i] += o.c_[i];
  valid_ = min_orders(valid_, o.valid_);
  return *this;
}

Jet& Jet::operator-=(const Jet& o) {
  for (std::size_t i = 0; i < c_.size(); ++i) c_[i] -= o.c_[i];
  valid_ = min_orders(valid_, o.valid_);
  return *this;
}

Jet& Jet::operator*=(double s) {
  for (double& v : c_) v *= s;
  return *this;
}

Jet& Jet::operator+=(double s) {
  c_[0] += s;
  return *this;
}

void Jet::axpy(double s, const Jet& o) {
  for (std::size_t i = 0; i < c_.size(); ++i) c_[i] += s * o.c_[i];
  valid_ = min_orders(valid_, o.valid_);
}

Jet operator-(const Jet& a) {
  Jet r = a;
  return r *= -1.0;
}

Jet operator-(double s, const Jet& a) {
  Jet r = -a;
  return r += s;
}

Jet operator*(const Jet& a, const Jet& b) {
  const auto& sp = a.space_;
  Jet r(sp, min_orders(a.valid_, b.valid_));
  if (r.valid_.max_x < 0 || r.valid_.max_y < 0 || r.valid_.max_total < 0)
    return r;
  const auto reg = sp->region(r.valid_);
  const int vt = r.valid_.max_total;
  for (int i : reg) {
    const double ai = a.c_[i];
    if (ai == 0.0) continue;
    const int ti = sp->tdeg(i);
    for (int j : reg) {
      if (ti + sp->tdeg(j) > vt) break;  // region is degree-sorted
      const double bj = b.c_[j];
      if (bj == 0.0) continue;
      const int k = sp->product(i, j);
      if (k < 0 || !sp->within(k, r.valid_)) continue;
      r.c_[k] += ai * bj;
    }
  }
  return r;
}

Jet analytic_series(const Jet& u, std::span<const double> coef) {
  u.require_readable();
  Jet w = u;
  w.c_[0] = 0.0;
  Jet r(u.space_, u.valid_);
  r.c_[0] = coef[0];
  const int K = std::min<int>(u.valid_.max_total, static_cast<int>(coef.size()) - 1);
  Jet p = w;
  for (int k = 1; k <= K; ++k) {
    r.axpy(coef[k], p);
    if (k < K) p = p * w;
  }
  return r;
}

namespace {

std::vector<double> recip_coeffs(double c, int K) {
  if (c == 0.0) throw DomainError("division by a jet with zero constant term");
  std::vector<double> coef(K + 1);
  coef[0] = 1.0 / c;
  for (int k = 1; k <= K; ++k) coef[k] = -coef[k - 1] / c;
  return coef;
}

}  // namespace

Jet operator/(const Jet& a, const Jet& b) {
  const int K = std::min(a.validity().max_total, b.validity().max_total);
  return a * analytic_series(b, recip_coeffs(b.value(), std::max(K, 0)));
}

Jet operator/(double s, const Jet& a) {
  return analytic_series(a, recip_coeffs(a.value(), std::max(a.validity().max_total, 0))) * s;
}

Jet sqrt(const Jet& u) {
  const double c = u.value();
  if (c <= 0.0) throw DomainError("sqrt of a jet with non-positive constant term");
  const int K = std::max(u.validity().max_total, 0);
  std::vector<double> coef(K + 1);
  coef[0] = std::sqrt(c);
  for (int k = 1; k <= K; ++k)
    coef[k] = coef[k - 1] * (1.5 / k - 1.0) / c;
  return analytic_series(u, coef);
}

Jet exp(const Jet& u) {
  const int K = std::max(u.validity().max_total, 0);
  std::vector<double> coef(K + 1);
  coef[0] = std::exp(u.value());
  for (int k = 1; k <= K; ++k) coef[k] = coef[k - 1] / k;
  return analytic_series(u, coef);
}

Jet log(const Jet& u) {
  const double c = u.value();
  if (c <= 0.0) throw DomainError("log of a jet with non-positive constant term");
  const int K = std::max(u.validity().max_total, 0);
  std::vector<double> coef(K + 1);
  coef[0] = std::log(c);
  double sign = 1.0;
  for (int k = 1; k <= K; ++k) {
    coef[k] = sign / (k * std::pow(c, k));
    sign = -sign;
  }
  return analytic_series(u, coef);
}

Jet pow(const Jet& u, long long e) {
  if (e == 0) return Jet::constant(u.space(), 1.0);
  if (e < 0) return 1.0 / pow(u, -e);
  Jet r = u;
  long long k = e - 1;
  Jet base = u;
  while (k > 0) {
    if (k & 1) r = r * base;
    base = base * base;
    k >>= 1;
  }
  return r;
}

Jet pow(const Jet& u, long long p, long long q) {
  if (q == 0) throw DomainError("zero denominator in rational exponent");
  if (q < 0) {
    p = -p;
    q = -q;
  }
  if (q == 1) return pow(u, p);
  const double c = u.value();
  if (c <= 0.0)
    throw DomainError("fractional power of a jet with non-positive constant term");
  const double r = static_cast<double>(p) / static_cast<double>(q);
  const int K = std::max(u.validity().max_total, 0);
  std::vector<double> coef(K + 1);
  coef[0] = std::pow(c, r);
  for (int k = 1; k <= K; ++k)
    coef[k] = coef[k - 1] * ((r - (k - 1)) / k) / c;
  return analytic_series(u, coef);
}

}  // namespace finsler
