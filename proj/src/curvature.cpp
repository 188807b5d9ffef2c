#include "finsler/curvature.hpp"

#include <cmath>

namespace finsler {

namespace {

void check_nonsingular(const Eigen::MatrixXd& g) {
  const int n = static_cast<int>(g.rows());
  const double scale = g.cwiseAbs().maxCoeff();
  if (std::abs(g.determinant()) < 1e-12 * std::pow(std::max(scale, 1e-300), n))
    throw SingularMetricError("metric tensor is numerically singular");
}

Eigen::MatrixXd constant_terms(std::vector<Jet>& m, int n) {
  Eigen::MatrixXd out(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) out(i, j) = m[i * n + j].value();
  return out;
}

// Gauss-Jordan on a matrix of jets, pivoting on constant terms.
std::vector<Jet> jet_matrix_inverse(std::vector<Jet> a, int n) {
  check_nonsingular(constant_terms(a, n));
  const auto& space = a[0].space();
  std::vector<Jet> inv;
  inv.reserve(static_cast<std::size_t>(n) * n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      inv.push_back(Jet::constant(space, i == j ? 1.0 : 0.0));
  for (int col = 0; col < n; ++col) {
    int pivot = col;
    for (int r = col + 1; r < n; ++r)
      if (std::abs(a[r * n + col].value()) > std::abs(a[pivot * n + col].value()))
        pivot = r;
    if (a[pivot * n + col].value() == 0.0)
      throw SingularMetricError("metric tensor is numerically singular");
    if (pivot != col) {
      for (int j = 0; j < n; ++j) {
        std::swap(a[pivot * n + j], a[col * n + j]);
        std::swap(inv[pivot * n + j], inv[col * n + j]);
      }
    }
    const Jet scale = 1.0 / a[col * n + col];
    for (int j = 0; j < n; ++j) {
      a[col * n + j] = a[col * n + j] * scale;
      inv[col * n + j] = inv[col * n + j] * scale;
    }
    for (int r = 0; r < n; ++r) {
      if (r == col) continue;
      const Jet factor = a[r * n + col];
      for (int j = 0; j < n; ++j) {
        a[r * n + j] -= factor * a[col * n + j];
        inv[r * n + j] -= factor * inv[col * n + j];
      }
    }
  }
  return inv;
}

Jet jet_matrix_det(std::vector<Jet> a, int n) {
  double sign = 1.0;
  for (int col = 0; col < n; ++col) {
    int pivot = col;
    for (int r = col + 1; r < n; ++r)
      if (std::abs(a[r * n + col].value()) > std::abs(a[pivot * n + col].value()))
        pivot = r;
    if (a[pivot * n + col].value() == 0.0)
      throw SingularMetricError("metric tensor is numerically singular");
    if (pivot != col) {
      for (int j = 0; j < n; ++j) std::swap(a[pivot * n + j], a[col * n + j]);
      sign = -sign;
    }
    for (int r = col + 1; r < n; ++r) {
      const Jet factor = a[r * n + col] / a[col * n + col];
      for (int j = col; j < n; ++j) a[r * n + j] -= factor * a[col * n + j];
    }
  }
  Jet det = a[0];
  for (int col = 1; col < n; ++col) det = det * a[col * n + col];
  return det * sign;
}

}  // namespace

Geometry::Geometry(const ScalarKernel& kernel, const VolumeDensity& volume,
                   FiberPoint p, JetOrders orders)
    : kernel_(kernel), volume_(volume), p_(std::move(p)), n_(kernel.dim()),
      space_(JetSpace::get(kernel.dim(), orders)) {
  if (p_.y.norm() == 0.0) throw DomainError("fiber coordinate y must be nonzero");
}

Jet Geometry::coordinate_y(int k) const {
  return Jet::variable(space_, n_ + k, p_.y[k]);
}

const Jet& Geometry::finsler() {
  if (!F_) F_ = kernel_.jet(space_, p_);
  return *F_;
}

const Jet& Geometry::metric_squared() {
  if (!L_) {
    const Jet& F = finsler();
    L_ = F * F;
  }
  return *L_;
}

void Geometry::require_metric() {
  if (!g_.empty()) return;
  const Jet& L = metric_squared();
  std::vector<Jet> dy(n_);
  for (int i = 0; i < n_; ++i) dy[i] = L.derivative(n_ + i);
  g_.reserve(static_cast<std::size_t>(n_) * n_);
  for (int i = 0; i < n_; ++i)
    for (int j = 0; j < n_; ++j) g_.push_back(dy[i].derivative(n_ + j) * 0.5);
  ginv_ = jet_matrix_inverse(g_, n_);
}

const Jet& Geometry::metric(int i, int j) {
  require_metric();
  return g_[i * n_ + j];
}

const Jet& Geometry::metric_inv(int i, int j) {
  require_metric();
  return ginv_[i * n_ + j];
}

const Jet& Geometry::det_metric() {
  if (!detg_) {
    require_metric();
    detg_ = jet_matrix_det(g_, n_);
  }
  return *detg_;
}

void Geometry::require_spray() {
  if (!G_.empty()) return;
  require_metric();
  const Jet& L = metric_squared();
  std::vector<Jet> dLdx(n_);
  for (int l = 0; l < n_; ++l) dLdx[l] = L.derivative(l);
  // rhs_l = y^k d2L/dx^k dy^l - dL/dx^l
  std::vector<Jet> rhs(n_);
  for (int l = 0; l < n_; ++l) {
    Jet acc = -dLdx[l];
    for (int k = 0; k < n_; ++k) acc += coordinate_y(k) * dLdx[k].derivative(n_ + l);
    rhs[l] = acc;
  }
  G_.resize(n_);
  for (int i = 0; i < n_; ++i) {
    Jet acc = metric_inv(i, 0) * rhs[0];
    for (int l = 1; l < n_; ++l) acc += metric_inv(i, l) * rhs[l];
    G_[i] = acc * 0.25;
  }
}

const Jet& Geometry::spray_coeff(int i) {
  require_spray();
  return G_[i];
}

void Geometry::require_connection() {
  if (!N_.empty()) return;
  require_spray();
  N_.reserve(static_cast<std::size_t>(n_) * n_);
  for (int i = 0; i < n_; ++i)
    for (int j = 0; j < n_; ++j) N_.push_back(G_[i].derivative(n_ + j));
}

const Jet& Geometry::connection(int i, int j) {
  require_connection();
  return N_[i * n_ + j];
}

const Jet& Geometry::distortion() {
  if (!tau_) {
    const Jet sigma = volume_.jet(space_, p_);
    tau_ = (log(det_metric()) - log(sigma)) * 0.5;
  }
  return *tau_;
}

const Jet& Geometry::shen_function() {
  if (!S_) S_ = spray_apply(distortion());
  return *S_;
}

Jet Geometry::horizontal_deriv(const Jet& f, int k) {
  require_connection();
  Jet acc = f.derivative(k);
  for (int j = 0; j < n_; ++j) acc -= N_[j * n_ + k] * f.derivative(n_ + j);
  return acc;
}

Jet Geometry::spray_apply(const Jet& f) {
  require_spray();
  Jet acc = coordinate_y(0) * f.derivative(0);
  for (int k = 1; k < n_; ++k) acc += coordinate_y(k) * f.derivative(k);
  for (int k = 0; k < n_; ++k) acc -= 2.0 * (G_[k] * f.derivative(n_ + k));
  return acc;
}

MetricJet metric_jet(const ScalarKernel& kernel, const VolumeDensity& volume,
                     const FiberPoint& p) {
  const int n = kernel.dim();
  if (p.y.norm() == 0.0) throw DomainError("fiber coordinate y must be nonzero");
  const JetTable table = eval_jet(kernel, p, JetOrders{0, 3, 3});
  const Jet& F = table.jet();
  const Jet L = F * F;

  MetricJet out;
  out.F = F.value();
  out.g.resize(n, n);
  out.h.resize(n, n);
  out.C = Tensor3(n);
  std::vector<int> alpha(n, 0), beta(n, 0);
  auto bpart = [&](const Jet& jet, std::initializer_list<int> ys) {
    beta.assign(n, 0);
    for (int i : ys) beta[i] += 1;
    return jet.partial(alpha, beta);
  };
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      out.g(i, j) = 0.5 * bpart(L, {i, j});
      out.h(i, j) = out.F * bpart(F, {i, j});
      for (int k = 0; k < n; ++k) out.C(i, j, k) = 0.25 * bpart(L, {i, j, k});
    }
  check_nonsingular(out.g);
  out.det_g = out.g.determinant();
  out.g_inv = out.g.inverse();
  out.y_low = out.g * p.y;
  out.I.resize(n);
  for (int k = 0; k < n; ++k) {
    double acc = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) acc += out.g_inv(i, j) * out.C(i, j, k);
    out.I[k] = acc;
  }
  const double sigma = volume.value(p.x);
  if (out.det_g / sigma <= 0.0)
    throw SingularMetricError("det g / sigma is non-positive; distortion undefined");
  out.tau = 0.5 * std::log(out.det_g / sigma);
  return out;
}

SprayData spray(const ScalarKernel& kernel, const FiberPoint& p) {
  VolumeDensity unit = VolumeDensity::unit(kernel.dim());
  Geometry geo(kernel, unit, p, JetOrders{1, 3, 4});
  const int n = kernel.dim();
  SprayData out;
  out.G.resize(n);
  out.N.resize(n, n);
  for (int i = 0; i < n; ++i) {
    out.G[i] = geo.spray_coeff(i).value();
    for (int j = 0; j < n; ++j) out.N(i, j) = geo.connection(i, j).value();
  }
  return out;
}

CurvaturePack curvature_pack(const ScalarKernel& kernel,
                             const VolumeDensity& volume, const FiberPoint& p) {
  const int n = kernel.dim();
  Geometry geo(kernel, volume, p, JetOrders{2, 5, 6});

  CurvaturePack out;
  out.B = Tensor4(n);
  out.E.setZero(n, n);
  out.E_alt.resize(n, n);
  out.R2 = Tensor3(n);
  out.R3 = Tensor4(n);
  out.chi.setZero(n);
  out.chi_alt.resize(n);

  std::vector<int> alpha(n, 0), beta(n, 0);
  auto bpart = [&](const Jet& jet, std::initializer_list<int> ys) {
    beta.assign(n, 0);
    for (int i : ys) beta[i] += 1;
    return jet.partial(alpha, beta);
  };

  for (int i = 0; i < n; ++i) {
    const Jet& Gi = geo.spray_coeff(i);
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l) out.B(i, j, k, l) = bpart(Gi, {j, k, l});
  }
  for (int j = 0; j < n; ++j)
    for (int k = 0; k < n; ++k) {
      double acc = 0.0;
      for (int i = 0; i < n; ++i) acc += out.B(i, i, j, k);
      out.E(j, k) = 0.5 * acc;
    }

  // R^i_jk = delta N^i_j / delta x^k - delta N^i_k / delta x^j, kept as jets
  // long enough to take one more vertical derivative.
  std::vector<Jet> R(static_cast<std::size_t>(n) * n * n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        Jet r = geo.horizontal_deriv(geo.connection(i, j), k) -
                geo.horizontal_deriv(geo.connection(i, k), j);
        out.R2(i, j, k) = r.value();
        R[(static_cast<std::size_t>(i) * n + j) * n + k] = std::move(r);
      }
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l)
          out.R3(i, j, k, l) =
              R[(static_cast<std::size_t>(i) * n + k) * n + l].derivative(n + j).value();
  // chi_j = -1/2 R^i_ijk y^k in the orientation where R^i_jk = dN^i_k/dx^j
  // - dN^i_j/dx^k; with the opposite orientation used for R2/R3 above the
  // trace picks up a sign, so both chi routes agree.
  for (int j = 0; j < n; ++j) {
    double acc = 0.0;
    for (int i = 0; i < n; ++i)
      for (int k = 0; k < n; ++k) acc += out.R3(i, i, j, k) * p.y[k];
    out.chi[j] = 0.5 * acc;
  }

  const Jet& S = geo.shen_function();
  out.S = S.value();
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) out.E_alt(i, j) = 0.5 * bpart(S, {i, j});
  for (int i = 0; i < n; ++i) {
    const Jet dSdyi = S.derivative(n + i);
    out.chi_alt[i] = 0.5 * (geo.spray_apply(dSdyi).value() - S.derivative(i).value());
  }
  return out;
}

int rank_E(const Eigen::MatrixXd& E, double tol) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(E);
  const auto& sv = svd.singularValues();
  if (sv.size() == 0 || sv[0] == 0.0) return 0;
  int rank = 0;
  for (int i = 0; i < sv.size(); ++i)
    if (sv[i] > tol * sv[0]) ++rank;
  return rank;
}

}  // namespace finsler
