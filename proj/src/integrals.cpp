#include "finsler/integrals.hpp"

#include <cmath>

namespace finsler {

namespace {

// Partial-derivative helpers on a jet of a dim-n kernel.
struct Parts {
  const Jet& jet;
  int n;

  double at(std::initializer_list<int> xs, std::initializer_list<int> ys) const {
    std::vector<int> alpha(n, 0), beta(n, 0);
    for (int i : xs) alpha[i] += 1;
    for (int i : ys) beta[i] += 1;
    return jet.partial(alpha, beta);
  }
};

double bordered_determinant(const Eigen::MatrixXd& top_left,
                            const Eigen::VectorXd& border) {
  const int n = static_cast<int>(border.size());
  Eigen::MatrixXd m(n + 1, n + 1);
  m.topLeftCorner(n, n) = top_left;
  m.topRightCorner(n, 1) = border;
  m.bottomLeftCorner(1, n) = border.transpose();
  m(n, n) = 0.0;
  return m.determinant();
}

}  // namespace

Eigen::MatrixXd mean_berwald_values(const ScalarKernel& kernel,
                                    const FiberPoint& p) {
  const int n = kernel.dim();
  VolumeDensity unit = VolumeDensity::unit(n);
  Geometry geo(kernel, unit, p, JetOrders{1, 5, 6});
  Eigen::MatrixXd E(n, n);
  std::vector<int> alpha(n, 0), beta(n, 0);
  for (int j = 0; j < n; ++j)
    for (int k = j; k < n; ++k) {
      double acc = 0.0;
      for (int i = 0; i < n; ++i) {
        beta.assign(n, 0);
        beta[i] += 1;
        beta[j] += 1;
        beta[k] += 1;
        acc += geo.spray_coeff(i).partial(alpha, beta);
      }
      E(j, k) = E(k, j) = 0.5 * acc;
    }
  return E;
}

double lambda_integral(const ScalarKernel& kernel, const FiberPoint& p) {
  const int n = kernel.dim();
  const Eigen::MatrixXd E = mean_berwald_values(kernel, p);
  const MetricJet mj = metric_jet(kernel, VolumeDensity::unit(n), p);
  const JetTable table = eval_jet(kernel, p, JetOrders{0, 1, 1});
  Eigen::VectorXd dF(n);
  std::vector<int> alpha(n, 0), beta(n, 0);
  for (int i = 0; i < n; ++i) {
    beta.assign(n, 0);
    beta[i] = 1;
    dF[i] = table.partial(alpha, beta);
  }
  const double bdet = bordered_determinant(2.0 * mj.F * E, dF);
  return -bdet / mj.det_g;
}

double painleve_I0(const ScalarKernel& kernelF, const ScalarKernel& kernelFt,
                   const VolumeDensity& volume, const FiberPoint& p) {
  const int n = kernelF.dim();
  const MetricJet a = metric_jet(kernelF, volume, p);
  const MetricJet b = metric_jet(kernelFt, volume, p);
  if (a.det_g * b.det_g <= 0.0)
    throw SingularMetricError(
        "metric determinants have opposite signs; Painleve integral branch undefined");
  return (b.F / a.F) * std::pow(a.det_g / b.det_g, 1.0 / (n + 1));
}

ProjectiveFactor projective_factor(const ScalarKernel& kernelF,
                                   const ScalarKernel& kernelFt,
                                   const VolumeDensity& volume,
                                   const FiberPoint& p) {
  (void)volume;
  const int n = kernelF.dim();
  const SprayData sF = spray(kernelF, p);
  const SprayData sFt = spray(kernelFt, p);
  ProjectiveFactor out;
  out.P_trace = (sFt.N.trace() - sF.N.trace()) / (n + 1);

  const JetTable table = eval_jet(kernelFt, p, JetOrders{1, 1, 2});
  const Parts ft{table.jet(), n};
  double GFt = 0.0;
  for (int k = 0; k < n; ++k)
    GFt += p.y[k] * ft.at({k}, {}) - 2.0 * sF.G[k] * ft.at({}, {k});
  out.P_log = GFt / (2.0 * table.value());
  return out;
}

Eigen::VectorXd rapcsak_residual(const ScalarKernel& kernelF,
                                 const ScalarKernel& kernelFt,
                                 const FiberPoint& p) {
  const int n = kernelF.dim();
  const SprayData sF = spray(kernelF, p);
  const JetTable table = eval_jet(kernelFt, p, JetOrders{1, 2, 3});
  const Parts ft{table.jet(), n};
  Eigen::VectorXd out(n);
  for (int i = 0; i < n; ++i) {
    double acc = -ft.at({i}, {});
    for (int k = 0; k < n; ++k)
      acc += p.y[k] * ft.at({k}, {i}) - 2.0 * sF.G[k] * ft.at({}, {k, i});
    out[i] = acc;
  }
  return out;
}

std::optional<ScalarMeanBerwald> scalar_mean_berwald(const ScalarKernel& kernel,
                                                     const VolumeDensity& volume,
                                                     const FiberPoint& p,
                                                     double tol) {
  const int n = kernel.dim();
  const Eigen::MatrixXd E2 = 2.0 * mean_berwald_values(kernel, p);
  const MetricJet mj = metric_jet(kernel, volume, p);
  const Eigen::MatrixXd h_over_F = mj.h / mj.F;
  const double hh = h_over_F.squaredNorm();
  if (hh == 0.0) throw SingularMetricError("angular metric vanishes");
  ScalarMeanBerwald out;
  out.f = E2.cwiseProduct(h_over_F).sum() / hh;
  const double scale = std::max(E2.norm(), h_over_F.norm());
  out.residual = (E2 - out.f * h_over_F).norm() / scale;
  if (out.residual > tol) return std::nullopt;
  return out;
}

BorderedDetChecks bordered_det_checks(const ScalarKernel& kernel,
                                      const ScalarKernel* aux_kernel,
                                      const FiberPoint& p) {
  const int n = kernel.dim();
  const JetTable table = eval_jet(kernel, p, JetOrders{0, 2, 2});
  const Jet& F = table.jet();
  const Jet L = F * F;
  const Parts fp{F, n};
  const Parts lp{L, n};

  Eigen::MatrixXd d2F(n, n), g(n, n);
  Eigen::VectorXd dF(n);
  for (int i = 0; i < n; ++i) {
    dF[i] = fp.at({}, {i});
    for (int j = 0; j < n; ++j) {
      d2F(i, j) = fp.at({}, {i, j});
      g(i, j) = 0.5 * lp.at({}, {i, j});
    }
  }
  const double det_g = g.determinant();
  if (det_g == 0.0) throw SingularMetricError("metric tensor is singular");
  const double Fv = F.value();

  BorderedDetChecks out;
  out.rund_residual =
      std::abs(det_g + std::pow(Fv, n - 1) * bordered_determinant(d2F, dF)) /
      std::abs(det_g);

  Eigen::VectorXd dFt = dF;
  double Ftv = Fv;
  if (aux_kernel != nullptr) {
    const JetTable aux = eval_jet(*aux_kernel, p, JetOrders{0, 1, 1});
    const Parts ap{aux.jet(), n};
    Ftv = aux.jet().value();
    for (int i = 0; i < n; ++i) dFt[i] = ap.at({}, {i});
  }
  out.gg_residual =
      std::abs(det_g + std::pow(Fv, n + 1) / (Ftv * Ftv) *
                           bordered_determinant(d2F, dFt)) /
      std::abs(det_g);
  return out;
}

AlphaForm alpha_form(const ScalarKernel& kernel, const VolumeDensity& volume,
                     const FiberPoint& p) {
  const int n = kernel.dim();
  Geometry geo(kernel, volume, p, JetOrders{1, 4, 5});
  const Jet& tau = geo.distortion();
  const Jet& S = geo.shen_function();
  AlphaForm out;
  out.horizontal.resize(n);
  out.vertical.resize(n);
  for (int i = 0; i < n; ++i) {
    out.horizontal[i] =
        S.derivative(n + i).value() - geo.horizontal_deriv(tau, i).value();
    out.vertical[i] = -tau.derivative(n + i).value();
  }
  out.i_G_alpha = out.horizontal.dot(p.y);
  return out;
}

IntegralValues integral_values(const ScalarKernel& kernel,
                               const VolumeDensity& volume, const FiberPoint& p,
                               const ScalarKernel* aux_kernel, double tol) {
  IntegralValues out;
  out.lambda = lambda_integral(kernel, p);
  if (auto smb = scalar_mean_berwald(kernel, volume, p, tol)) {
    out.f = smb->f;
    out.f_residual = smb->residual;
  }
  if (aux_kernel != nullptr) {
    out.I0 = painleve_I0(kernel, *aux_kernel, volume, p);
    const ProjectiveFactor pf = projective_factor(kernel, *aux_kernel, volume, p);
    out.P_trace = pf.P_trace;
    out.P_log = pf.P_log;
    out.rapcsak = rapcsak_residual(kernel, *aux_kernel, p);
  }
  return out;
}

}  // namespace finsler
