#pragma once

#include <optional>

#include "finsler/curvature.hpp"

namespace finsler {

/// First-integral values at a point; optional entries require a second
/// kernel.
struct IntegralValues {
  double lambda = 0.0;
  std::optional<double> I0;
  std::optional<double> P_trace;
  std::optional<double> P_log;
  std::optional<double> f;
  std::optional<double> f_residual;
  std::optional<Eigen::VectorXd> rapcsak;
};

/// The 1-form alpha = nabla I_k dx^k - I_k delta y^k at a point.
struct AlphaForm {
  Eigen::VectorXd horizontal;  // dx^i components
  Eigen::VectorXd vertical;    // delta y^i components (= -I_i)
  double i_G_alpha = 0.0;
};

struct ScalarMeanBerwald {
  double f = 0.0;
  double residual = 0.0;  // relative decomposition residual
};

/// First integral lambda = (-1/det g) * det [[2F E, dF/dy],[dF/dy^T, 0]].
double lambda_integral(const ScalarKernel& kernel, const FiberPoint& p);

/// Painleve first integral I0 = (Ft/F) (det g / det gt)^{1/(n+1)}. The
/// value is always computable; it is a first integral only when the caller
/// has established projective relatedness. Determinants must share a sign.
double painleve_I0(const ScalarKernel& kernelF, const ScalarKernel& kernelFt,
                   const VolumeDensity& volume, const FiberPoint& p);

/// The projective factor by its two routes: the connection-trace formula
/// and P = G(Ft)/(2 Ft) with G the spray of F.
struct ProjectiveFactor {
  double P_trace = 0.0;
  double P_log = 0.0;
};
ProjectiveFactor projective_factor(const ScalarKernel& kernelF,
                                   const ScalarKernel& kernelFt,
                                   const VolumeDensity& volume,
                                   const FiberPoint& p);

/// Components G(dFt/dy^i) - dFt/dx^i with G the spray of F; the zero
/// vector iff F and Ft are projectively related.
Eigen::VectorXd rapcsak_residual(const ScalarKernel& kernelF,
                                 const ScalarKernel& kernelFt,
                                 const FiberPoint& p);

/// Least-squares fit of the scalar f in 2E = (f/F) h; none if the relative
/// residual exceeds tol.
std::optional<ScalarMeanBerwald> scalar_mean_berwald(const ScalarKernel& kernel,
                                                     const VolumeDensity& volume,
                                                     const FiberPoint& p,
                                                     double tol = 1e-5);

/// Residuals of the two bordered-determinant identities for det g: Rund's
/// formula (aux = F) and its generalization to an arbitrary positive
/// 1+-homogeneous aux kernel.
struct BorderedDetChecks {
  double rund_residual = 0.0;
  double gg_residual = 0.0;
};
BorderedDetChecks bordered_det_checks(const ScalarKernel& kernel,
                                      const ScalarKernel* aux_kernel,
                                      const FiberPoint& p);

AlphaForm alpha_form(const ScalarKernel& kernel, const VolumeDensity& volume,
                     const FiberPoint& p);

/// Mean Berwald curvature values alone (trace of the Berwald curvature),
/// at the minimal jet order budget.
Eigen::MatrixXd mean_berwald_values(const ScalarKernel& kernel,
                                    const FiberPoint& p);

/// Convenience bundle for reporting.
IntegralValues integral_values(const ScalarKernel& kernel,
                               const VolumeDensity& volume, const FiberPoint& p,
                               const ScalarKernel* aux_kernel = nullptr,
                               double tol = 1e-5);

}  // namespace finsler
