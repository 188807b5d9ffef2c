#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "finsler/kernel.hpp"
#include "finsler/metrics.hpp"

namespace finsler {

/// Flat rank-3 tensor of extent n in every slot.
struct Tensor3 {
  int n = 0;
  std::vector<double> v;

  Tensor3() = default;
  explicit Tensor3(int n_) : n(n_), v(static_cast<std::size_t>(n_) * n_ * n_, 0.0) {}
  double& operator()(int i, int j, int k) { return v[(static_cast<std::size_t>(i) * n + j) * n + k]; }
  double operator()(int i, int j, int k) const { return v[(static_cast<std::size_t>(i) * n + j) * n + k]; }
};

/// Flat rank-4 tensor of extent n in every slot.
struct Tensor4 {
  int n = 0;
  std::vector<double> v;

  Tensor4() = default;
  explicit Tensor4(int n_) : n(n_), v(static_cast<std::size_t>(n_) * n_ * n_ * n_, 0.0) {}
  double& operator()(int i, int j, int k, int l) {
    return v[((static_cast<std::size_t>(i) * n + j) * n + k) * n + l];
  }
  double operator()(int i, int j, int k, int l) const {
    return v[((static_cast<std::size_t>(i) * n + j) * n + k) * n + l];
  }
};

/// Pointwise metric data.
struct MetricJet {
  double F = 0.0;
  Eigen::MatrixXd g;
  Eigen::MatrixXd g_inv;
  double det_g = 0.0;
  Eigen::MatrixXd h;       // angular metric F * d2F/dy dy
  Eigen::VectorXd y_low;   // y_i = g_ik y^k
  Tensor3 C;               // Cartan torsion
  Eigen::VectorXd I;       // mean Cartan torsion
  double tau = 0.0;        // distortion, 0.5 * ln(det g / sigma)
};

/// Spray coefficients and the nonlinear connection at a point. Horizontal
/// derivatives (delta/delta x) are applied through Geometry, which keeps
/// the jet data the operator needs.
struct SprayData {
  Eigen::VectorXd G;
  Eigen::MatrixXd N;  // N^i_j = dG^i/dy^j
};

/// Pointwise curvature data; quantities with an _alt suffix come from the
/// S-function route and must agree with their partner.
struct CurvaturePack {
  Tensor4 B;               // Berwald curvature d^3 G^i / dy^3
  Eigen::MatrixXd E;       // mean Berwald curvature, trace of B
  Eigen::MatrixXd E_alt;   // 0.5 * d^2 S / dy dy
  Tensor3 R2;              // R^i_jk, curvature of the nonlinear connection
  Tensor4 R3;              // R^i_jkl = dR^i_kl / dy^j
  Eigen::VectorXd chi;     // chi_j = -0.5 R^i_ijk y^k
  Eigen::VectorXd chi_alt; // 0.5 * (G(dS/dy_j) - dS/dx_j)
  double S = 0.0;
};

/// Lazy jet-level pipeline from a kernel to its spray, connection,
/// distortion and S-function at one fiber point. Each cached field is a
/// truncated Taylor expansion around the point, so repeated horizontal and
/// vertical derivatives stay exact to round-off. Instances are cheap
/// throwaway objects; one per (point, operation).
class Geometry {
 public:
  Geometry(const ScalarKernel& kernel, const VolumeDensity& volume,
           FiberPoint p, JetOrders orders);

  int dim() const { return n_; }
  const FiberPoint& point() const { return p_; }

  const Jet& metric_squared();         // L = F^2
  const Jet& finsler();                // F
  const Jet& metric(int i, int j);     // g_ij
  const Jet& metric_inv(int i, int j); // g^ij
  const Jet& det_metric();             // det g
  const Jet& spray_coeff(int i);       // G^i
  const Jet& connection(int i, int j); // N^i_j
  const Jet& distortion();             // tau
  const Jet& shen_function();          // S = G(tau)

  /// delta f / delta x^k = df/dx^k - N^j_k df/dy^j.
  Jet horizontal_deriv(const Jet& f, int k);
  /// G(f) = y^k df/dx^k - 2 G^k df/dy^k.
  Jet spray_apply(const Jet& f);

  Jet coordinate_y(int k) const;

 private:
  void require_metric();
  void require_spray();
  void require_connection();

  const ScalarKernel& kernel_;
  const VolumeDensity& volume_;
  FiberPoint p_;
  int n_;
  std::shared_ptr<const JetSpace> space_;

  std::optional<Jet> L_, F_, detg_, tau_, S_;
  std::vector<Jet> g_, ginv_, G_, N_;
};

MetricJet metric_jet(const ScalarKernel& kernel, const VolumeDensity& volume,
                     const FiberPoint& p);

SprayData spray(const ScalarKernel& kernel, const FiberPoint& p);

CurvaturePack curvature_pack(const ScalarKernel& kernel,
                             const VolumeDensity& volume, const FiberPoint& p);

/// Number of singular values above tol times the largest one.
int rank_E(const Eigen::MatrixXd& E, double tol);

}  // namespace finsler
