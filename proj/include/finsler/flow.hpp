#pragma once

#include <map>
#include <set>
#include <string>

#include "finsler/integrals.hpp"

namespace finsler {

struct IntegratorController {
  enum class Kind { FixedRK4, Adaptive };
  Kind kind = Kind::Adaptive;
  double dt = 1e-2;     // fixed-step size
  double rtol = 1e-10;  // adaptive tolerances
  double atol = 1e-12;

  static IntegratorController fixed_rk4(double dt) {
    return {Kind::FixedRK4, dt, 0.0, 0.0};
  }
  static IntegratorController adaptive(double rtol = 1e-10, double atol = 1e-12) {
    return {Kind::Adaptive, 0.0, rtol, atol};
  }
};

/// Time-stamped samples of one geodesic, with any tracked first-integral
/// values filled in by track_first_integrals.
struct Trajectory {
  enum class Status { Completed, DomainExit };
  std::vector<double> times;
  std::vector<FiberPoint> states;
  std::map<std::string, std::vector<double>> tracked;
  Status status = Status::Completed;
};

struct DriftEntry {
  double initial = 0.0;
  double max_drift = 0.0;  // max |v(t) - v(0)| / max(1, |v(0)|)
  double t_at_max = 0.0;
};

struct DriftReport {
  std::map<std::string, DriftEntry> quantities;

  double max_drift() const {
    double m = 0.0;
    for (const auto& [_, e] : quantities) m = std::max(m, e.max_drift);
    return m;
  }
};

/// Integrates the spray flow xdot = y, ydot = -2G(x, y). Stops early with
/// DomainExit when the base point comes within 1e-3 of the domain boundary.
Trajectory integrate_geodesic(const ScalarKernel& kernel,
                              const Eigen::VectorXd& x0,
                              const Eigen::VectorXd& y0, double t_end,
                              const IntegratorController& controller = {},
                              int max_states = 200);

/// Evaluates the requested quantities ("F", "lambda", "I0", "f") at every
/// stored state, fills traj.tracked, and reports drift. "I0" requires aux.
DriftReport track_first_integrals(const ScalarKernel& kernel,
                                  const ScalarKernel* aux,
                                  const VolumeDensity& volume, Trajectory& traj,
                                  const std::set<std::string>& which);

struct VerifyTolerances {
  double chi = 1e-6;            // on |chi| / (1 + |y|^2)
  double rank_rel = 1e-8;       // singular-value threshold for rank E
  double drift = 1e-6;
  double scalar_residual = 1e-5;
  double t_end = 3.0;
};

struct TheoremVerdict {
  enum class Verdict { HypothesesFail, Pass, Fail };

  double chi_max_norm = 0.0;
  int rank_E_modal = 0;
  std::optional<double> scalar_residual_max;
  std::optional<double> f_spread;    // max - min of f over samples (n > 2)
  std::optional<double> df_dy_max;   // max |df/dy| over samples (n > 2)
  std::optional<double> lambda_sample;  // static value at the first sample
  std::optional<double> f_sample;
  DriftReport integral_drift;
  Verdict verdict = Verdict::HypothesesFail;
  int samples = 0;
  int trajectories = 0;
  std::uint64_t seed = 0;
};

TheoremVerdict verify_theorem1(const MetricKernel& kernel,
                               const VolumeDensity& volume, int sample_count,
                               int trajectory_count, std::uint64_t seed,
                               const VerifyTolerances& tol = {});

TheoremVerdict verify_theorem2(const MetricKernel& kernel,
                               const VolumeDensity& volume, int sample_count,
                               int trajectory_count, std::uint64_t seed,
                               const VerifyTolerances& tol = {});

}  // namespace finsler
