#include "finsler/flow.hpp"

#include <algorithm>
#include <cmath>

#include "finsler/errors.hpp"

namespace finsler {

namespace {

// Minimal-order spray evaluation for the flow right-hand side: only the
// values of G^i are needed, so a (1, 2, 3) jet suffices.
class SprayRhs {
 public:
  explicit SprayRhs(const ScalarKernel& kernel)
      : kernel_(kernel),
        n_(kernel.dim()),
        space_(JetSpace::get(kernel.dim(), JetOrders{1, 2, 3})) {}

  // state = (x, y); returns (y, -2G).
  Eigen::VectorXd operator()(const Eigen::VectorXd& state) const {
    FiberPoint p{state.head(n_), state.tail(n_)};
    if (!kernel_.in_domain(p.x))
      throw DomainError("geodesic stage left the metric domain");
    const Jet F = kernel_.jet(space_, p);
    const Jet L = F * F;

    Eigen::MatrixXd g(n_, n_);
    Eigen::VectorXd rhs(n_);
    std::vector<int> alpha(static_cast<std::size_t>(n_), 0);
    std::vector<int> beta(static_cast<std::size_t>(n_), 0);
    for (int l = 0; l < n_; ++l) {
      for (int j = l; j < n_; ++j) {
        beta.assign(static_cast<std::size_t>(n_), 0);
        beta[static_cast<std::size_t>(l)] += 1;
        beta[static_cast<std::size_t>(j)] += 1;
        g(l, j) = g(j, l) = 0.5 * L.partial(alpha, beta);
      }
      double acc = 0.0;
      for (int k = 0; k < n_; ++k) {
        alpha.assign(static_cast<std::size_t>(n_), 0);
        beta.assign(static_cast<std::size_t>(n_), 0);
        alpha[static_cast<std::size_t>(k)] = 1;
        beta[static_cast<std::size_t>(l)] = 1;
        acc += p.y[k] * L.partial(alpha, beta);
      }
      alpha.assign(static_cast<std::size_t>(n_), 0);
      beta.assign(static_cast<std::size_t>(n_), 0);
      alpha[static_cast<std::size_t>(l)] = 1;
      acc -= L.partial(alpha, beta);
      rhs[l] = acc;
      alpha[static_cast<std::size_t>(l)] = 0;
    }

    Eigen::PartialPivLU<Eigen::MatrixXd> lu(g);
    if (std::abs(lu.determinant()) < 1e-12)
      throw SingularMetricError("metric tensor is singular along the geodesic");
    const Eigen::VectorXd G = 0.25 * lu.solve(rhs);

    Eigen::VectorXd out(2 * n_);
    out.head(n_) = p.y;
    out.tail(n_) = -2.0 * G;
    return out;
  }

 private:
  const ScalarKernel& kernel_;
  int n_;
  std::shared_ptr<const JetSpace> space_;
};

Eigen::VectorXd rk4_step(const SprayRhs& rhs, const Eigen::VectorXd& s,
                         double dt) {
  const Eigen::VectorXd k1 = rhs(s);
  const Eigen::VectorXd k2 = rhs(s + 0.5 * dt * k1);
  const Eigen::VectorXd k3 = rhs(s + 0.5 * dt * k2);
  const Eigen::VectorXd k4 = rhs(s + dt * k3);
  return s + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

// Dormand-Prince 5(4) tableau.
constexpr double A21 = 1.0 / 5.0;
constexpr double A31 = 3.0 / 40.0, A32 = 9.0 / 40.0;
constexpr double A41 = 44.0 / 45.0, A42 = -56.0 / 15.0, A43 = 32.0 / 9.0;
constexpr double A51 = 19372.0 / 6561.0, A52 = -25360.0 / 2187.0,
                 A53 = 64448.0 / 6561.0, A54 = -212.0 / 729.0;
constexpr double A61 = 9017.0 / 3168.0, A62 = -355.0 / 33.0,
                 A63 = 46732.0 / 5247.0, A64 = 49.0 / 176.0,
                 A65 = -5103.0 / 18656.0;
constexpr double B1 = 35.0 / 384.0, B3 = 500.0 / 1113.0, B4 = 125.0 / 192.0,
                 B5 = -2187.0 / 6784.0, B6 = 11.0 / 84.0;
// Difference between the 5th- and 4th-order weights (error estimator).
constexpr double E1 = 71.0 / 57600.0, E3 = -71.0 / 16695.0, E4 = 71.0 / 1920.0,
                 E5 = -17253.0 / 339200.0, E6 = 22.0 / 525.0, E7 = -1.0 / 40.0;

struct Dp45Result {
  Eigen::VectorXd next;
  double err = 0.0;  // scaled error norm; accept when <= 1
};

Dp45Result dp45_step(const SprayRhs& rhs, const Eigen::VectorXd& s, double dt,
                     double rtol, double atol) {
  const Eigen::VectorXd k1 = rhs(s);
  const Eigen::VectorXd k2 = rhs(s + dt * (A21 * k1));
  const Eigen::VectorXd k3 = rhs(s + dt * (A31 * k1 + A32 * k2));
  const Eigen::VectorXd k4 = rhs(s + dt * (A41 * k1 + A42 * k2 + A43 * k3));
  const Eigen::VectorXd k5 =
      rhs(s + dt * (A51 * k1 + A52 * k2 + A53 * k3 + A54 * k4));
  const Eigen::VectorXd k6 =
      rhs(s + dt * (A61 * k1 + A62 * k2 + A63 * k3 + A64 * k4 + A65 * k5));
  Dp45Result out;
  out.next = s + dt * (B1 * k1 + B3 * k3 + B4 * k4 + B5 * k5 + B6 * k6);
  const Eigen::VectorXd k7 = rhs(out.next);
  const Eigen::VectorXd e =
      dt * (E1 * k1 + E3 * k3 + E4 * k4 + E5 * k5 + E6 * k6 + E7 * k7);
  double acc = 0.0;
  for (int i = 0; i < s.size(); ++i) {
    const double sc = atol + rtol * std::max(std::abs(s[i]), std::abs(out.next[i]));
    const double q = e[i] / sc;
    acc += q * q;
  }
  out.err = std::sqrt(acc / static_cast<double>(s.size()));
  return out;
}

void thin_in_place(Trajectory& traj, int max_states) {
  const int m = static_cast<int>(traj.times.size());
  if (max_states < 2 || m <= max_states) return;
  std::vector<double> times;
  std::vector<FiberPoint> states;
  times.reserve(static_cast<std::size_t>(max_states));
  states.reserve(static_cast<std::size_t>(max_states));
  int prev = -1;
  for (int i = 0; i < max_states; ++i) {
    const int idx = static_cast<int>(
        std::lround(static_cast<double>(i) * (m - 1) / (max_states - 1)));
    if (idx == prev) continue;
    prev = idx;
    times.push_back(traj.times[static_cast<std::size_t>(idx)]);
    states.push_back(traj.states[static_cast<std::size_t>(idx)]);
  }
  traj.times = std::move(times);
  traj.states = std::move(states);
}

constexpr double kExitMargin = 1e-3;

}  // namespace

Trajectory integrate_geodesic(const ScalarKernel& kernel,
                              const Eigen::VectorXd& x0,
                              const Eigen::VectorXd& y0, double t_end,
                              const IntegratorController& controller,
                              int max_states) {
  const int n = kernel.dim();
  if (x0.size() != n || y0.size() != n)
    throw ParamError("initial condition dimension mismatch");
  if (y0.norm() == 0.0) throw ParamError("initial velocity must be nonzero");
  if (!kernel.in_domain(x0))
    throw DomainError("initial base point outside the metric domain");

  SprayRhs rhs(kernel);
  Trajectory traj;
  Eigen::VectorXd s(2 * n);
  s.head(n) = x0;
  s.tail(n) = y0;
  double t = 0.0;
  traj.times.push_back(t);
  traj.states.push_back({x0, y0});

  const double dir = (t_end >= 0.0) ? 1.0 : -1.0;
  const double span = std::abs(t_end);
  if (span == 0.0) return traj;

  auto exited = [&](const Eigen::VectorXd& state) {
    return kernel.domain_margin(state.head(n)) < kExitMargin;
  };
  if (exited(s)) {
    traj.status = Trajectory::Status::DomainExit;
    return traj;
  }

  const double min_dt = std::max(1e-14, 16.0 * span *
                                            std::numeric_limits<double>::epsilon());

  if (controller.kind == IntegratorController::Kind::FixedRK4) {
    if (controller.dt <= 0.0) throw ParamError("fixed step size must be positive");
    const double dt0 = controller.dt;
    while (std::abs(t) < span) {
      const double dt = dir * std::min(dt0, span - std::abs(t));
      Eigen::VectorXd next;
      try {
        next = rk4_step(rhs, s, dt);
      } catch (const DomainError&) {
        traj.status = Trajectory::Status::DomainExit;
        break;
      }
      s = std::move(next);
      t += dt;
      traj.times.push_back(t);
      traj.states.push_back({s.head(n), s.tail(n)});
      if (exited(s)) {
        traj.status = Trajectory::Status::DomainExit;
        break;
      }
    }
  } else {
    double dt = std::min(1e-2, span);
    while (std::abs(t) < span) {
      dt = std::min(dt, span - std::abs(t));
      if (dt < min_dt)
        throw StepFailure("adaptive step size underflow at t = " +
                          std::to_string(t));
      bool rejected_on_domain = false;
      Dp45Result step;
      try {
        step = dp45_step(rhs, s, dir * dt, controller.rtol, controller.atol);
      } catch (const DomainError&) {
        rejected_on_domain = true;
      }
      if (rejected_on_domain) {
        // A stage crossed the boundary: shrink toward it, or stop if the
        // current point is already at the exit margin.
        if (exited(s) || dt * 0.5 < min_dt) {
          traj.status = Trajectory::Status::DomainExit;
          break;
        }
        dt *= 0.5;
        continue;
      }
      if (step.err <= 1.0) {
        s = std::move(step.next);
        t += dir * dt;
        traj.times.push_back(t);
        traj.states.push_back({s.head(n), s.tail(n)});
        if (exited(s)) {
          traj.status = Trajectory::Status::DomainExit;
          break;
        }
      }
      const double factor =
          0.9 * std::pow(std::max(step.err, 1e-10), -0.2);
      dt *= std::clamp(factor, 0.2, 5.0);
    }
  }

  thin_in_place(traj, max_states);
  return traj;
}

DriftReport track_first_integrals(const ScalarKernel& kernel,
                                  const ScalarKernel* aux,
                                  const VolumeDensity& volume, Trajectory& traj,
                                  const std::set<std::string>& which) {
  const double inf = std::numeric_limits<double>::infinity();
  auto evaluate = [&](const std::string& name, const FiberPoint& p) -> double {
    if (name == "F") return kernel.value(p);
    if (name == "lambda") return lambda_integral(kernel, p);
    if (name == "I0") {
      if (aux == nullptr)
        throw ParamError("tracking I0 requires an auxiliary metric");
      return painleve_I0(kernel, *aux, volume, p);
    }
    if (name == "f") {
      // Always report the least-squares fit; residual gating is the
      // verifier's job.
      return scalar_mean_berwald(kernel, volume, p, inf)->f;
    }
    throw ParamError("unknown tracked quantity '" + name + "'");
  };

  DriftReport report;
  for (const std::string& name : which) {
    std::vector<double> vals;
    vals.reserve(traj.states.size());
    for (const FiberPoint& p : traj.states) vals.push_back(evaluate(name, p));
    DriftEntry entry;
    if (!vals.empty()) {
      entry.initial = vals.front();
      const double scale = std::max(1.0, std::abs(entry.initial));
      for (std::size_t i = 0; i < vals.size(); ++i) {
        const double d = std::abs(vals[i] - entry.initial) / scale;
        if (d > entry.max_drift) {
          entry.max_drift = d;
          entry.t_at_max = traj.times[i];
        }
      }
    }
    report.quantities[name] = entry;
    traj.tracked[name] = std::move(vals);
  }
  return report;
}

namespace {

struct SampleSweep {
  double chi_max_norm = 0.0;
  int rank_modal = 0;
  std::vector<Eigen::MatrixXd> E;
  std::vector<FiberPoint> pts;
};

SampleSweep sweep_samples(const MetricKernel& kernel,
                          const VolumeDensity& volume, int sample_count,
                          std::uint64_t seed, double rank_tol) {
  SampleSweep out;
  out.pts = sample_fiber_points(kernel, sample_count, seed);
  std::map<int, int> rank_votes;
  for (const FiberPoint& p : out.pts) {
    const CurvaturePack cp = curvature_pack(kernel, volume, p);
    const double norm = cp.chi.norm() / (1.0 + p.y.squaredNorm());
    out.chi_max_norm = std::max(out.chi_max_norm, norm);
    rank_votes[rank_E(cp.E, rank_tol)] += 1;
    out.E.push_back(cp.E);
  }
  int best = 0;
  for (const auto& [r, c] : rank_votes)
    if (c > best) {
      best = c;
      out.rank_modal = r;
    }
  return out;
}

// Trajectory starts drawn from a seed offset so they never coincide with
// the static sample set; velocities normalized to F = 1.
std::vector<FiberPoint> trajectory_starts(const MetricKernel& kernel,
                                          int count, std::uint64_t seed) {
  std::vector<FiberPoint> pts =
      sample_fiber_points(kernel, count, seed + 0x9e3779b97f4a7c15ULL);
  for (FiberPoint& p : pts) {
    const double F = kernel.value(p);
    if (F <= 0.0) throw SingularMetricError("nonpositive F at trajectory start");
    p.y /= F;
  }
  return pts;
}

void merge_drift(DriftReport& into, const DriftReport& from) {
  for (const auto& [name, e] : from.quantities) {
    auto it = into.quantities.find(name);
    if (it == into.quantities.end() || e.max_drift > it->second.max_drift)
      into.quantities[name] = e;
  }
}

}  // namespace

TheoremVerdict verify_theorem1(const MetricKernel& kernel,
                               const VolumeDensity& volume, int sample_count,
                               int trajectory_count, std::uint64_t seed,
                               const VerifyTolerances& tol) {
  const int n = kernel.dim();
  TheoremVerdict out;
  out.samples = sample_count;
  out.trajectories = trajectory_count;
  out.seed = seed;

  const SampleSweep sweep =
      sweep_samples(kernel, volume, sample_count, seed, tol.rank_rel);
  out.chi_max_norm = sweep.chi_max_norm;
  out.rank_E_modal = sweep.rank_modal;
  if (!sweep.pts.empty())
    out.lambda_sample = lambda_integral(kernel, sweep.pts.front());

  if (out.chi_max_norm > tol.chi || out.rank_E_modal != n - 1) {
    out.verdict = TheoremVerdict::Verdict::HypothesesFail;
    return out;
  }

  for (const FiberPoint& start : trajectory_starts(kernel, trajectory_count, seed)) {
    Trajectory traj = integrate_geodesic(kernel, start.x, start.y, tol.t_end,
                                         IntegratorController::adaptive());
    merge_drift(out.integral_drift,
                track_first_integrals(kernel, nullptr, volume, traj, {"lambda"}));
  }
  out.verdict = (out.integral_drift.max_drift() <= tol.drift)
                    ? TheoremVerdict::Verdict::Pass
                    : TheoremVerdict::Verdict::Fail;
  return out;
}

TheoremVerdict verify_theorem2(const MetricKernel& kernel,
                               const VolumeDensity& volume, int sample_count,
                               int trajectory_count, std::uint64_t seed,
                               const VerifyTolerances& tol) {
  const int n = kernel.dim();
  const double inf = std::numeric_limits<double>::infinity();
  TheoremVerdict out;
  out.samples = sample_count;
  out.trajectories = trajectory_count;
  out.seed = seed;

  const SampleSweep sweep =
      sweep_samples(kernel, volume, sample_count, seed, tol.rank_rel);
  out.chi_max_norm = sweep.chi_max_norm;
  out.rank_E_modal = sweep.rank_modal;

  double residual_max = 0.0;
  double f_min = inf, f_max = -inf;
  for (std::size_t i = 0; i < sweep.pts.size(); ++i) {
    const ScalarMeanBerwald smb =
        *scalar_mean_berwald(kernel, volume, sweep.pts[i], inf);
    residual_max = std::max(residual_max, smb.residual);
    f_min = std::min(f_min, smb.f);
    f_max = std::max(f_max, smb.f);
    if (i == 0) out.f_sample = smb.f;
  }
  out.scalar_residual_max = residual_max;

  if (out.chi_max_norm > tol.chi || residual_max > tol.scalar_residual) {
    out.verdict = TheoremVerdict::Verdict::HypothesesFail;
    return out;
  }

  bool conclusions_ok = true;
  if (n > 2) {
    out.f_spread = f_max - f_min;
    // f should not depend on y; probe the fit with wide central
    // differences so the fit's round-off does not dominate.
    double df_max = 0.0;
    for (const FiberPoint& p : sweep.pts) {
      const double h = 0.05 * (1.0 + p.y.norm());
      Eigen::VectorXd grad(n);
      for (int i = 0; i < n; ++i) {
        FiberPoint hi = p, lo = p;
        hi.y[i] += h;
        lo.y[i] -= h;
        const double fp = scalar_mean_berwald(kernel, volume, hi, inf)->f;
        const double fm = scalar_mean_berwald(kernel, volume, lo, inf)->f;
        grad[i] = (fp - fm) / (2.0 * h);
      }
      df_max = std::max(df_max, grad.norm());
    }
    out.df_dy_max = df_max;
    const double f_scale = std::max(1.0, std::abs(out.f_sample.value_or(0.0)));
    if (df_max > tol.drift || *out.f_spread > tol.drift * f_scale)
      conclusions_ok = false;
  }

  for (const FiberPoint& start : trajectory_starts(kernel, trajectory_count, seed)) {
    Trajectory traj = integrate_geodesic(kernel, start.x, start.y, tol.t_end,
                                         IntegratorController::adaptive());
    merge_drift(out.integral_drift,
                track_first_integrals(kernel, nullptr, volume, traj, {"f"}));
  }
  if (out.integral_drift.max_drift() > tol.drift) conclusions_ok = false;

  out.verdict = conclusions_ok ? TheoremVerdict::Verdict::Pass
                               : TheoremVerdict::Verdict::Fail;
  return out;
}

}  // namespace finsler
