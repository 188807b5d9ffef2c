#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"
#include "helpers.hpp"

using namespace finsler;
using testutil::fp2;

namespace {

// max distance of the base points from the line through first and last
double collinearity_defect(const Trajectory& traj) {
  const Eigen::VectorXd a = traj.states.front().x;
  Eigen::VectorXd d = traj.states.back().x - a;
  d.normalize();
  double worst = 0.0;
  for (const FiberPoint& s : traj.states) {
    const Eigen::VectorXd r = s.x - a;
    worst = std::max(worst, (r - d.dot(r) * d).norm());
  }
  return worst;
}

}  // namespace

TEST_CASE("Euclidean geodesics are straight lines") {
  MetricKernel eucl = builtin_metric(BuiltinFamily::Euclidean, 2);
  Trajectory traj = integrate_geodesic(eucl, Eigen::Vector2d(0, 0),
                                       Eigen::Vector2d(1, 2), 1.0);
  CHECK(traj.status == Trajectory::Status::Completed);
  CHECK(traj.times.back() == doctest::Approx(1.0));
  CHECK((traj.states.back().x - Eigen::Vector2d(1, 2)).norm() <= 1e-10);
  CHECK((traj.states.back().y - Eigen::Vector2d(1, 2)).norm() <= 1e-10);
}

TEST_CASE("Klein and Funk geodesics are chords of the ball") {
  for (auto family : {BuiltinFamily::Klein, BuiltinFamily::Funk}) {
    MetricKernel k = builtin_metric(family, 2);
    Eigen::Vector2d x0(0.1, -0.2), y0(0.7, 0.4);
    y0 /= k.value({x0, y0});
    Trajectory traj = integrate_geodesic(k, x0, y0, 3.0);
    CHECK(traj.states.size() >= 10);
    CHECK(collinearity_defect(traj) <= 1e-6);
  }
  // Funk is non-reversible: the same chord backwards has different length,
  // so the Euclidean speed profile is asymmetric while F stays 1.
  MetricKernel funk = builtin_metric(BuiltinFamily::Funk, 2);
  Eigen::Vector2d x0(0.3, 0.0);
  Eigen::Vector2d yp(1.0, 0.0), ym(-1.0, 0.0);
  yp /= funk.value({x0, yp});
  ym /= funk.value({x0, ym});
  Trajectory fwd = integrate_geodesic(funk, x0, yp, 1.0);
  Trajectory bwd = integrate_geodesic(funk, x0, ym, 1.0);
  const Eigen::Vector2d df = fwd.states.back().x - x0;
  const Eigen::Vector2d db = bwd.states.back().x - x0;
  CHECK((df + db).norm() > 1e-2);
}

TEST_CASE("F is conserved along its own flow") {
  for (const MetricKernel& k :
       {builtin_metric(BuiltinFamily::Funk, 2), testutil::generic_randers(2)}) {
    VolumeDensity vol = VolumeDensity::unit(2);
    Eigen::Vector2d x0(0.05, -0.1), y0(0.4, 0.25);
    y0 /= k.value({x0, y0});
    Trajectory traj = integrate_geodesic(k, x0, y0, 5.0,
                                         IntegratorController::adaptive(1e-10));
    DriftReport dr = track_first_integrals(k, nullptr, vol, traj, {"F"});
    CHECK(dr.quantities.at("F").max_drift <= 1e-8);
    CHECK(dr.quantities.at("F").initial == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("lambda drifts below tolerance along Funk geodesics") {
  MetricKernel funk = builtin_metric(BuiltinFamily::Funk, 2);
  VolumeDensity vol = VolumeDensity::unit(2);
  Eigen::Vector2d x0(0.05, -0.1), y0(0.4, 0.25);
  y0 /= funk.value({x0, y0});
  Trajectory traj = integrate_geodesic(funk, x0, y0, 3.0);
  DriftReport dr =
      track_first_integrals(funk, nullptr, vol, traj, {"lambda", "f"});
  CHECK(dr.quantities.at("lambda").max_drift <= 1e-6);
  CHECK(dr.quantities.at("lambda").initial == doctest::Approx(1.5).epsilon(1e-8));
  CHECK(dr.quantities.at("f").max_drift <= 1e-6);
}

TEST_CASE("I0 drifts below tolerance along Klein geodesics") {
  MetricKernel klein = builtin_metric(BuiltinFamily::Klein, 2);
  MetricKernel eucl = builtin_metric(BuiltinFamily::Euclidean, 2);
  VolumeDensity vol = VolumeDensity::unit(2);
  for (const FiberPoint& start : sample_fiber_points(klein, 5, 83)) {
    Eigen::VectorXd y0 = start.y / klein.value(start);
    Trajectory traj = integrate_geodesic(klein, start.x, y0, 3.0);
    DriftReport dr = track_first_integrals(klein, &eucl, vol, traj, {"I0"});
    CHECK(dr.quantities.at("I0").max_drift <= 1e-6);
  }
}

TEST_CASE("tracking I0 without an aux metric is an error") {
  MetricKernel klein = builtin_metric(BuiltinFamily::Klein, 2);
  VolumeDensity vol = VolumeDensity::unit(2);
  Trajectory traj = integrate_geodesic(klein, Eigen::Vector2d(0.1, 0),
                                       Eigen::Vector2d(1, 0), 0.5);
  CHECK_THROWS_AS(track_first_integrals(klein, nullptr, vol, traj, {"I0"}),
                  ParamError);
}

TEST_CASE("fixed RK4 converges at fourth order") {
  MetricKernel klein = builtin_metric(BuiltinFamily::Klein, 2);
  VolumeDensity vol = VolumeDensity::unit(2);
  Eigen::Vector2d x0(0.1, -0.05), y0(0.6, 0.3);
  y0 /= klein.value({x0, y0});
  auto drift_at = [&](double dt) {
    Trajectory traj = integrate_geodesic(
        klein, x0, y0, 1.0, IntegratorController::fixed_rk4(dt), 2000);
    DriftReport dr = track_first_integrals(klein, nullptr, vol, traj, {"F"});
    return dr.quantities.at("F").max_drift;
  };
  const double coarse = drift_at(0.05);
  const double fine = drift_at(0.025);
  CHECK(coarse / fine >= 12.0);
}

TEST_CASE("adaptive integration is time-reversible") {
  MetricKernel funk = builtin_metric(BuiltinFamily::Funk, 2);
  Eigen::Vector2d x0(0.1, 0.2), y0(0.5, -0.3);
  y0 /= funk.value({x0, y0});
  Trajectory fwd = integrate_geodesic(funk, x0, y0, 2.0,
                                      IntegratorController::adaptive(1e-10));
  const FiberPoint& end = fwd.states.back();
  Trajectory bwd = integrate_geodesic(funk, end.x, end.y, -2.0,
                                      IntegratorController::adaptive(1e-10));
  CHECK((bwd.states.back().x - x0).norm() <= 1e-7);
  CHECK((bwd.states.back().y - y0).norm() <= 1e-7);
}

TEST_CASE("domain exit stops Funk geodesics near the boundary") {
  MetricKernel funk = builtin_metric(BuiltinFamily::Funk, 2);
  Eigen::Vector2d x0(0.0, 0.0), y0(1.0, 0.0);
  y0 /= funk.value({x0, y0});
  Trajectory traj = integrate_geodesic(funk, x0, y0, 50.0);
  CHECK(traj.status == Trajectory::Status::DomainExit);
  for (const FiberPoint& s : traj.states) CHECK(funk.in_domain(s.x));
  CHECK(traj.states.back().x.norm() > 0.9);
}

TEST_CASE("trajectory thinning bounds the state count") {
  MetricKernel eucl = builtin_metric(BuiltinFamily::Euclidean, 2);
  Trajectory traj = integrate_geodesic(
      eucl, Eigen::Vector2d(0, 0), Eigen::Vector2d(1, 0), 1.0,
      IntegratorController::fixed_rk4(1e-3), 100);
  CHECK(traj.states.size() <= 100);
  CHECK(traj.times.front() == 0.0);
  CHECK(traj.times.back() == doctest::Approx(1.0));
  for (std::size_t i = 1; i < traj.times.size(); ++i)
    CHECK(traj.times[i] > traj.times[i - 1]);
}

TEST_CASE("bad initial conditions are rejected") {
  MetricKernel funk = builtin_metric(BuiltinFamily::Funk, 2);
  CHECK_THROWS_AS(integrate_geodesic(funk, Eigen::Vector2d(1.5, 0),
                                     Eigen::Vector2d(1, 0), 1.0),
                  DomainError);
  CHECK_THROWS_AS(integrate_geodesic(funk, Eigen::Vector2d(0, 0),
                                     Eigen::Vector2d(0, 0), 1.0),
                  ParamError);
}

TEST_CASE("verify_theorem1 verdicts") {
  VolumeDensity v2 = VolumeDensity::unit(2);
  MetricKernel funk2 = builtin_metric(BuiltinFamily::Funk, 2);
  TheoremVerdict pass = verify_theorem1(funk2, v2, 15, 5, 42);
  CHECK(pass.verdict == TheoremVerdict::Verdict::Pass);
  CHECK(pass.rank_E_modal == 1);
  CHECK(pass.chi_max_norm <= 1e-6);
  REQUIRE(pass.lambda_sample.has_value());
  CHECK(*pass.lambda_sample == doctest::Approx(1.5).epsilon(1e-8));
  CHECK(pass.integral_drift.max_drift() <= 1e-6);

  MetricKernel funk3 = builtin_metric(BuiltinFamily::Funk, 3);
  VolumeDensity v3 = VolumeDensity::unit(3);
  TheoremVerdict pass3 = verify_theorem1(funk3, v3, 10, 3, 42);
  CHECK(pass3.verdict == TheoremVerdict::Verdict::Pass);
  CHECK(pass3.rank_E_modal == 2);
  CHECK(*pass3.lambda_sample == doctest::Approx(4.0).epsilon(1e-8));

  MetricKernel eucl = builtin_metric(BuiltinFamily::Euclidean, 2);
  TheoremVerdict flat = verify_theorem1(eucl, v2, 10, 3, 42);
  CHECK(flat.verdict == TheoremVerdict::Verdict::HypothesesFail);
  CHECK(flat.rank_E_modal == 0);
  REQUIRE(flat.lambda_sample.has_value());
  CHECK(std::abs(*flat.lambda_sample) <= 1e-10);

  TheoremVerdict bad = verify_theorem1(testutil::generic_randers(2), v2, 10, 3, 42);
  CHECK(bad.verdict == TheoremVerdict::Verdict::HypothesesFail);
  CHECK(bad.chi_max_norm > 1e-6);
}

TEST_CASE("verify_theorem2 verdicts") {
  VolumeDensity v2 = VolumeDensity::unit(2);
  VolumeDensity v3 = VolumeDensity::unit(3);

  MetricKernel funk3 = builtin_metric(BuiltinFamily::Funk, 3);
  TheoremVerdict t3 = verify_theorem2(funk3, v3, 10, 3, 42);
  CHECK(t3.verdict == TheoremVerdict::Verdict::Pass);
  REQUIRE(t3.f_sample.has_value());
  CHECK(*t3.f_sample == doctest::Approx(2.0).epsilon(1e-8));
  REQUIRE(t3.f_spread.has_value());
  CHECK(*t3.f_spread <= 1e-6);
  REQUIRE(t3.df_dy_max.has_value());
  CHECK(*t3.df_dy_max <= 1e-6);

  MetricKernel funk2 = builtin_metric(BuiltinFamily::Funk, 2);
  TheoremVerdict t2 = verify_theorem2(funk2, v2, 10, 3, 42);
  CHECK(t2.verdict == TheoremVerdict::Verdict::Pass);
  CHECK_FALSE(t2.f_spread.has_value());  // dimension gate
  CHECK_FALSE(t2.df_dy_max.has_value());

  MetricKernel klein3 = builtin_metric(BuiltinFamily::Klein, 3);
  TheoremVerdict tk = verify_theorem2(klein3, v3, 8, 2, 42);
  REQUIRE(tk.scalar_residual_max.has_value());
  CHECK(*tk.scalar_residual_max <= 1e-10);  // degenerate: E = 0, f = 0
  REQUIRE(tk.f_sample.has_value());
  CHECK(std::abs(*tk.f_sample) <= 1e-10);
  CHECK(tk.verdict == TheoremVerdict::Verdict::Pass);

  TheoremVerdict bad = verify_theorem2(testutil::generic_randers(3), v3, 8, 2, 42);
  CHECK(bad.verdict == TheoremVerdict::Verdict::HypothesesFail);
}

TEST_CASE("verdicts are deterministic in the seed") {
  VolumeDensity v2 = VolumeDensity::unit(2);
  MetricKernel funk = builtin_metric(BuiltinFamily::Funk, 2);
  TheoremVerdict a = verify_theorem1(funk, v2, 8, 2, 7);
  TheoremVerdict b = verify_theorem1(funk, v2, 8, 2, 7);
  CHECK(a.chi_max_norm == b.chi_max_norm);
  CHECK(a.integral_drift.max_drift() == b.integral_drift.max_drift());
  CHECK(a.seed == 7);
}

TEST_CASE("static and dynamic certificates agree") {
  // lambda is pointwise constant on Funk, so trajectory drift must sit at
  // the same noise floor as the static sampling.
  MetricKernel funk = builtin_metric(BuiltinFamily::Funk, 2);
  VolumeDensity vol = VolumeDensity::unit(2);
  double static_spread = 0.0;
  for (const FiberPoint& p : sample_fiber_points(funk, 20, 91))
    static_spread =
        std::max(static_spread, std::abs(lambda_integral(funk, p) - 1.5));
  Eigen::Vector2d x0(0.1, 0.05), y0(-0.3, 0.5);
  y0 /= funk.value({x0, y0});
  Trajectory traj = integrate_geodesic(funk, x0, y0, 3.0);
  DriftReport dr = track_first_integrals(funk, nullptr, vol, traj, {"lambda"});
  CHECK(dr.quantities.at("lambda").max_drift <=
        std::max(1e-9, 10.0 * static_spread));
}
