#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"
#include "helpers.hpp"

using namespace finsler;
using testutil::fp2;

TEST_CASE("builtin point values") {
  MetricKernel eucl = builtin_metric(BuiltinFamily::Euclidean, 2);
  CHECK(eucl.value(fp2(0, 0, 3, 4)) == doctest::Approx(5.0));
  MetricKernel klein = builtin_metric(BuiltinFamily::Klein, 2);
  CHECK(klein.value(fp2(0, 0, 1, 0)) == doctest::Approx(1.0));
  MetricKernel funk = builtin_metric(BuiltinFamily::Funk, 2);
  CHECK(funk.value(fp2(0.5, 0, 1, 0)) == doctest::Approx(2.0));
  MetricKernel parsed = parse_metric_expression(
      "(dot(x,y) + sqrt(norm2(y)*(1-norm2(x)) + dot(x,y)^2))/(1-norm2(x))", 2,
      Domain{Domain::Kind::Ball, 1.0});
  CHECK(funk.value(fp2(0.5, 0, 1, 0)) ==
        doctest::Approx(parsed.value(fp2(0.5, 0, 1, 0))).epsilon(1e-14));
}

TEST_CASE("domains") {
  MetricKernel funk = builtin_metric(BuiltinFamily::Funk, 2);
  CHECK(funk.in_domain(Eigen::Vector2d(0.9, 0)));
  CHECK_FALSE(funk.in_domain(Eigen::Vector2d(1.0, 0)));
  CHECK(funk.domain_margin(Eigen::Vector2d(0.6, 0)) == doctest::Approx(0.4));
  MetricKernel eucl = builtin_metric(BuiltinFamily::Euclidean, 2);
  CHECK(eucl.in_domain(Eigen::Vector2d(100.0, 0)));
}

TEST_CASE("validate_metric on builtins") {
  MetricKernel eucl = builtin_metric(BuiltinFamily::Euclidean, 3);
  ValidationReport r = validate_metric(eucl, 100, 42);
  CHECK(r.angular_rank == 2);
  CHECK(r.min_abs_det_g == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(r.positivity_violations == 0);
  CHECK(r.samples_used == 100);
  CHECK(r.homogeneity_residual <= 1e-10);

  MetricKernel funk = builtin_metric(BuiltinFamily::Funk, 2);
  ValidationReport rf = validate_metric(funk, 100, 42);
  CHECK(rf.angular_rank == 1);
  CHECK(rf.positivity_violations == 0);
  CHECK(rf.homogeneity_residual <= 1e-10);

  for (int dim : {2, 3}) {
    for (const MetricKernel& k : testutil::all_builtins(dim)) {
      ValidationReport rep = validate_metric(k, 60, 5);
      CHECK(rep.positivity_violations == 0);
      CHECK(rep.angular_rank == dim - 1);
    }
  }
}

TEST_CASE("degenerate kernel flagged, not thrown") {
  MetricKernel lin = parse_metric_expression("y1 + 2*y2", 2);
  ValidationReport r = validate_metric(lin, 50, 1);
  CHECK(r.min_abs_det_g <= 1e-10);
}

TEST_CASE("riemannian builtin has y-independent metric tensor") {
  nlohmann::json params = nlohmann::json::parse(
      R"({"a":[["1 + x1^2","x1*x2/4"],["x1*x2/4","2 + x2^2"]]})");
  MetricKernel k = builtin_metric(BuiltinFamily::Riemannian, 2, params);
  VolumeDensity vol = VolumeDensity::unit(2);
  for (const FiberPoint& p : sample_fiber_points(k, 25, 9)) {
    MetricJet mj = metric_jet(k, vol, p);
    Eigen::Matrix2d a;
    a << 1 + p.x[0] * p.x[0], p.x[0] * p.x[1] / 4, p.x[0] * p.x[1] / 4,
        2 + p.x[1] * p.x[1];
    CHECK((mj.g - a).norm() <= 1e-10 * a.norm());
    FiberPoint q{p.x, 2.5 * p.y + Eigen::Vector2d(0.1, -0.3)};
    if (q.y.norm() < 0.1) continue;
    MetricJet mq = metric_jet(k, vol, q);
    CHECK((mq.g - a).norm() <= 1e-10 * a.norm());
  }
}

TEST_CASE("randers one-form must stay below unit a-norm") {
  nlohmann::json bad = {{"beta", {"1.5", "0"}}};
  CHECK_THROWS_AS(builtin_metric(BuiltinFamily::Randers, 2, bad), ParamError);
  nlohmann::json ok = {{"beta", {"0.3", "0"}}};
  CHECK_NOTHROW(builtin_metric(BuiltinFamily::Randers, 2, ok));
}

TEST_CASE("volume density rejects y-dependence and non-positive values") {
  CHECK_NOTHROW(VolumeDensity::from_expression("exp(x1)", 2));
  CHECK_THROWS_AS(VolumeDensity::from_expression("y1", 2), ParamError);
}

TEST_CASE("metric_from_spec") {
  nlohmann::json spec = {
      {"dim", 2},
      {"kind", "expression"},
      {"expression", "sqrt(y1^2 + y2^2)/(1 - norm2(x))"},
      {"domain", {{"type", "ball"}, {"radius", 1.0}}},
      {"volume", "exp(x1)"}};
  MetricSpec ms = metric_from_spec(spec);
  CHECK(ms.kernel.dim() == 2);
  CHECK_FALSE(ms.kernel.in_domain(Eigen::Vector2d(1.2, 0)));
  CHECK(ms.volume.value(Eigen::Vector2d(1.0, 0)) ==
        doctest::Approx(std::exp(1.0)));

  nlohmann::json builtin = {{"dim", 3}, {"kind", "builtin"}, {"name", "klein"}};
  MetricSpec kb = metric_from_spec(builtin);
  CHECK(kb.kernel.label() == "klein");
  CHECK(kb.volume.value(Eigen::Vector3d(0.3, 0, 0)) == doctest::Approx(1.0));

  nlohmann::json bad = {{"dim", 2}, {"kind", "builtin"}, {"name", "nope"}};
  CHECK_THROWS_AS(metric_from_spec(bad), ParamError);
}

TEST_CASE("sampling is deterministic and in-domain") {
  MetricKernel funk = builtin_metric(BuiltinFamily::Funk, 2);
  auto a = sample_fiber_points(funk, 30, 42);
  auto b = sample_fiber_points(funk, 30, 42);
  auto c = sample_fiber_points(funk, 30, 43);
  REQUIRE(a.size() == 30);
  bool all_equal = true, any_diff = false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    all_equal = all_equal && a[i].x == b[i].x && a[i].y == b[i].y;
    any_diff = any_diff || a[i].x != c[i].x;
    CHECK(funk.in_domain(a[i].x));
    CHECK(a[i].y.norm() >= 0.1);
  }
  CHECK(all_equal);
  CHECK(any_diff);
}
