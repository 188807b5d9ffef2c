#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <random>

#include "doctest.h"
#include "helpers.hpp"

using namespace finsler;
using testutil::fp2;

namespace {

const char* kFunkText =
    "(dot(x,y) + sqrt(norm2(y)*(1-norm2(x)) + dot(x,y)^2))/(1-norm2(x))";

double eval_text(const std::string& text, int dim, const FiberPoint& p) {
  expr::NodePtr node = expr::parse(text, dim);
  std::vector<double> x(p.x.data(), p.x.data() + dim);
  std::vector<double> y(p.y.data(), p.y.data() + dim);
  return expr::evaluate<double>(*node, x, y);
}

}  // namespace

TEST_CASE("basic parses and values") {
  CHECK(eval_text("sqrt(y1^2 + y2^2)", 2, fp2(0, 0, 3, 4)) ==
        doctest::Approx(5.0));
  CHECK(eval_text("2 + 3*4", 2, fp2(0, 0, 1, 0)) == doctest::Approx(14.0));
  CHECK(eval_text("(y1^4 + y2^4)^(1/4)", 2, fp2(0, 0, 2, 0)) ==
        doctest::Approx(2.0));
  CHECK(eval_text("exp(log(y1))", 2, fp2(0, 0, 3, 1)) == doctest::Approx(3.0));
  CHECK(eval_text("dot(x,y)", 2, fp2(1, 2, 3, 4)) == doctest::Approx(11.0));
  CHECK(eval_text("norm2(x)", 2, fp2(1, 2, 3, 4)) == doctest::Approx(5.0));
  CHECK(eval_text("  y1   ^ 2\t+ y2", 2, fp2(0, 0, 3, 4)) ==
        doctest::Approx(13.0));
  CHECK(eval_text("y1/y2/2", 2, fp2(0, 0, 8, 2)) == doctest::Approx(2.0));
  CHECK(eval_text("y1 - y2 - 1", 2, fp2(0, 0, 8, 2)) == doctest::Approx(5.0));
}

TEST_CASE("parse errors carry a position") {
  try {
    expr::parse("sqrt(", 2);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.position() == 5);
  }
  CHECK_THROWS_AS(expr::parse("y1 +", 2), ParseError);
  CHECK_THROWS_AS(expr::parse("abs(y1)", 2), ParseError);
  CHECK_THROWS_AS(expr::parse("max(y1, y2)", 2), ParseError);
  CHECK_THROWS_AS(expr::parse("y1 y2", 2), ParseError);
  CHECK_THROWS_AS(expr::parse("", 2), ParseError);
  CHECK_THROWS_AS(expr::parse("z1", 2), ParseError);
  CHECK_THROWS_AS(expr::parse("y1^(1/)", 2), ParseError);
}

TEST_CASE("arity errors for out-of-dimension variables") {
  CHECK_THROWS_AS(expr::parse("y3", 2), ArityError);
  CHECK_THROWS_AS(expr::parse("x5 + y1", 3), ArityError);
  CHECK_NOTHROW(expr::parse("y3", 3));
}

TEST_CASE("expression Funk agrees with the builtin") {
  MetricKernel builtin = builtin_metric(BuiltinFamily::Funk, 3);
  MetricKernel parsed = parse_metric_expression(
      kFunkText, 3, Domain{Domain::Kind::Ball, 1.0}, "funk-text");
  for (const FiberPoint& p : sample_fiber_points(builtin, 50, 17)) {
    CHECK(parsed.value(p) == doctest::Approx(builtin.value(p)).epsilon(1e-12));
  }
}

TEST_CASE("pretty-print round trip is value-identical") {
  const char* texts[] = {
      "sqrt(y1^2 + y2^2)",
      kFunkText,
      "(y1^4 + 3*y2^4 + y1^2*y2^2)^(1/4)",
      "sqrt(norm2(y)) + 0.2*x1*y2 - 0.1*x2*y1",
      "exp(x1)*sqrt(y1^2 + y2^2)/(1 + x2^2)",
  };
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> box(-0.5, 0.5);
  std::uniform_real_distribution<double> fib(0.2, 2.0);
  for (const char* text : texts) {
    expr::NodePtr a = expr::parse(text, 2);
    expr::NodePtr b = expr::parse(expr::to_string(*a), 2);
    for (int t = 0; t < 100; ++t) {
      std::vector<double> x{box(rng), box(rng)}, y{fib(rng), fib(rng)};
      const double va = expr::evaluate<double>(*a, x, y);
      const double vb = expr::evaluate<double>(*b, x, y);
      CHECK(va == vb);  // to the last bit
    }
  }
}

TEST_CASE("jets propagate through parsed expressions") {
  MetricKernel k = parse_metric_expression("sqrt(y1^2 + y2^2) + 0.1*x1*y1", 2);
  FiberPoint p = fp2(0.4, -0.2, 1.1, 0.6);
  JetTable t = eval_jet(k, p, JetOrders{1, 2, 3});
  std::vector<int> a{1, 0}, b{0, 0};
  CHECK(t.partial(a, b) == doctest::Approx(0.1 * p.y[0]).epsilon(1e-12));
  std::vector<int> a0{0, 0}, b1{1, 0};
  const double F0 = std::hypot(p.y[0], p.y[1]);
  CHECK(t.partial(a0, b1) ==
        doctest::Approx(p.y[0] / F0 + 0.1 * p.x[0]).epsilon(1e-12));
}

TEST_CASE("division and fractional powers guard their domains") {
  expr::NodePtr bad = expr::parse("sqrt(y1 - 10)", 2);
  std::vector<double> x{0.0, 0.0}, y{1.0, 1.0};
  CHECK_THROWS_AS(expr::evaluate<double>(*bad, x, y), DomainError);
  MetricKernel div = parse_metric_expression("1/(y1 - 1)", 2);
  CHECK_THROWS_AS(eval_jet(div, fp2(0, 0, 1, 1)), DomainError);
}
