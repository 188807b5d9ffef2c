#include "finsler/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <random>

namespace finsler {

namespace {

std::vector<Jet> variable_jets(const std::shared_ptr<const JetSpace>& space,
                               const FiberPoint& p, bool base) {
  const int n = space->dim();
  std::vector<Jet> v;
  v.reserve(n);
  for (int i = 0; i < n; ++i)
    v.push_back(Jet::variable(space, base ? i : n + i, base ? p.x[i] : p.y[i]));
  return v;
}

}  // namespace

MetricKernel::MetricKernel(int dim, expr::NodePtr f, Domain domain,
                           std::string label)
    : dim_(dim), f_(std::move(f)), domain_(domain), label_(std::move(label)) {
  if (dim_ < 2) throw ParamError("metric dimension must be at least 2");
}

double MetricKernel::value(const FiberPoint& p) const {
  if (!domain_.contains(p.x))
    throw DomainError("point outside the domain of metric '" + label_ + "'");
  std::vector<double> x(p.x.data(), p.x.data() + dim_);
  std::vector<double> y(p.y.data(), p.y.data() + dim_);
  return expr::evaluate<double>(*f_, x, y);
}

Jet MetricKernel::jet(const std::shared_ptr<const JetSpace>& space,
                      const FiberPoint& p) const {
  if (!domain_.contains(p.x))
    throw DomainError("point outside the domain of metric '" + label_ + "'");
  const auto x = variable_jets(space, p, true);
  const auto y = variable_jets(space, p, false);
  return expr::evaluate<Jet>(*f_, x, y);
}

VolumeDensity::VolumeDensity(int dim, expr::NodePtr f)
    : dim_(dim), f_(std::move(f)) {
  if (expr::depends_on_y(*f_))
    throw ParamError("volume density must depend on x only");
}

VolumeDensity VolumeDensity::unit(int dim) {
  return VolumeDensity(dim, expr::num(1.0));
}

VolumeDensity VolumeDensity::from_expression(std::string_view text, int dim) {
  return VolumeDensity(dim, expr::parse(text, dim));
}

double VolumeDensity::value(const Eigen::VectorXd& x) const {
  std::vector<double> xs(x.data(), x.data() + dim_);
  std::vector<double> ys(dim_, 0.0);
  const double v = expr::evaluate<double>(*f_, xs, ys);
  if (v <= 0.0) throw DomainError("volume density is non-positive");
  return v;
}

Jet VolumeDensity::jet(const std::shared_ptr<const JetSpace>& space,
                       const FiberPoint& p) const {
  const auto x = variable_jets(space, p, true);
  const auto y = variable_jets(space, p, false);
  Jet v = expr::evaluate<Jet>(*f_, x, y);
  if (v.value() <= 0.0) throw DomainError("volume density is non-positive");
  return v;
}

MetricKernel parse_metric_expression(std::string_view text, int dim,
                                     Domain domain, std::string label) {
  return MetricKernel(dim, expr::parse(text, dim), domain, std::move(label));
}

namespace {

using expr::NodePtr;

NodePtr entry_expression(const nlohmann::json& e, int dim, const char* what) {
  NodePtr node;
  if (e.is_number()) {
    node = expr::num(e.get<double>());
  } else if (e.is_string()) {
    node = expr::parse(e.get<std::string>(), dim);
  } else {
    throw ParamError(std::string(what) + " entries must be numbers or expression strings");
  }
  if (expr::depends_on_y(*node))
    throw ParamError(std::string(what) + " entries must depend on x only");
  return node;
}

// F^2-quadratic part sum_ij a_ij(x) y^i y^j; a defaults to the identity.
NodePtr quadratic_form(const nlohmann::json& params, int dim) {
  NodePtr sum;
  if (params.contains("a")) {
    const auto& a = params.at("a");
    if (!a.is_array() || static_cast<int>(a.size()) != dim)
      throw ParamError("riemannian matrix 'a' must be an n x n array");
    for (int i = 0; i < dim; ++i) {
      if (!a[i].is_array() || static_cast<int>(a[i].size()) != dim)
        throw ParamError("riemannian matrix 'a' must be an n x n array");
      for (int j = 0; j < dim; ++j) {
        NodePtr t = expr::mul(entry_expression(a[i][j], dim, "matrix"),
                              expr::mul(expr::var_y(i), expr::var_y(j)));
        sum = sum ? expr::add(std::move(sum), std::move(t)) : std::move(t);
      }
    }
  } else {
    for (int i = 0; i < dim; ++i) {
      NodePtr t = expr::pow_int(expr::var_y(i), 2);
      sum = sum ? expr::add(std::move(sum), std::move(t)) : std::move(t);
    }
  }
  return sum;
}

std::vector<NodePtr> one_form(const nlohmann::json& params, int dim) {
  std::vector<NodePtr> beta;
  if (params.contains("beta")) {
    const auto& b = params.at("beta");
    if (!b.is_array() || static_cast<int>(b.size()) != dim)
      throw ParamError("randers one-form 'beta' must have n entries");
    for (int i = 0; i < dim; ++i)
      beta.push_back(entry_expression(b[i], dim, "one-form"));
  } else {
    // Default: a non-closed rotational one-form, small enough on the
    // sampling box.
    beta.push_back(expr::mul(expr::num(0.2), expr::var_x(1)));
    beta.push_back(expr::mul(expr::num(-0.2), expr::var_x(0)));
    for (int i = 2; i < dim; ++i) beta.push_back(expr::num(0.0));
  }
  return beta;
}

Eigen::MatrixXd eval_matrix(const nlohmann::json& params, int dim,
                            const Eigen::VectorXd& x) {
  Eigen::MatrixXd a = Eigen::MatrixXd::Identity(dim, dim);
  if (!params.contains("a")) return a;
  std::vector<double> xs(x.data(), x.data() + dim);
  std::vector<double> ys(dim, 0.0);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) {
      auto e = entry_expression(params.at("a")[i][j], dim, "matrix");
      a(i, j) = expr::evaluate<double>(*e, xs, ys);
    }
  return a;
}

// Funk: (<x,y> + sqrt(|y|^2 (1-|x|^2) + <x,y>^2)) / (1-|x|^2).
NodePtr funk_expression(int dim) {
  auto dot_xy = [&] {
    NodePtr s;
    for (int i = 0; i < dim; ++i) {
      NodePtr t = expr::mul(expr::var_x(i), expr::var_y(i));
      s = s ? expr::add(std::move(s), std::move(t)) : std::move(t);
    }
    return s;
  };
  auto norm2 = [&](bool base) {
    NodePtr s;
    for (int i = 0; i < dim; ++i) {
      NodePtr t = expr::pow_int(base ? expr::var_x(i) : expr::var_y(i), 2);
      s = s ? expr::add(std::move(s), std::move(t)) : std::move(t);
    }
    return s;
  };
  NodePtr one_minus_x2 = expr::sub(expr::num(1.0), norm2(true));
  NodePtr root = expr::sqrt_of(expr::add(
      expr::mul(norm2(false), expr::clone(*one_minus_x2)),
      expr::pow_int(dot_xy(), 2)));
  return expr::div(expr::add(dot_xy(), std::move(root)), std::move(one_minus_x2));
}

// Klein: sqrt(|y|^2 (1-|x|^2) + <x,y>^2) / (1-|x|^2).
NodePtr klein_expression(int dim) {
  NodePtr dot_xy;
  for (int i = 0; i < dim; ++i) {
    NodePtr t = expr::mul(expr::var_x(i), expr::var_y(i));
    dot_xy = dot_xy ? expr::add(std::move(dot_xy), std::move(t)) : std::move(t);
  }
  NodePtr y2, x2;
  for (int i = 0; i < dim; ++i) {
    NodePtr ty = expr::pow_int(expr::var_y(i), 2);
    y2 = y2 ? expr::add(std::move(y2), std::move(ty)) : std::move(ty);
    NodePtr tx = expr::pow_int(expr::var_x(i), 2);
    x2 = x2 ? expr::add(std::move(x2), std::move(tx)) : std::move(tx);
  }
  NodePtr one_minus_x2 = expr::sub(expr::num(1.0), std::move(x2));
  NodePtr root = expr::sqrt_of(expr::add(
      expr::mul(std::move(y2), expr::clone(*one_minus_x2)),
      expr::pow_int(std::move(dot_xy), 2)));
  return expr::div(std::move(root), std::move(one_minus_x2));
}

}  // namespace

MetricKernel builtin_metric(BuiltinFamily family, int dim,
                            const nlohmann::json& params) {
  if (dim < 2) throw ParamError("metric dimension must be at least 2");
  switch (family) {
    case BuiltinFamily::Euclidean:
      return MetricKernel(dim, expr::sqrt_of(quadratic_form(nlohmann::json::object(), dim)),
                          Domain{}, "euclidean");
    case BuiltinFamily::Riemannian:
      return MetricKernel(dim, expr::sqrt_of(quadratic_form(params, dim)), Domain{},
                          "riemannian");
    case BuiltinFamily::Randers: {
      NodePtr f = expr::sqrt_of(quadratic_form(params, dim));
      auto beta = one_form(params, dim);
      for (int i = 0; i < dim; ++i)
        f = expr::add(std::move(f), expr::mul(std::move(beta[i]), expr::var_y(i)));
      MetricKernel kernel(dim, std::move(f), Domain{}, "randers");
      // Randers condition |beta|_a < 1 at seeded validation samples.
      std::mt19937_64 rng(12345);
      std::uniform_real_distribution<double> box(-0.6, 0.6);
      std::vector<double> ys(dim, 0.0);
      for (int s = 0; s < 32; ++s) {
        Eigen::VectorXd x(dim);
        for (int i = 0; i < dim; ++i) x[i] = box(rng);
        Eigen::MatrixXd a = eval_matrix(params, dim, x);
        Eigen::VectorXd b = Eigen::VectorXd::Zero(dim);
        auto bexprs = one_form(params, dim);
        std::vector<double> xs(x.data(), x.data() + dim);
        for (int i = 0; i < dim; ++i)
          b[i] = expr::evaluate<double>(*bexprs[i], xs, ys);
        const double nb = std::sqrt(b.dot(a.ldlt().solve(b)));
        if (!(nb < 1.0))
          throw ParamError("randers one-form has |beta|_a >= 1 at a validation sample");
      }
      return kernel;
    }
    case BuiltinFamily::Funk:
      return MetricKernel(dim, funk_expression(dim),
                          Domain{Domain::Kind::Ball, 1.0}, "funk");
    case BuiltinFamily::Klein:
      return MetricKernel(dim, klein_expression(dim),
                          Domain{Domain::Kind::Ball, 1.0}, "klein");
  }
  throw ParamError("unknown builtin family");
}

std::vector<FiberPoint> sample_fiber_points(const MetricKernel& kernel,
                                            int count, std::uint64_t seed) {
  const int n = kernel.dim();
  const double half_width =
      kernel.domain().kind == Domain::Kind::Ball ? 0.6 * kernel.domain().radius : 1.0;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> bx(-half_width, half_width);
  std::uniform_real_distribution<double> by(-2.0, 2.0);
  std::vector<FiberPoint> out;
  out.reserve(count);
  while (static_cast<int>(out.size()) < count) {
    FiberPoint p{Eigen::VectorXd(n), Eigen::VectorXd(n)};
    for (int i = 0; i < n; ++i) p.x[i] = bx(rng);
    for (int i = 0; i < n; ++i) p.y[i] = by(rng);
    if (p.y.norm() < 0.1) continue;
    if (!kernel.in_domain(p.x)) continue;
    out.push_back(std::move(p));
  }
  return out;
}

ValidationReport validate_metric(const MetricKernel& kernel, int sample_count,
                                 std::uint64_t seed) {
  if (sample_count < 1) throw ParamError("sample_count must be at least 1");
  const int n = kernel.dim();
  const auto points = sample_fiber_points(kernel, sample_count, seed);
  ValidationReport report;
  report.samples_used = sample_count;
  report.min_abs_det_g = std::numeric_limits<double>::infinity();
  std::map<int, int> rank_counts;
  for (const auto& p : points) {
    double f = 0.0;
    bool positive = true;
    try {
      f = kernel.value(p);
      if (!(f > 0.0)) positive = false;
    } catch (const DomainError&) {
      positive = false;
    }
    if (!positive) {
      report.positivity_violations++;
      continue;
    }
    for (double scale : {0.5, 2.0}) {
      report.homogeneity_residual =
          std::max(report.homogeneity_residual,
                   check_homogeneity(kernel, p, 1.0, scale));
    }
    const JetTable table = eval_jet(kernel, p, JetOrders{0, 2, 2});
    Eigen::VectorXd dF(n);
    Eigen::MatrixXd d2F(n, n);
    std::vector<int> alpha(n, 0), beta(n, 0);
    for (int i = 0; i < n; ++i) {
      beta.assign(n, 0);
      beta[i] = 1;
      dF[i] = table.partial(alpha, beta);
      for (int j = 0; j < n; ++j) {
        beta.assign(n, 0);
        beta[i] = 1;
        beta[j] += 1;
        d2F(i, j) = table.partial(alpha, beta);
      }
    }
    const Eigen::MatrixXd h = f * d2F;
    const Eigen::MatrixXd g = h + dF * dF.transpose();
    report.min_abs_det_g = std::min(report.min_abs_det_g, std::abs(g.determinant()));
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(h);
    const auto& sv = svd.singularValues();
    int rank = 0;
    for (int i = 0; i < sv.size(); ++i)
      if (sv[i] > 1e-8 * sv[0]) ++rank;
    rank_counts[rank]++;
  }
  int best = 0;
  for (const auto& [rank, count] : rank_counts) {
    if (count > best) {
      best = count;
      report.angular_rank = rank;
    }
  }
  if (!std::isfinite(report.min_abs_det_g)) report.min_abs_det_g = 0.0;
  return report;
}

MetricSpec metric_from_spec(const nlohmann::json& spec) {
  if (!spec.contains("dim")) throw ParamError("metric spec is missing 'dim'");
  const int dim = spec.at("dim").get<int>();
  const std::string kind = spec.value("kind", "builtin");

  Domain domain;
  if (spec.contains("domain")) {
    const auto& d = spec.at("domain");
    const std::string type = d.value("type", "all");
    if (type == "ball") {
      domain = Domain{Domain::Kind::Ball, d.value("radius", 1.0)};
    } else if (type != "all") {
      throw ParamError("unknown domain type '" + type + "'");
    }
  }

  std::optional<MetricKernel> kernel;
  if (kind == "builtin") {
    const std::string name = spec.value("name", "");
    static const std::map<std::string, BuiltinFamily> families = {
        {"euclidean", BuiltinFamily::Euclidean},
        {"riemannian", BuiltinFamily::Riemannian},
        {"randers", BuiltinFamily::Randers},
        {"funk", BuiltinFamily::Funk},
        {"klein", BuiltinFamily::Klein}};
    auto it = families.find(name);
    if (it == families.end())
      throw ParamError("unknown builtin metric '" + name + "'");
    kernel = builtin_metric(it->second, dim,
                            spec.value("params", nlohmann::json::object()));
  } else if (kind == "expression") {
    if (!spec.contains("expression"))
      throw ParamError("expression metric spec is missing 'expression'");
    kernel = parse_metric_expression(spec.at("expression").get<std::string>(), dim,
                                     domain);
  } else {
    throw ParamError("unknown metric kind '" + kind + "'");
  }

  VolumeDensity volume = spec.contains("volume")
                             ? VolumeDensity::from_expression(
                                   spec.at("volume").get<std::string>(), dim)
                             : VolumeDensity::unit(dim);
  return MetricSpec{std::move(*kernel), std::move(volume)};
}

}  // namespace finsler
