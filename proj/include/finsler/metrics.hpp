#pragma once

#include <cstdint>
#include <memory>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "finsler/expression.hpp"
#include "finsler/kernel.hpp"

namespace finsler {

struct Domain {
  enum class Kind { All, Ball };
  Kind kind = Kind::All;
  double radius = 1.0;

  bool contains(const Eigen::VectorXd& x) const {
    return kind == Kind::All || x.norm() < radius;
  }
  double margin(const Eigen::VectorXd& x) const {
    return kind == Kind::All ? std::numeric_limits<double>::infinity()
                             : radius - x.norm();
  }
};

/// A Finsler metric kernel F(x, y) given by an expression graph, with its
/// base domain. Immutable; cheap to copy (the expression is shared).
class MetricKernel final : public ScalarKernel {
 public:
  MetricKernel(int dim, expr::NodePtr f, Domain domain, std::string label);

  int dim() const override { return dim_; }
  double value(const FiberPoint& p) const override;
  Jet jet(const std::shared_ptr<const JetSpace>& space,
          const FiberPoint& p) const override;
  bool in_domain(const Eigen::VectorXd& x) const override {
    return domain_.contains(x);
  }
  double domain_margin(const Eigen::VectorXd& x) const override {
    return domain_.margin(x);
  }

  const Domain& domain() const { return domain_; }
  const std::string& label() const { return label_; }
  const expr::Node& expression() const { return *f_; }

 private:
  int dim_;
  std::shared_ptr<const expr::Node> f_;
  Domain domain_;
  std::string label_;
};

/// Positive base density sigma(x) entering the volume form.
class VolumeDensity {
 public:
  static VolumeDensity unit(int dim);
  static VolumeDensity from_expression(std::string_view text, int dim);

  int dim() const { return dim_; }
  double value(const Eigen::VectorXd& x) const;
  Jet jet(const std::shared_ptr<const JetSpace>& space, const FiberPoint& p) const;
  const expr::Node& expression() const { return *f_; }

 private:
  VolumeDensity(int dim, expr::NodePtr f);
  int dim_;
  std::shared_ptr<const expr::Node> f_;
};

struct ValidationReport {
  double homogeneity_residual = 0.0;
  double min_abs_det_g = 0.0;
  int angular_rank = 0;  // modal rank of h_ij over samples
  int positivity_violations = 0;
  int samples_used = 0;
};

enum class BuiltinFamily { Euclidean, Riemannian, Randers, Funk, Klein };

MetricKernel parse_metric_expression(std::string_view text, int dim,
                                     Domain domain = {},
                                     std::string label = "expression");

MetricKernel builtin_metric(BuiltinFamily family, int dim,
                            const nlohmann::json& params = nlohmann::json::object());

ValidationReport validate_metric(const MetricKernel& kernel, int sample_count,
                                 std::uint64_t seed);

/// Deterministic in-domain samples: x in the centered box of half-width
/// 0.6 * domain radius (1.0 for unbounded domains), y components in [-2, 2]
/// with |y| >= 0.1.
std::vector<FiberPoint> sample_fiber_points(const MetricKernel& kernel,
                                            int count, std::uint64_t seed);

struct MetricSpec {
  MetricKernel kernel;
  VolumeDensity volume;
};

/// Loads the metric spec JSON schema:
/// {"dim", "kind": "builtin"|"expression", "name"?, "params"?,
///  "expression"?, "domain"?: {"type": "ball"|"all", "radius"?}, "volume"?}.
MetricSpec metric_from_spec(const nlohmann::json& spec);

}  // namespace finsler
