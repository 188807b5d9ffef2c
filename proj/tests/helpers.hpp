#pragma once

#include <vector>

#include "finsler/flow.hpp"

namespace testutil {

inline finsler::FiberPoint fp2(double x1, double x2, double y1, double y2) {
  return {Eigen::Vector2d(x1, x2), Eigen::Vector2d(y1, y2)};
}

inline finsler::FiberPoint fp3(double x1, double x2, double x3, double y1,
                               double y2, double y3) {
  return {Eigen::Vector3d(x1, x2, x3), Eigen::Vector3d(y1, y2, y3)};
}

// All builtin families over the requested dims, with their labels.
inline std::vector<finsler::MetricKernel> all_builtins(int dim) {
  using finsler::BuiltinFamily;
  std::vector<finsler::MetricKernel> out;
  out.push_back(finsler::builtin_metric(BuiltinFamily::Euclidean, dim));
  out.push_back(finsler::builtin_metric(BuiltinFamily::Riemannian, dim));
  out.push_back(finsler::builtin_metric(BuiltinFamily::Randers, dim));
  out.push_back(finsler::builtin_metric(BuiltinFamily::Funk, dim));
  out.push_back(finsler::builtin_metric(BuiltinFamily::Klein, dim));
  return out;
}

// A Randers metric whose one-form is not a Killing form of the flat
// background, so chi != 0 and E is not proportional to h.
inline finsler::MetricKernel generic_randers(int dim) {
  nlohmann::json beta = nlohmann::json::array();
  beta.push_back("0");
  beta.push_back("0.2*x1");
  for (int i = 2; i < dim; ++i) beta.push_back("0");
  return finsler::builtin_metric(finsler::BuiltinFamily::Randers, dim,
                                 {{"beta", beta}});
}

}  // namespace testutil
