#pragma once

#include <memory>
#include <span>
#include <string>
#include <string_view>

#include "finsler/errors.hpp"
#include "finsler/jet.hpp"

namespace finsler::expr {

enum class NodeKind {
  Number,
  VarX,  // x_{index+1}
  VarY,
  Add,
  Sub,
  Mul,
  Div,
  Pow,  // rational exponent pow_num/pow_den
  Sqrt,
  Exp,
  Log,
};

struct Node;
using NodePtr = std::unique_ptr<Node>;

struct Node {
  NodeKind kind;
  double number = 0.0;
  int index = 0;
  long long pow_num = 1;
  long long pow_den = 1;
  NodePtr a;
  NodePtr b;
};

/// Parses an expression of the metric grammar; variables x1..xn / y1..yn.
NodePtr parse(std::string_view text, int dim);

/// Grammar-conforming rendering; parse(to_string(e)) evaluates identically.
std::string to_string(const Node& node);

NodePtr clone(const Node& node);
bool depends_on_y(const Node& node);

// Builders.
NodePtr num(double v);
NodePtr var_x(int index);
NodePtr var_y(int index);
NodePtr add(NodePtr a, NodePtr b);
NodePtr sub(NodePtr a, NodePtr b);
NodePtr mul(NodePtr a, NodePtr b);
NodePtr div(NodePtr a, NodePtr b);
NodePtr pow_int(NodePtr a, long long e);
NodePtr pow_rat(NodePtr a, long long p, long long q);
NodePtr sqrt_of(NodePtr a);
NodePtr exp_of(NodePtr a);
NodePtr log_of(NodePtr a);

namespace detail {

inline double constant_like(const double&, double v) { return v; }
inline Jet constant_like(const Jet& exemplar, double v) {
  return Jet::constant(exemplar.space(), v);
}

double apply_sqrt(const double& v);
double apply_exp(const double& v);
double apply_log(const double& v);
double apply_pow(const double& v, long long p, long long q);
Jet apply_sqrt(const Jet& v);
Jet apply_exp(const Jet& v);
Jet apply_log(const Jet& v);
Jet apply_pow(const Jet& v, long long p, long long q);

}  // namespace detail

/// Evaluates the expression over doubles or jets.
template <class T>
T evaluate(const Node& nd, std::span<const T> x, std::span<const T> y) {
  using namespace detail;
  switch (nd.kind) {
    case NodeKind::Number:
      return constant_like(x[0], nd.number);
    case NodeKind::VarX:
      return x[nd.index];
    case NodeKind::VarY:
      return y[nd.index];
    case NodeKind::Add:
      return evaluate(*nd.a, x, y) + evaluate(*nd.b, x, y);
    case NodeKind::Sub:
      return evaluate(*nd.a, x, y) - evaluate(*nd.b, x, y);
    case NodeKind::Mul:
      return evaluate(*nd.a, x, y) * evaluate(*nd.b, x, y);
    case NodeKind::Div:
      return evaluate(*nd.a, x, y) / evaluate(*nd.b, x, y);
    case NodeKind::Pow:
      return apply_pow(evaluate(*nd.a, x, y), nd.pow_num, nd.pow_den);
    case NodeKind::Sqrt:
      return apply_sqrt(evaluate(*nd.a, x, y));
    case NodeKind::Exp:
      return apply_exp(evaluate(*nd.a, x, y));
    case NodeKind::Log:
      return apply_log(evaluate(*nd.a, x, y));
  }
  throw Error("unreachable expression node kind");
}

}  // namespace finsler::expr
