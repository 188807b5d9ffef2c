#include "finsler/expression.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <utility>

namespace finsler::expr {

NodePtr num(double v) {
  auto n = std::make_unique<Node>();
  n->kind = NodeKind::Number;
  n->number = v;
  return n;
}

NodePtr var_x(int index) {
  auto n = std::make_unique<Node>();
  n->kind = NodeKind::VarX;
  n->index = index;
  return n;
}

NodePtr var_y(int index) {
  auto n = std::make_unique<Node>();
  n->kind = NodeKind::VarY;
  n->index = index;
  return n;
}

namespace {

NodePtr binary(NodeKind k, NodePtr a, NodePtr b) {
  auto n = std::make_unique<Node>();
  n->kind = k;
  n->a = std::move(a);
  n->b = std::move(b);
  return n;
}

NodePtr unary(NodeKind k, NodePtr a) {
  auto n = std::make_unique<Node>();
  n->kind = k;
  n->a = std::move(a);
  return n;
}

}  // namespace

NodePtr add(NodePtr a, NodePtr b) { return binary(NodeKind::Add, std::move(a), std::move(b)); }
NodePtr sub(NodePtr a, NodePtr b) { return binary(NodeKind::Sub, std::move(a), std::move(b)); }
NodePtr mul(NodePtr a, NodePtr b) { return binary(NodeKind::Mul, std::move(a), std::move(b)); }
NodePtr div(NodePtr a, NodePtr b) { return binary(NodeKind::Div, std::move(a), std::move(b)); }

NodePtr pow_rat(NodePtr a, long long p, long long q) {
  auto n = unary(NodeKind::Pow, std::move(a));
  n->pow_num = p;
  n->pow_den = q;
  return n;
}

NodePtr pow_int(NodePtr a, long long e) { return pow_rat(std::move(a), e, 1); }
NodePtr sqrt_of(NodePtr a) { return unary(NodeKind::Sqrt, std::move(a)); }
NodePtr exp_of(NodePtr a) { return unary(NodeKind::Exp, std::move(a)); }
NodePtr log_of(NodePtr a) { return unary(NodeKind::Log, std::move(a)); }

NodePtr clone(const Node& node) {
  auto n = std::make_unique<Node>();
  n->kind = node.kind;
  n->number = node.number;
  n->index = node.index;
  n->pow_num = node.pow_num;
  n->pow_den = node.pow_den;
  if (node.a) n->a = clone(*node.a);
  if (node.b) n->b = clone(*node.b);
  return n;
}

bool depends_on_y(const Node& node) {
  if (node.kind == NodeKind::VarY) return true;
  if (node.a && depends_on_y(*node.a)) return true;
  if (node.b && depends_on_y(*node.b)) return true;
  return false;
}

namespace detail {

double apply_sqrt(const double& v) {
  if (v < 0.0) throw DomainError("sqrt of a negative value");
  return std::sqrt(v);
}

double apply_exp(const double& v) { return std::exp(v); }

double apply_log(const double& v) {
  if (v <= 0.0) throw DomainError("log of a non-positive value");
  return std::log(v);
}

double apply_pow(const double& v, long long p, long long q) {
  if (q == 1) {
    double r = 1.0;
    long long e = p < 0 ? -p : p;
    double base = v;
    while (e > 0) {
      if (e & 1) r *= base;
      base *= base;
      e >>= 1;
    }
    if (p < 0) {
      if (r == 0.0) throw DomainError("zero raised to a negative power");
      r = 1.0 / r;
    }
    return r;
  }
  if (v <= 0.0)
    throw DomainError("fractional power of a non-positive value");
  return std::pow(v, static_cast<double>(p) / static_cast<double>(q));
}

Jet apply_sqrt(const Jet& v) { return sqrt(v); }
Jet apply_exp(const Jet& v) { return exp(v); }
Jet apply_log(const Jet& v) { return log(v); }
Jet apply_pow(const Jet& v, long long p, long long q) { return pow(v, p, q); }

}  // namespace detail

// ---------------------------------------------------------------------------
// Parser
// ---------------------------------------------------------------------------

namespace {

struct Lexer {
  std::string_view text;
  std::size_t pos = 0;

  void skip_ws() {
    while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
  }

  char peek() {
    skip_ws();
    return pos < text.size() ? text[pos] : '\0';
  }

  bool eat(char c) {
    if (peek() == c) {
      ++pos;
      return true;
    }
    return false;
  }

  void expect(char c, const char* what) {
    if (!eat(c))
      throw ParseError(std::string("expected '") + c + "'", pos, what);
  }
};

struct Parser {
  Lexer lex;
  int dim;

  NodePtr parse_expr() {
    NodePtr n = parse_term();
    for (;;) {
      if (lex.eat('+')) {
        n = add(std::move(n), parse_term());
      } else if (lex.eat('-')) {
        n = sub(std::move(n), parse_term());
      } else {
        return n;
      }
    }
  }

  NodePtr parse_term() {
    NodePtr n = parse_factor();
    for (;;) {
      if (lex.eat('*')) {
        n = mul(std::move(n), parse_factor());
      } else if (lex.eat('/')) {
        n = div(std::move(n), parse_factor());
      } else {
        return n;
      }
    }
  }

  NodePtr parse_factor() {
    NodePtr base = parse_base();
    if (lex.eat('^')) {
      auto [p, q] = parse_exponent();
      return pow_rat(std::move(base), p, q);
    }
    return base;
  }

  long long parse_integer() {
    lex.skip_ws();
    std::size_t start = lex.pos;
    bool neg = lex.eat('-');
    lex.skip_ws();
    std::size_t digits = lex.pos;
    while (lex.pos < lex.text.size() &&
           std::isdigit(static_cast<unsigned char>(lex.text[lex.pos])))
      ++lex.pos;
    if (lex.pos == digits)
      throw ParseError("expected integer", start, "integer literal");
    long long v = std::stoll(std::string(lex.text.substr(digits, lex.pos - digits)));
    return neg ? -v : v;
  }

  std::pair<long long, long long> parse_exponent() {
    if (lex.eat('(')) {
      long long p = parse_integer();
      long long q = 1;
      if (lex.eat('/')) q = parse_integer();
      lex.expect(')', "closing parenthesis of exponent");
      if (q == 0) throw ParseError("zero denominator in exponent", lex.pos, "nonzero integer");
      return {p, q};
    }
    return {parse_integer(), 1};
  }

  NodePtr parse_base() {
    const char c = lex.peek();
    if (c == '(') {
      lex.eat('(');
      NodePtr n = parse_expr();
      lex.expect(')', "closing parenthesis");
      return n;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
    if (std::isalpha(static_cast<unsigned char>(c))) return parse_ident();
    throw ParseError("unexpected input", lex.pos,
                     "number, variable, function, or '('");
  }

  NodePtr parse_number() {
    lex.skip_ws();
    const std::size_t start = lex.pos;
    auto digits = [&] {
      while (lex.pos < lex.text.size() &&
             std::isdigit(static_cast<unsigned char>(lex.text[lex.pos])))
        ++lex.pos;
    };
    digits();
    if (lex.pos < lex.text.size() && lex.text[lex.pos] == '.') {
      ++lex.pos;
      digits();
    }
    if (lex.pos < lex.text.size() && (lex.text[lex.pos] == 'e' || lex.text[lex.pos] == 'E')) {
      ++lex.pos;
      if (lex.pos < lex.text.size() && (lex.text[lex.pos] == '+' || lex.text[lex.pos] == '-'))
        ++lex.pos;
      digits();
    }
    if (lex.pos == start)
      throw ParseError("expected number", start, "numeric literal");
    return num(std::stod(std::string(lex.text.substr(start, lex.pos - start))));
  }

  // Variable name 'x' or 'y' used as a vector argument of dot/norm2.
  bool parse_vector_name(std::size_t* err_pos) {
    lex.skip_ws();
    *err_pos = lex.pos;
    if (lex.pos < lex.text.size() && (lex.text[lex.pos] == 'x' || lex.text[lex.pos] == 'y')) {
      const char v = lex.text[lex.pos];
      ++lex.pos;
      return v == 'x';
    }
    throw ParseError("expected vector name", *err_pos, "'x' or 'y'");
  }

  NodePtr parse_ident() {
    lex.skip_ws();
    const std::size_t start = lex.pos;
    while (lex.pos < lex.text.size() &&
           (std::isalnum(static_cast<unsigned char>(lex.text[lex.pos]))))
      ++lex.pos;
    const std::string name(lex.text.substr(start, lex.pos - start));

    if (name == "sqrt" || name == "exp" || name == "log") {
      lex.expect('(', "argument list");
      NodePtr arg = parse_expr();
      lex.expect(')', "closing parenthesis");
      if (name == "sqrt") return sqrt_of(std::move(arg));
      if (name == "exp") return exp_of(std::move(arg));
      return log_of(std::move(arg));
    }
    if (name == "dot") {
      lex.expect('(', "argument list");
      std::size_t p1, p2;
      const bool ax = parse_vector_name(&p1);
      lex.expect(',', "second vector argument");
      const bool bx = parse_vector_name(&p2);
      lex.expect(')', "closing parenthesis");
      NodePtr sum;
      for (int i = 0; i < dim; ++i) {
        NodePtr t = mul(ax ? var_x(i) : var_y(i), bx ? var_x(i) : var_y(i));
        sum = sum ? add(std::move(sum), std::move(t)) : std::move(t);
      }
      return sum;
    }
    if (name == "norm2") {
      lex.expect('(', "argument list");
      std::size_t p1;
      const bool ax = parse_vector_name(&p1);
      lex.expect(')', "closing parenthesis");
      NodePtr sum;
      for (int i = 0; i < dim; ++i) {
        NodePtr t = pow_int(ax ? var_x(i) : var_y(i), 2);
        sum = sum ? add(std::move(sum), std::move(t)) : std::move(t);
      }
      return sum;
    }

    // Indexed variable x<k> or y<k>.
    if (name.size() >= 2 && (name[0] == 'x' || name[0] == 'y')) {
      bool all_digits = true;
      for (std::size_t i = 1; i < name.size(); ++i)
        if (!std::isdigit(static_cast<unsigned char>(name[i]))) all_digits = false;
      if (all_digits) {
        const int k = std::stoi(name.substr(1));
        if (k < 1 || k > dim)
          throw ArityError("variable " + name + " out of range for dim " +
                               std::to_string(dim),
                           start);
        return name[0] == 'x' ? var_x(k - 1) : var_y(k - 1);
      }
    }
    throw ParseError("unknown identifier '" + name + "'", start,
                     "variable or function name");
  }
};

void render(const Node& n, std::string& out) {
  auto number_str = [](double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return std::string(buf);
  };
  switch (n.kind) {
    case NodeKind::Number:
      out += number_str(n.number);
      return;
    case NodeKind::VarX:
      out += "x" + std::to_string(n.index + 1);
      return;
    case NodeKind::VarY:
      out += "y" + std::to_string(n.index + 1);
      return;
    case NodeKind::Add:
    case NodeKind::Sub:
    case NodeKind::Mul:
    case NodeKind::Div: {
      const char* op = n.kind == NodeKind::Add   ? " + "
                       : n.kind == NodeKind::Sub ? " - "
                       : n.kind == NodeKind::Mul ? "*"
                                                 : "/";
      out += "(";
      render(*n.a, out);
      out += op;
      render(*n.b, out);
      out += ")";
      return;
    }
    case NodeKind::Pow:
      out += "(";
      render(*n.a, out);
      out += ")^(";
      out += std::to_string(n.pow_num);
      if (n.pow_den != 1) out += "/" + std::to_string(n.pow_den);
      out += ")";
      return;
    case NodeKind::Sqrt:
    case NodeKind::Exp:
    case NodeKind::Log: {
      out += n.kind == NodeKind::Sqrt ? "sqrt(" : n.kind == NodeKind::Exp ? "exp(" : "log(";
      render(*n.a, out);
      out += ")";
      return;
    }
  }
}

}  // namespace

NodePtr parse(std::string_view text, int dim) {
  Parser parser{Lexer{text}, dim};
  NodePtr n = parser.parse_expr();
  parser.lex.skip_ws();
  if (parser.lex.pos != text.size())
    throw ParseError("trailing input", parser.lex.pos, "end of expression");
  return n;
}

std::string to_string(const Node& node) {
  std::string out;
  render(node, out);
  return out;
}

}  // namespace finsler::expr
