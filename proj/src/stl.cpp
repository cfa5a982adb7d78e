#include "grasp/stl.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <functional>
#include <limits>

namespace grasp::stl {

namespace {

FormulaPtr make_node(Op op, std::vector<FormulaPtr> children, int a = 0, int b = 0) {
  auto f = std::make_shared<Formula>();
  f->op = op;
  f->children = std::move(children);
  f->a = a;
  f->b = b;
  return f;
}

FormulaPtr make_nary(Op op, std::vector<FormulaPtr> children) {
  if (children.size() < 2) {
    throw std::invalid_argument("n-ary boolean operator needs at least two operands");
  }
  return make_node(op, std::move(children));
}

FormulaPtr make_temporal(Op op, int a, int b, FormulaPtr child) {
  if (a < 0 || b < 0) throw std::invalid_argument("temporal bounds must be non-negative");
  if (a > b) throw std::invalid_argument("temporal bounds must satisfy a <= b");
  return make_node(op, {std::move(child)}, a, b);
}

bool is_ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool is_ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

class Parser {
 public:
  explicit Parser(std::string_view text) : text_(text) {}

  FormulaPtr parse() {
    auto f = parse_or();
    skip_ws();
    if (pos_ != text_.size()) fail("unexpected trailing input");
    return f;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const { fail_at(msg, pos_); }
  [[noreturn]] void fail_at(const std::string& msg, std::size_t at) const {
    throw ParseError(msg + " at offset " + std::to_string(at), at);
  }

  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(char c) {
    if (!accept(c)) fail(std::string("expected '") + c + "'");
  }

  FormulaPtr parse_or() {
    std::vector<FormulaPtr> terms{parse_and()};
    while (accept('|')) terms.push_back(parse_and());
    return terms.size() == 1 ? terms.front() : make_nary(Op::Or, std::move(terms));
  }

  FormulaPtr parse_and() {
    std::vector<FormulaPtr> terms{parse_unary()};
    while (accept('&')) terms.push_back(parse_unary());
    return terms.size() == 1 ? terms.front() : make_nary(Op::And, std::move(terms));
  }

  int parse_bound() {
    skip_ws();
    const std::size_t start = pos_;
    if (pos_ < text_.size() && text_[pos_] == '-') fail("negative temporal bound");
    int value = 0;
    auto [ptr, ec] = std::from_chars(text_.data() + pos_, text_.data() + text_.size(), value);
    if (ec == std::errc::result_out_of_range) fail_at("temporal bound out of range", start);
    if (ec != std::errc{}) fail_at("expected integer temporal bound", start);
    pos_ = static_cast<std::size_t>(ptr - text_.data());
    return value;
  }

  FormulaPtr parse_unary() {
    skip_ws();
    if (pos_ >= text_.size()) fail("unexpected end of input");
    const std::size_t start = pos_;
    const char c = text_[pos_];
    if (c == '!') {
      ++pos_;
      return make_not(parse_unary());
    }
    if (c == '(') {
      ++pos_;
      auto inner = parse_or();
      expect(')');
      return inner;
    }
    if (!is_ident_start(c)) fail("expected formula");

    while (pos_ < text_.size() && is_ident_char(text_[pos_])) ++pos_;
    const std::string_view word = text_.substr(start, pos_ - start);
    if (word == "G" || word == "F") {
      skip_ws();
      if (pos_ < text_.size() && text_[pos_] == '[') {
        ++pos_;
        const int a = parse_bound();
        expect(',');
        const int b = parse_bound();
        expect(']');
        if (a > b) fail_at("temporal bound a > b", start);
        auto child = parse_unary();
        return word == "G" ? make_always(a, b, std::move(child))
                           : make_eventually(a, b, std::move(child));
      }
    }
    if (word == "TRUE") return make_true();
    return make_predicate(std::string(word));
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

void print(const Formula& f, std::string& out);

void print_operand(const Formula& f, std::string& out) {
  const bool wrap = f.op == Op::And || f.op == Op::Or;
  if (wrap) out += '(';
  print(f, out);
  if (wrap) out += ')';
}

void print(const Formula& f, std::string& out) {
  switch (f.op) {
    case Op::True: out += "TRUE"; break;
    case Op::Predicate: out += f.predicate; break;
    case Op::Not:
      out += '!';
      print_operand(f.child(), out);
      break;
    case Op::And:
    case Op::Or: {
      const char* sep = f.op == Op::And ? " & " : " | ";
      for (std::size_t i = 0; i < f.children.size(); ++i) {
        if (i > 0) out += sep;
        print_operand(*f.children[i], out);
      }
      break;
    }
    case Op::Always:
    case Op::Eventually:
      out += f.op == Op::Always ? "G[" : "F[";
      out += std::to_string(f.a) + "," + std::to_string(f.b) + "] ";
      print_operand(f.child(), out);
      break;
  }
}

}  // namespace

ParseError::ParseError(const std::string& what, std::size_t offset)
    : std::runtime_error(what), offset_(offset) {}

FormulaPtr make_true() { return make_node(Op::True, {}); }

FormulaPtr make_predicate(std::string id) {
  if (id.empty() || !is_ident_start(id.front()) ||
      !std::all_of(id.begin(), id.end(), is_ident_char)) {
    throw std::invalid_argument("invalid predicate identifier '" + id + "'");
  }
  auto f = std::make_shared<Formula>();
  f->op = Op::Predicate;
  f->predicate = std::move(id);
  return f;
}

FormulaPtr make_not(FormulaPtr child) { return make_node(Op::Not, {std::move(child)}); }
FormulaPtr make_and(std::vector<FormulaPtr> children) {
  return make_nary(Op::And, std::move(children));
}
FormulaPtr make_or(std::vector<FormulaPtr> children) {
  return make_nary(Op::Or, std::move(children));
}
FormulaPtr make_always(int a, int b, FormulaPtr child) {
  return make_temporal(Op::Always, a, b, std::move(child));
}
FormulaPtr make_eventually(int a, int b, FormulaPtr child) {
  return make_temporal(Op::Eventually, a, b, std::move(child));
}

bool equal(const Formula& lhs, const Formula& rhs) {
  if (lhs.op != rhs.op || lhs.predicate != rhs.predicate || lhs.a != rhs.a || lhs.b != rhs.b ||
      lhs.children.size() != rhs.children.size()) {
    return false;
  }
  for (std::size_t i = 0; i < lhs.children.size(); ++i) {
    if (!equal(*lhs.children[i], *rhs.children[i])) return false;
  }
  return true;
}

FormulaPtr parse_formula(std::string_view text) { return Parser(text).parse(); }

std::string to_string(const Formula& phi) {
  std::string out;
  print(phi, out);
  return out;
}

int horizon(const Formula& phi) {
  switch (phi.op) {
    case Op::True:
    case Op::Predicate: return 0;
    case Op::Not: return horizon(phi.child());
    case Op::And:
    case Op::Or: {
      int h = 0;
      for (const auto& c : phi.children) h = std::max(h, horizon(*c));
      return h;
    }
    case Op::Always:
    case Op::Eventually: return phi.b + horizon(phi.child());
  }
  return 0;
}

bool is_immutable(const Formula& phi) {
  if (phi.is_temporal()) return false;
  return std::all_of(phi.children.begin(), phi.children.end(),
                     [](const FormulaPtr& c) { return is_immutable(*c); });
}

std::vector<const Formula*> subformulae_postorder(const Formula& phi) {
  std::vector<const Formula*> order;
  std::function<void(const Formula&)> visit = [&](const Formula& f) {
    for (const auto& c : f.children) visit(*c);
    order.push_back(&f);
  };
  visit(phi);
  return order;
}

std::vector<std::string> predicate_ids(const Formula& phi) {
  std::vector<std::string> ids;
  for (const Formula* f : subformulae_postorder(phi)) {
    if (f->op == Op::Predicate && std::find(ids.begin(), ids.end(), f->predicate) == ids.end()) {
      ids.push_back(f->predicate);
    }
  }
  return ids;
}

}  // namespace grasp::stl
