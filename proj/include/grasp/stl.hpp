#pragma once

#include <cstddef>
#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace grasp::stl {

enum class Op { True, Predicate, Not, And, Or, Always, Eventually };

struct Formula;
using FormulaPtr = std::shared_ptr<const Formula>;

/// Bounded-time STL syntax tree. Nodes are immutable and may be shared
/// between trees.
struct Formula {
  Op op = Op::True;
  std::string predicate;             // Op::Predicate only
  std::vector<FormulaPtr> children;  // 1 for Not/Always/Eventually, >= 2 for And/Or
  int a = 0;                         // temporal window [a, b], in signal steps
  int b = 0;

  bool is_temporal() const { return op == Op::Always || op == Op::Eventually; }
  const Formula& child(std::size_t i = 0) const { return *children.at(i); }
};

FormulaPtr make_true();
FormulaPtr make_predicate(std::string id);
FormulaPtr make_not(FormulaPtr child);
FormulaPtr make_and(std::vector<FormulaPtr> children);
FormulaPtr make_or(std::vector<FormulaPtr> children);
FormulaPtr make_always(int a, int b, FormulaPtr child);
FormulaPtr make_eventually(int a, int b, FormulaPtr child);

/// Structural equality (operator, ids, bounds, children in order).
bool equal(const Formula& lhs, const Formula& rhs);

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t offset);
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

/// Parses the textual grammar
///
///   formula := or
///   or      := and ("|" and)*
///   and     := unary ("&" unary)*
///   unary   := "!" unary | "G[" int "," int "]" unary | "F[" int "," int "]" unary
///            | "(" formula ")" | "TRUE" | ident
///
/// Chains of `&` / `|` at one parenthesis level become a single n-ary node.
/// Throws ParseError carrying the byte offset of the offending input.
FormulaPtr parse_formula(std::string_view text);

/// Inverse of parse_formula: the output reparses to a structurally equal tree.
std::string to_string(const Formula& phi);

/// Latest step the formula's value at time 0 depends on.
int horizon(const Formula& phi);

/// True iff phi has no temporal operator, i.e. its value at t depends on s_t only.
bool is_immutable(const Formula& phi);

/// Every node of phi exactly once, children before parents.
std::vector<const Formula*> subformulae_postorder(const Formula& phi);

/// Predicate ids referenced by phi, in first-occurrence order without repeats.
std::vector<std::string> predicate_ids(const Formula& phi);

}  // namespace grasp::stl
