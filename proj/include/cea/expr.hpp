#pragma once

#include <cstddef>
#include <memory>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>

namespace cea {

// Closed-form time functions over the variables s and t.
//
// Grammar (recursive descent, lowest precedence first):
//
//   expr    := term (('+' | '-') term)*
//   term    := unary (('*' | '/') unary)*
//   unary   := '-' unary | power
//   power   := primary ('^' unary)?          right-associative
//   primary := number | 's' | 't' | func '(' expr ')' | '(' expr ')'
//   func    := exp | log | sin | cos | sqrt | abs
//
// Unary minus sits above '^', so "-t^2" is -(t^2) while "2^-t" is 2^(-t).
// Numbers are decimal with an optional exponent; no implicit multiplication.

enum class Func { Exp, Log, Sin, Cos, Sqrt, Abs };

struct ExprNode {
    enum class Kind { Number, VarS, VarT, Neg, Add, Sub, Mul, Div, Pow, Call };

    Kind kind = Kind::Number;
    double value = 0.0;
    Func func = Func::Exp;
    std::shared_ptr<const ExprNode> lhs;
    std::shared_ptr<const ExprNode> rhs;
};

using NodePtr = std::shared_ptr<const ExprNode>;

class ParseError : public std::runtime_error {
public:
    enum class Kind { Syntax, UnknownIdentifier, UnknownFunction };

    ParseError(Kind kind, std::size_t offset, const std::string& what);

    Kind kind() const noexcept { return kind_; }
    std::size_t offset() const noexcept { return offset_; }

private:
    Kind kind_;
    std::size_t offset_;
};

// Raised on division by zero, log of a non-positive value, sqrt of a negative
// value, or any other operation whose result is not finite.
class EvalError : public std::domain_error {
public:
    EvalError(const std::string& what, std::string subexpr);

    const std::string& subexpr() const noexcept { return subexpr_; }

private:
    std::string subexpr_;
};

// Immutable parsed expression. Copies share the tree.
class TimeExpr {
public:
    TimeExpr();
    explicit TimeExpr(NodePtr root);

    static TimeExpr parse(std::string_view text);
    static TimeExpr constant(double value);

    double eval(double s, double t) const;

    // Canonical text: binary operations fully parenthesized, literals in
    // shortest round-trip form. parse(to_string()) rebuilds an equal tree.
    std::string to_string() const;

    // Subset of {"s", "t"} referenced by the tree.
    std::set<std::string> variables() const;

    const NodePtr& root() const noexcept { return root_; }

    friend bool operator==(const TimeExpr& a, const TimeExpr& b);

private:
    NodePtr root_;
};

bool trees_equal(const NodePtr& a, const NodePtr& b);

// Variables used by `expr` that are not in `allowed`; empty means valid.
std::set<std::string> restrict_variables(const TimeExpr& expr, const std::set<std::string>& allowed);

std::string_view func_name(Func f);

// Shortest decimal text that parses back to exactly `value`.
std::string format_real(double value);

}  // namespace cea
