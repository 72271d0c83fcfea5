#include "cea/expr.hpp"

#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <functional>

namespace cea {

ParseError::ParseError(Kind kind, std::size_t offset, const std::string& what)
    : std::runtime_error(what + " at offset " + std::to_string(offset)), kind_(kind), offset_(offset) {}

EvalError::EvalError(const std::string& what, std::string subexpr)
    : std::domain_error(what + " in `" + subexpr + "`"), subexpr_(std::move(subexpr)) {}

std::string_view func_name(Func f) {
    switch (f) {
        case Func::Exp: return "exp";
        case Func::Log: return "log";
        case Func::Sin: return "sin";
        case Func::Cos: return "cos";
        case Func::Sqrt: return "sqrt";
        case Func::Abs: return "abs";
    }
    return "?";
}

std::string format_real(double value) {
    std::array<char, 64> buf{};
    auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
    return std::string(buf.data(), ptr);
}

namespace {

NodePtr make_leaf(ExprNode::Kind kind, double value = 0.0) {
    auto n = std::make_shared<ExprNode>();
    n->kind = kind;
    n->value = value;
    return n;
}

NodePtr make_unary(ExprNode::Kind kind, NodePtr child, Func func = Func::Exp) {
    auto n = std::make_shared<ExprNode>();
    n->kind = kind;
    n->func = func;
    n->lhs = std::move(child);
    return n;
}

NodePtr make_binary(ExprNode::Kind kind, NodePtr a, NodePtr b) {
    auto n = std::make_shared<ExprNode>();
    n->kind = kind;
    n->lhs = std::move(a);
    n->rhs = std::move(b);
    return n;
}

class Parser {
public:
    explicit Parser(std::string_view text) : text_(text) {}

    NodePtr run() {
        skip_ws();
        if (pos_ >= text_.size()) {
            throw ParseError(ParseError::Kind::Syntax, pos_, "empty expression");
        }
        NodePtr e = expr();
        skip_ws();
        if (pos_ < text_.size()) {
            throw ParseError(ParseError::Kind::Syntax, pos_,
                             std::string("unexpected character '") + text_[pos_] + "'");
        }
        return e;
    }

private:
    std::string_view text_;
    std::size_t pos_ = 0;

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
        if (!accept(c)) {
            throw ParseError(ParseError::Kind::Syntax, pos_, std::string("expected '") + c + "'");
        }
    }

    NodePtr expr() {
        NodePtr lhs = term();
        for (;;) {
            if (accept('+')) {
                lhs = make_binary(ExprNode::Kind::Add, lhs, term());
            } else if (accept('-')) {
                lhs = make_binary(ExprNode::Kind::Sub, lhs, term());
            } else {
                return lhs;
            }
        }
    }

    NodePtr term() {
        NodePtr lhs = unary();
        for (;;) {
            if (accept('*')) {
                lhs = make_binary(ExprNode::Kind::Mul, lhs, unary());
            } else if (accept('/')) {
                lhs = make_binary(ExprNode::Kind::Div, lhs, unary());
            } else {
                return lhs;
            }
        }
    }

    NodePtr unary() {
        if (accept('-')) return make_unary(ExprNode::Kind::Neg, unary());
        return power();
    }

    NodePtr power() {
        NodePtr base = primary();
        if (accept('^')) return make_binary(ExprNode::Kind::Pow, base, unary());
        return base;
    }

    NodePtr number() {
        const std::size_t start = pos_;
        auto digits = [&] {
            std::size_t n = 0;
            while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
                ++pos_;
                ++n;
            }
            return n;
        };
        std::size_t mantissa = digits();
        if (pos_ < text_.size() && text_[pos_] == '.') {
            ++pos_;
            mantissa += digits();
        }
        if (mantissa == 0) throw ParseError(ParseError::Kind::Syntax, start, "malformed number");
        if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
            ++pos_;
            if (pos_ < text_.size() && (text_[pos_] == '+' || text_[pos_] == '-')) ++pos_;
            if (digits() == 0) throw ParseError(ParseError::Kind::Syntax, start, "malformed exponent");
        }
        double value = 0.0;
        auto [ptr, ec] = std::from_chars(text_.data() + start, text_.data() + pos_, value);
        if (ec != std::errc() || !std::isfinite(value)) {
            throw ParseError(ParseError::Kind::Syntax, start, "number out of range");
        }
        return make_leaf(ExprNode::Kind::Number, value);
    }

    NodePtr primary() {
        skip_ws();
        if (pos_ >= text_.size()) {
            throw ParseError(ParseError::Kind::Syntax, pos_, "unexpected end of input");
        }
        const char c = text_[pos_];
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
        if (c == '(') {
            ++pos_;
            NodePtr e = expr();
            expect(')');
            return e;
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            const std::size_t start = pos_;
            while (pos_ < text_.size() &&
                   (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_')) {
                ++pos_;
            }
            const std::string_view name = text_.substr(start, pos_ - start);
            skip_ws();
            const bool call = pos_ < text_.size() && text_[pos_] == '(';
            if (call) {
                static constexpr std::array<Func, 6> funcs{Func::Exp, Func::Log, Func::Sin,
                                                           Func::Cos, Func::Sqrt, Func::Abs};
                for (Func f : funcs) {
                    if (func_name(f) == name) {
                        ++pos_;
                        NodePtr arg = expr();
                        expect(')');
                        return make_unary(ExprNode::Kind::Call, arg, f);
                    }
                }
                throw ParseError(ParseError::Kind::UnknownFunction, start,
                                 "unknown function `" + std::string(name) + "`");
            }
            if (name == "s") return make_leaf(ExprNode::Kind::VarS);
            if (name == "t") return make_leaf(ExprNode::Kind::VarT);
            throw ParseError(ParseError::Kind::UnknownIdentifier, start,
                             "unknown identifier `" + std::string(name) + "`");
        }
        throw ParseError(ParseError::Kind::Syntax, pos_, std::string("unexpected character '") + c + "'");
    }
};

void print(const ExprNode& n, std::string& out) {
    using K = ExprNode::Kind;
    switch (n.kind) {
        case K::Number: out += format_real(n.value); return;
        case K::VarS: out += 's'; return;
        case K::VarT: out += 't'; return;
        case K::Neg:
            out += '-';
            print(*n.lhs, out);
            return;
        case K::Call:
            out += func_name(n.func);
            out += '(';
            print(*n.lhs, out);
            out += ')';
            return;
        default: break;
    }
    static constexpr std::array<std::string_view, 10> ops{"", "", "", "", " + ", " - ", " * ", " / ", " ^ ", ""};
    out += '(';
    // A negated base must keep its own parentheses: "-t ^ 2" means -(t^2).
    const bool wrap_base = n.kind == K::Pow && n.lhs->kind == K::Neg;
    if (wrap_base) out += '(';
    print(*n.lhs, out);
    if (wrap_base) out += ')';
    out += ops[static_cast<std::size_t>(n.kind)];
    print(*n.rhs, out);
    out += ')';
}

std::string node_text(const ExprNode& n) {
    std::string out;
    print(n, out);
    return out;
}

double checked(double value, const ExprNode& n, const char* what) {
    if (!std::isfinite(value)) throw EvalError(what, node_text(n));
    return value;
}

double eval_node(const ExprNode& n, double s, double t) {
    using K = ExprNode::Kind;
    switch (n.kind) {
        case K::Number: return n.value;
        case K::VarS: return checked(s, n, "non-finite variable");
        case K::VarT: return checked(t, n, "non-finite variable");
        case K::Neg: return -eval_node(*n.lhs, s, t);
        case K::Add: return checked(eval_node(*n.lhs, s, t) + eval_node(*n.rhs, s, t), n, "overflow");
        case K::Sub: return checked(eval_node(*n.lhs, s, t) - eval_node(*n.rhs, s, t), n, "overflow");
        case K::Mul: return checked(eval_node(*n.lhs, s, t) * eval_node(*n.rhs, s, t), n, "overflow");
        case K::Div: {
            const double a = eval_node(*n.lhs, s, t);
            const double b = eval_node(*n.rhs, s, t);
            if (b == 0.0) throw EvalError("division by zero", node_text(n));
            return checked(a / b, n, "overflow");
        }
        case K::Pow: {
            const double a = eval_node(*n.lhs, s, t);
            const double b = eval_node(*n.rhs, s, t);
            return checked(std::pow(a, b), n, "undefined power");
        }
        case K::Call: {
            const double x = eval_node(*n.lhs, s, t);
            switch (n.func) {
                case Func::Exp: return checked(std::exp(x), n, "overflow");
                case Func::Log:
                    if (x <= 0.0) throw EvalError("log of non-positive value", node_text(n));
                    return std::log(x);
                case Func::Sin: return std::sin(x);
                case Func::Cos: return std::cos(x);
                case Func::Sqrt:
                    if (x < 0.0) throw EvalError("sqrt of negative value", node_text(n));
                    return std::sqrt(x);
                case Func::Abs: return std::fabs(x);
            }
        }
    }
    return 0.0;
}

void collect_vars(const ExprNode& n, std::set<std::string>& out) {
    if (n.kind == ExprNode::Kind::VarS) out.insert("s");
    if (n.kind == ExprNode::Kind::VarT) out.insert("t");
    if (n.lhs) collect_vars(*n.lhs, out);
    if (n.rhs) collect_vars(*n.rhs, out);
}

}  // namespace

bool trees_equal(const NodePtr& a, const NodePtr& b) {
    if (a == b) return true;
    if (!a || !b) return false;
    if (a->kind != b->kind) return false;
    switch (a->kind) {
        case ExprNode::Kind::Number: return a->value == b->value;
        case ExprNode::Kind::Call:
            if (a->func != b->func) return false;
            break;
        default: break;
    }
    return trees_equal(a->lhs, b->lhs) && trees_equal(a->rhs, b->rhs);
}

TimeExpr::TimeExpr() : root_(make_leaf(ExprNode::Kind::Number, 0.0)) {}

TimeExpr::TimeExpr(NodePtr root) : root_(std::move(root)) {
    if (!root_) throw std::invalid_argument("TimeExpr: null tree");
}

TimeExpr TimeExpr::parse(std::string_view text) { return TimeExpr(Parser(text).run()); }

TimeExpr TimeExpr::constant(double value) {
    if (value < 0.0) return TimeExpr(make_unary(ExprNode::Kind::Neg, make_leaf(ExprNode::Kind::Number, -value)));
    return TimeExpr(make_leaf(ExprNode::Kind::Number, value));
}

double TimeExpr::eval(double s, double t) const { return eval_node(*root_, s, t); }

std::string TimeExpr::to_string() const { return node_text(*root_); }

std::set<std::string> TimeExpr::variables() const {
    std::set<std::string> vars;
    collect_vars(*root_, vars);
    return vars;
}

bool operator==(const TimeExpr& a, const TimeExpr& b) { return trees_equal(a.root_, b.root_); }

std::set<std::string> restrict_variables(const TimeExpr& expr, const std::set<std::string>& allowed) {
    std::set<std::string> bad;
    for (const auto& v : expr.variables()) {
        if (!allowed.count(v)) bad.insert(v);
    }
    return bad;
}

}  // namespace cea
