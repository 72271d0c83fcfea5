#pragma once

// Test-only oracles and generators. Nothing here calls into the code paths it
// is used to check: matrix products, x^2, and simplex searches are written out
// longhand.

#include "cea/algebra.hpp"
#include "cea/expr.hpp"
#include "cea/family.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <memory>
#include <random>
#include <string>

namespace cea::testing {

using Rng = std::mt19937_64;

inline double uniform(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

inline std::string num(double v) {
    // Negative coefficients are wrapped so they can sit anywhere in an expression.
    return v < 0 ? "(" + format_real(v) + ")" : format_real(v);
}

// --- matrices -------------------------------------------------------------

inline double oracle_product_entry(const StructuralMatrix& a, const StructuralMatrix& b, std::size_t i,
                                   std::size_t j) {
    double sum = 0.0;
    for (std::size_t k = 0; k < 3; ++k) sum += a.a[i][k] * b.a[k][j];
    return sum;
}

inline double oracle_ck_defect(const StructuralMatrix& whole, const StructuralMatrix& left,
                               const StructuralMatrix& right) {
    double worst = 0.0;
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 3; ++j)
            worst = std::max(worst, std::fabs(whole.a[i][j] - oracle_product_entry(left, right, i, j)));
    return worst;
}

// (x^2)_j = sum_i a_ij x_i^2
inline Vec3 oracle_square(const StructuralMatrix& m, const Vec3& x) {
    Vec3 out{0, 0, 0};
    for (std::size_t j = 0; j < 3; ++j) {
        double acc = 0.0;
        for (std::size_t i = 0; i < 3; ++i) acc += m.a[i][j] * (x[i] * x[i]);
        out[j] = acc;
    }
    return out;
}

inline double oracle_residual(const StructuralMatrix& m, const Vec3& x) {
    const Vec3 x2 = oracle_square(m, x);
    return std::max({std::fabs(x2[0] - x[0]), std::fabs(x2[1] - x[1]), std::fabs(x2[2] - x[2])});
}

inline double row_sum_norm(const StructuralMatrix& m) {
    double best = 0.0;
    for (const auto& r : m.a) best = std::max(best, std::fabs(r[0]) + std::fabs(r[1]) + std::fabs(r[2]));
    return best;
}

inline double col_sum_norm(const StructuralMatrix& m) {
    double best = 0.0;
    for (std::size_t j = 0; j < 3; ++j)
        best = std::max(best, std::fabs(m.a[0][j]) + std::fabs(m.a[1][j]) + std::fabs(m.a[2][j]));
    return best;
}

// min over the simplex grid {y = (i, j, k)/res, i+j+k = res} of max_j |sum_i a_ij y_i|.
inline double simplex_brute_min(const StructuralMatrix& m, int res = 200) {
    double best = std::numeric_limits<double>::infinity();
    for (int i = 0; i <= res; ++i)
        for (int j = 0; i + j <= res; ++j) {
            const int k = res - i - j;
            const double y[3] = {i / double(res), j / double(res), k / double(res)};
            double worst = 0.0;
            for (std::size_t c = 0; c < 3; ++c) {
                const double v = m.a[0][c] * y[0] + m.a[1][c] * y[1] + m.a[2][c] * y[2];
                worst = std::max(worst, std::fabs(v));
            }
            best = std::min(best, worst);
        }
    return best;
}

inline StructuralMatrix random_matrix(Rng& rng) {
    StructuralMatrix m;
    for (auto& row : m.a)
        for (double& v : row) v = uniform(rng, -2.0, 2.0);
    return m;
}

// Integer entries in [-3, 3] with occasional forced zero columns/rows, so
// that exact feasible points hit the 1/200 grid.
inline StructuralMatrix random_integer_matrix(Rng& rng) {
    std::uniform_int_distribution<int> d(-3, 3);
    StructuralMatrix m;
    for (auto& row : m.a)
        for (double& v : row) v = d(rng);
    return m;
}

// --- expressions ----------------------------------------------------------

struct GeneratedExpr {
    NodePtr tree;
    double value;  // host arithmetic along the same tree
};

// Random tree with literals >= 0 and a value computed by direct arithmetic.
// Subtrees whose value would be undefined are regenerated.
class ExprGenerator {
public:
    ExprGenerator(Rng& rng, double s, double t) : rng_(rng), s_(s), t_(t) {}

    GeneratedExpr make(int depth) {
        for (;;) {
            GeneratedExpr g = attempt(depth);
            if (std::isfinite(g.value) && std::fabs(g.value) < 1e12) return g;
        }
    }

private:
    Rng& rng_;
    double s_, t_;

    static NodePtr node(ExprNode::Kind k, NodePtr a = nullptr, NodePtr b = nullptr, double v = 0, Func f = Func::Exp) {
        auto n = std::make_shared<ExprNode>();
        n->kind = k;
        n->lhs = std::move(a);
        n->rhs = std::move(b);
        n->value = v;
        n->func = f;
        return n;
    }

    GeneratedExpr leaf() {
        const int pick = std::uniform_int_distribution<int>(0, 3)(rng_);
        if (pick == 0) return {node(ExprNode::Kind::VarS), s_};
        if (pick == 1) return {node(ExprNode::Kind::VarT), t_};
        double v;
        if (pick == 2) {
            v = std::uniform_int_distribution<int>(0, 9)(rng_);
        } else {
            v = uniform(rng_, 0.0, 5.0);
        }
        return {node(ExprNode::Kind::Number, nullptr, nullptr, v), v};
    }

    GeneratedExpr attempt(int depth) {
        if (depth <= 0) return leaf();
        const int pick = std::uniform_int_distribution<int>(0, 8)(rng_);
        using K = ExprNode::Kind;
        switch (pick) {
            case 0: return leaf();
            case 1: {
                auto a = make(depth - 1);
                return {node(K::Neg, a.tree), -a.value};
            }
            case 2: {
                auto a = make(depth - 1), b = make(depth - 1);
                return {node(K::Add, a.tree, b.tree), a.value + b.value};
            }
            case 3: {
                auto a = make(depth - 1), b = make(depth - 1);
                return {node(K::Sub, a.tree, b.tree), a.value - b.value};
            }
            case 4: {
                auto a = make(depth - 1), b = make(depth - 1);
                return {node(K::Mul, a.tree, b.tree), a.value * b.value};
            }
            case 5: {
                auto a = make(depth - 1), b = make(depth - 1);
                if (b.value == 0.0) return leaf();
                return {node(K::Div, a.tree, b.tree), a.value / b.value};
            }
            case 6: {
                auto a = make(depth - 1), b = make(depth - 1);
                if (!(a.value > 0.0) || std::fabs(b.value) > 4.0) return leaf();
                return {node(K::Pow, a.tree, b.tree), std::pow(a.value, b.value)};
            }
            default: {
                auto a = make(depth - 1);
                const int f = std::uniform_int_distribution<int>(0, 5)(rng_);
                switch (f) {
                    case 0:
                        if (a.value > 20.0) return leaf();
                        return {node(K::Call, a.tree, nullptr, 0, Func::Exp), std::exp(a.value)};
                    case 1:
                        if (!(a.value > 0.0)) return leaf();
                        return {node(K::Call, a.tree, nullptr, 0, Func::Log), std::log(a.value)};
                    case 2: return {node(K::Call, a.tree, nullptr, 0, Func::Sin), std::sin(a.value)};
                    case 3: return {node(K::Call, a.tree, nullptr, 0, Func::Cos), std::cos(a.value)};
                    case 4:
                        if (a.value < 0.0) return leaf();
                        return {node(K::Call, a.tree, nullptr, 0, Func::Sqrt), std::sqrt(a.value)};
                    default: return {node(K::Call, a.tree, nullptr, 0, Func::Abs), std::fabs(a.value)};
                }
            }
        }
    }
};

// --- families ---------------------------------------------------------------

// Smooth random parameters; positive where the family needs a nonzero
// denominator (h, Phi, g) so every cell with s >= 0 is defined.
inline CeaFamily random_family(FamilyKind kind, Rng& rng) {
    auto wave = [&](const char* var) {
        return num(uniform(rng, -1.0, 1.0)) + " + " + num(uniform(rng, -1.0, 1.0)) + "*sin(" +
               num(uniform(rng, 0.2, 2.0)) + "*" + var + ")";
    };
    auto positive = [&](const char* var) {
        const double base = uniform(rng, 1.2, 2.5);
        return num(base) + " + " + num(uniform(rng, -1.0, 1.0)) + "*cos(" + num(uniform(rng, 0.2, 2.0)) + "*" + var +
               ")";
    };
    std::map<std::string, std::string> p;
    std::optional<double> a;
    switch (kind) {
        case FamilyKind::F0: break;
        case FamilyKind::F1:
            p = {{"h", positive("t")}, {"f", wave("s")}, {"g", wave("s")}};
            break;
        case FamilyKind::F2:
            p = {{"phi", wave("s")}, {"psi", wave("s")}};
            a = uniform(rng, 1.0, 4.0);
            break;
        case FamilyKind::F3:
            p = {{"g1", positive("t")},
                 {"g2", num(uniform(rng, 0.2, 1.5)) + "*exp(" + num(uniform(rng, -0.4, 0.4)) + "*t)"},
                 {"g3", positive("t")},
                 {"psi", num(uniform(rng, 0.1, 1.0)) + " + " + num(uniform(rng, 0.0, 0.2)) + "*s"},
                 {"phi", num(uniform(rng, 0.1, 1.0)) + " + " + num(uniform(rng, 0.0, 0.5)) + "*cos(s)^2"}};
            break;
        case FamilyKind::F4:
            p = {{"g", positive("t")}, {"phi", wave("t")}, {"f", wave("t")}};
            break;
        case FamilyKind::F5:
            p = {{"phi", wave("t")}, {"psi", wave("t")}};
            a = uniform(rng, 1.0, 4.0);
            break;
        case FamilyKind::Custom: break;
    }
    return CeaFamily::make(kind, p, a);
}

// Uniform admissible (s, t) with 0 <= s <= t <= t_max.
inline std::pair<double, double> random_cell(Rng& rng, double t_max = 5.0) {
    double a = uniform(rng, 0.0, t_max), b = uniform(rng, 0.0, t_max);
    if (a > b) std::swap(a, b);
    return {a, b};
}

}  // namespace cea::testing
