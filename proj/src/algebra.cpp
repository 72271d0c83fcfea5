#include "cea/algebra.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace cea {

double norm_inf(const AlgebraElement& x) {
    return std::max({std::fabs(x[0]), std::fabs(x[1]), std::fabs(x[2])});
}

double distance_inf(const AlgebraElement& a, const AlgebraElement& b) {
    return std::max({std::fabs(a[0] - b[0]), std::fabs(a[1] - b[1]), std::fabs(a[2] - b[2])});
}

StructuralMatrix StructuralMatrix::zero() { return StructuralMatrix{}; }

StructuralMatrix StructuralMatrix::identity() {
    StructuralMatrix m;
    for (std::size_t i = 0; i < 3; ++i) m.a[i][i] = 1.0;
    return m;
}

StructuralMatrix StructuralMatrix::from_rows(const std::array<std::array<double, 3>, 3>& rows) {
    StructuralMatrix m;
    m.a = rows;
    return m;
}

StructuralMatrix StructuralMatrix::outer(const Vec3& u, const Vec3& v) {
    StructuralMatrix m;
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 3; ++j) m.a[i][j] = u[i] * v[j];
    return m;
}

bool StructuralMatrix::all_finite() const {
    for (const auto& row : a)
        for (double v : row)
            if (!std::isfinite(v)) return false;
    return true;
}

double StructuralMatrix::norm_inf() const {
    double best = 0.0;
    for (const auto& row : a) best = std::max(best, std::fabs(row[0]) + std::fabs(row[1]) + std::fabs(row[2]));
    return best;
}

double StructuralMatrix::norm_one() const {
    double best = 0.0;
    for (std::size_t j = 0; j < 3; ++j)
        best = std::max(best, std::fabs(a[0][j]) + std::fabs(a[1][j]) + std::fabs(a[2][j]));
    return best;
}

StructuralMatrix matmul(const StructuralMatrix& lhs, const StructuralMatrix& rhs) {
    StructuralMatrix out;
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 3; ++j)
            out.a[i][j] = lhs.a[i][0] * rhs.a[0][j] + lhs.a[i][1] * rhs.a[1][j] + lhs.a[i][2] * rhs.a[2][j];
    return out;
}

double max_abs_diff(const StructuralMatrix& a, const StructuralMatrix& b) {
    double best = 0.0;
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 3; ++j) best = std::max(best, std::fabs(a.a[i][j] - b.a[i][j]));
    return best;
}

AlgebraElement multiply(const StructuralMatrix& m, const AlgebraElement& x, const AlgebraElement& y) {
    // Products x_i y_i are formed first so that multiply(x, y) and
    // multiply(y, x) execute identical floating-point operations.
    const Vec3 p{x[0] * y[0], x[1] * y[1], x[2] * y[2]};
    AlgebraElement z;
    for (std::size_t j = 0; j < 3; ++j) z[j] = m.a[0][j] * p[0] + m.a[1][j] * p[1] + m.a[2][j] * p[2];
    return z;
}

AlgebraElement square(const StructuralMatrix& m, const AlgebraElement& x) { return multiply(m, x, x); }

double idempotent_residual(const StructuralMatrix& m, const AlgebraElement& x) {
    const AlgebraElement x2 = square(m, x);
    return std::max({std::fabs(x2[0] - x[0]), std::fabs(x2[1] - x[1]), std::fabs(x2[2] - x[2])});
}

std::optional<BaricResult> baric_check(const StructuralMatrix& m, double tol) {
    const double eps = tol * std::max(1.0, m.norm_inf());
    std::optional<BaricResult> result;
    std::vector<std::size_t> qualifying;
    for (std::size_t c = 0; c < 3; ++c) {
        if (std::fabs(m.a[c][c]) <= eps) continue;
        bool ok = true;
        for (std::size_t i = 0; i < 3; ++i) {
            if (i != c && std::fabs(m.a[i][c]) > eps) ok = false;
        }
        if (ok) qualifying.push_back(c);
    }
    if (qualifying.empty()) return std::nullopt;
    BaricResult r;
    r.column = qualifying.front();
    r.weight = m.a[r.column][r.column];
    r.qualifying = std::move(qualifying);
    return r;
}

NilpotentClassification nilpotent_classify(const StructuralMatrix& m, double tol) {
    NilpotentClassification out;
    const double scale = m.norm_inf();
    auto accept = [&](const Vec3& y, std::vector<std::size_t> support) {
        out.kind = NilpotentClassification::Kind::PositiveDimensional;
        out.witness = y;
        out.nilpotent = AlgebraElement{{std::sqrt(y[0]), std::sqrt(y[1]), std::sqrt(y[2])}};
        out.support = std::move(support);
    };
    if (scale == 0.0) {
        accept({1.0, 0.0, 0.0}, {0});
        return out;
    }
    // Rows j of B = A^T / ||A||: sum_i a_ij y_i; the extra row enforces sum y = 1.
    const double resid_tol = tol * std::max(1.0, scale) / scale;
    static constexpr std::array<std::array<int, 3>, 7> patterns{{
        {0, -1, -1}, {1, -1, -1}, {2, -1, -1}, {0, 1, -1}, {0, 2, -1}, {1, 2, -1}, {0, 1, 2}}};
    for (const auto& pat : patterns) {
        std::vector<std::size_t> support;
        for (int p : pat)
            if (p >= 0) support.push_back(static_cast<std::size_t>(p));
        const auto k = static_cast<Eigen::Index>(support.size());
        Eigen::MatrixXd sys(4, k);
        for (Eigen::Index c = 0; c < k; ++c) {
            const std::size_t i = support[static_cast<std::size_t>(c)];
            for (Eigen::Index j = 0; j < 3; ++j) sys(j, c) = m.a[i][static_cast<std::size_t>(j)] / scale;
            sys(3, c) = 1.0;
        }
        Eigen::Vector4d rhs(0.0, 0.0, 0.0, 1.0);
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(sys);
        qr.setThreshold(1e-12);
        // A vertex has linearly independent support columns; rank-deficient
        // supports contain smaller-support vertices already enumerated.
        if (qr.rank() < k) continue;
        const Eigen::VectorXd y = qr.solve(rhs);
        if ((sys * y - rhs).cwiseAbs().maxCoeff() > resid_tol) continue;
        if (y.minCoeff() < -tol) continue;
        Vec3 full{0.0, 0.0, 0.0};
        bool positive = false;
        for (Eigen::Index c = 0; c < k; ++c) {
            full[support[static_cast<std::size_t>(c)]] = std::max(0.0, y(c));
            positive = positive || y(c) > tol;
        }
        if (!positive) continue;
        std::vector<std::size_t> supp;
        for (std::size_t i = 0; i < 3; ++i)
            if (full[i] > 0.0) supp.push_back(i);
        accept(full, std::move(supp));
        return out;
    }
    return out;
}

bool IdempotentSet::contains(const AlgebraElement& x, double radius) const {
    return std::any_of(points.begin(), points.end(),
                       [&](const IdempotentPoint& p) { return distance_inf(p.x, x) <= radius; });
}

std::optional<Rank1Factors> rank1_factor(const StructuralMatrix& m, double tol) {
    std::size_t p = 0, q = 0;
    double big = 0.0;
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 3; ++j)
            if (std::fabs(m.a[i][j]) > big) {
                big = std::fabs(m.a[i][j]);
                p = i;
                q = j;
            }
    Rank1Factors f;
    if (big == 0.0) return f;
    for (std::size_t j = 0; j < 3; ++j) f.v[j] = m.a[p][j];
    for (std::size_t i = 0; i < 3; ++i) f.u[i] = m.a[i][q] / m.a[p][q];
    if (max_abs_diff(m, StructuralMatrix::outer(f.u, f.v)) > tol * std::max(1.0, m.norm_inf())) return std::nullopt;
    return f;
}

IdempotentSet idempotents_rank1(const Vec3& u, const Vec3& v, double tol) {
    IdempotentSet out;
    out.completeness = IdempotentSet::Completeness::CertifiedRank1;
    out.points.push_back({});
    const double S = u[0] * v[0] * v[0] + u[1] * v[1] * v[1] + u[2] * v[2] * v[2];
    if (std::fabs(S) > tol) {
        IdempotentPoint p;
        p.x = AlgebraElement{{v[0] / S, v[1] / S, v[2] / S}};
        p.residual = idempotent_residual(StructuralMatrix::outer(u, v), p.x);
        if (norm_inf(p.x) > 1e-6) out.points.push_back(p);
    } else {
        bool any_v = v[0] != 0.0 || v[1] != 0.0 || v[2] != 0.0;
        out.nonzero_diverges = any_v;
    }
    return out;
}

IdempotentSet idempotents_rank1(const StructuralMatrix& m, const Rank1Factors& f, double tol) {
    const StructuralMatrix uv = StructuralMatrix::outer(f.u, f.v);
    if (max_abs_diff(m, uv) > 1e-9 * std::max(1.0, m.norm_inf())) {
        throw std::invalid_argument("rank-1 factorization does not reproduce the structural matrix");
    }
    IdempotentSet out = idempotents_rank1(f.u, f.v, tol);
    for (auto& p : out.points) p.residual = idempotent_residual(m, p.x);
    return out;
}

namespace {

Eigen::Vector3d residual_vec(const StructuralMatrix& m, const Eigen::Vector3d& x) {
    const AlgebraElement e{{x(0), x(1), x(2)}};
    const AlgebraElement x2 = square(m, e);
    return Eigen::Vector3d(x2[0] - x(0), x2[1] - x(1), x2[2] - x(2));
}

// Convergence threshold for V(x) - x at x; grows with the size of the
// quadratic terms so large roots are judged by relative accuracy.
double accept_threshold(double tol, double a_norm, double x_norm) {
    return tol * std::max({1.0, a_norm * x_norm * x_norm, x_norm});
}

std::optional<Eigen::Vector3d> newton_solve(const StructuralMatrix& m, Eigen::Vector3d x,
                                            const NewtonOptions& opts, double a_norm) {
    Eigen::Vector3d r = residual_vec(m, x);
    double rn = r.lpNorm<Eigen::Infinity>();
    for (std::size_t it = 0; it < opts.max_iter; ++it) {
        if (rn <= accept_threshold(opts.newton_tol, a_norm, x.lpNorm<Eigen::Infinity>())) {
            // Polish while the residual keeps shrinking.
            for (int extra = 0; extra < 3; ++extra) {
                Eigen::Matrix3d jac;
                for (int j = 0; j < 3; ++j)
                    for (int k = 0; k < 3; ++k) jac(j, k) = 2.0 * m.a[k][j] * x(k) - (j == k ? 1.0 : 0.0);
                Eigen::FullPivLU<Eigen::Matrix3d> lu(jac);
                if (!lu.isInvertible()) break;
                const Eigen::Vector3d cand = x - lu.solve(r);
                const Eigen::Vector3d rc = residual_vec(m, cand);
                const double rcn = rc.lpNorm<Eigen::Infinity>();
                if (!(rcn < rn)) break;
                x = cand;
                r = rc;
                rn = rcn;
            }
            return x;
        }
        Eigen::Matrix3d jac;
        for (int j = 0; j < 3; ++j)
            for (int k = 0; k < 3; ++k) jac(j, k) = 2.0 * m.a[k][j] * x(k) - (j == k ? 1.0 : 0.0);
        Eigen::FullPivLU<Eigen::Matrix3d> lu(jac);
        if (!lu.isInvertible()) return std::nullopt;
        const Eigen::Vector3d step = lu.solve(-r);
        if (!step.allFinite()) return std::nullopt;
        double lambda = 1.0;
        Eigen::Vector3d cand;
        Eigen::Vector3d rc;
        double rcn = 0.0;
        for (;;) {
            cand = x + lambda * step;
            rc = residual_vec(m, cand);
            rcn = rc.lpNorm<Eigen::Infinity>();
            if (rcn <= (1.0 - 1e-4 * lambda) * rn || lambda < 1.0 / 1024.0) break;
            lambda *= 0.5;
        }
        if (!std::isfinite(rcn) || cand.lpNorm<Eigen::Infinity>() > 1e12) return std::nullopt;
        x = cand;
        r = rc;
        rn = rcn;
    }
    return std::nullopt;
}

}  // namespace

IdempotentSet idempotents_numeric(const StructuralMatrix& m, const NewtonOptions& opts) {
    IdempotentSet out;
    out.completeness = IdempotentSet::Completeness::HeuristicMultistart;
    out.points.push_back({AlgebraElement{}, 0.0, IdempotentPoint::Method::ClosedForm});

    std::vector<Eigen::Vector3d> starts;
    if (opts.rank1_seed) {
        if (auto f = rank1_factor(m)) {
            const IdempotentSet closed = idempotents_rank1(f->u, f->v);
            for (const auto& p : closed.points)
                if (norm_inf(p.x) > 0.0) starts.emplace_back(p.x[0], p.x[1], p.x[2]);
        }
    }
    for (const auto& seed : opts.extra_seeds) starts.emplace_back(seed[0], seed[1], seed[2]);
    const std::size_t n = std::max<std::size_t>(opts.grid, 1);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            for (std::size_t k = 0; k < n; ++k) {
                auto coord = [&](std::size_t idx) {
                    if (n == 1) return 0.0;
                    return -opts.box + 2.0 * opts.box * static_cast<double>(idx) / static_cast<double>(n - 1);
                };
                starts.emplace_back(coord(i), coord(j), coord(k));
            }

    const double a_norm = m.norm_inf();
    for (const auto& start : starts) {
        auto root = newton_solve(m, start, opts, a_norm);
        if (!root) continue;
        const AlgebraElement x{{(*root)(0), (*root)(1), (*root)(2)}};
        if (out.contains(x, opts.dedup)) continue;
        out.points.push_back({x, idempotent_residual(m, x), IdempotentPoint::Method::Newton});
    }
    std::sort(out.points.begin() + 1, out.points.end(),
              [](const IdempotentPoint& a, const IdempotentPoint& b) { return a.x.x < b.x.x; });
    return out;
}

Trajectory evolve(const StructuralMatrix& m, const AlgebraElement& x0, std::size_t steps) {
    Trajectory tr;
    tr.points.reserve(steps + 1);
    tr.points.push_back(x0);
    for (std::size_t k = 0; k < steps; ++k) {
        if (norm_inf(tr.points.back()) > 1e12) {
            tr.diverged = true;
            break;
        }
        tr.points.push_back(square(m, tr.points.back()));
    }
    if (!tr.diverged && norm_inf(tr.points.back()) > 1e12) tr.diverged = true;
    return tr;
}

}  // namespace cea
