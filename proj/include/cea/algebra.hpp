#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace cea {

using Vec3 = std::array<double, 3>;

// x = x1 e1 + x2 e2 + x3 e3.
struct AlgebraElement {
    Vec3 x{0.0, 0.0, 0.0};

    double& operator[](std::size_t i) { return x[i]; }
    double operator[](std::size_t i) const { return x[i]; }

    friend bool operator==(const AlgebraElement&, const AlgebraElement&) = default;
};

double norm_inf(const AlgebraElement& x);
double distance_inf(const AlgebraElement& a, const AlgebraElement& b);

// Structural constants a_ij of e_i e_i = sum_j a_ij e_j (row i, column j).
struct StructuralMatrix {
    std::array<std::array<double, 3>, 3> a{};
    // Family id and time pair when produced by a family; "custom" otherwise.
    std::string provenance = "custom";
    double s = 0.0;
    double t = 0.0;

    double operator()(std::size_t i, std::size_t j) const { return a[i][j]; }
    double& operator()(std::size_t i, std::size_t j) { return a[i][j]; }

    static StructuralMatrix zero();
    static StructuralMatrix identity();
    static StructuralMatrix from_rows(const std::array<std::array<double, 3>, 3>& rows);
    static StructuralMatrix outer(const Vec3& u, const Vec3& v);

    bool all_finite() const;
    // Max absolute row sum.
    double norm_inf() const;
    // Max absolute column sum.
    double norm_one() const;
};

StructuralMatrix matmul(const StructuralMatrix& lhs, const StructuralMatrix& rhs);
// Entrywise max |a - b|.
double max_abs_diff(const StructuralMatrix& a, const StructuralMatrix& b);

// (xy)_j = sum_i a_ij x_i y_i
AlgebraElement multiply(const StructuralMatrix& m, const AlgebraElement& x, const AlgebraElement& y);
// Evolution operator V(x) = x^2.
AlgebraElement square(const StructuralMatrix& m, const AlgebraElement& x);
// max_j |(x^2)_j - x_j|
double idempotent_residual(const StructuralMatrix& m, const AlgebraElement& x);

struct BaricResult {
    std::size_t column = 0;  // zero-based i0
    double weight = 0.0;     // a_{i0 i0}; sigma(x) = weight * x_{i0}
    std::vector<std::size_t> qualifying;  // every column meeting the criterion
};

// A column i0 with a_{i0 i0} != 0 and a_{i i0} = 0 for i != i0, both tested
// against tol * max(1, ||A||_inf). Smallest qualifying index wins.
std::optional<BaricResult> baric_check(const StructuralMatrix& m, double tol = 1e-9);

struct NilpotentClassification {
    enum class Kind { OnlyZero, PositiveDimensional };

    Kind kind = Kind::OnlyZero;
    // Vertex y >= 0, sum y = 1, of { y : sum_i a_ij y_i = 0 for all j }.
    std::optional<Vec3> witness;
    // Canonical nonnegative nilpotent x_i = sqrt(y_i).
    std::optional<AlgebraElement> nilpotent;
    // Zero-based indices where the witness is positive.
    std::vector<std::size_t> support;

    bool unique() const { return kind == Kind::OnlyZero; }
};

// Decides whether x^2 = 0 has a nonzero real solution by enumerating the
// seven support patterns of y = x^2 >= 0 and solving each restricted system.
NilpotentClassification nilpotent_classify(const StructuralMatrix& m, double tol = 1e-9);

struct IdempotentPoint {
    enum class Method { ClosedForm, Newton };

    AlgebraElement x;
    double residual = 0.0;
    Method method = Method::ClosedForm;
};

struct IdempotentSet {
    enum class Completeness { CertifiedRank1, HeuristicMultistart };

    std::vector<IdempotentPoint> points;  // (0,0,0) first
    Completeness completeness = Completeness::CertifiedRank1;
    // Set when a rank-1 nonzero branch exists formally but escapes to infinity (S = 0).
    bool nonzero_diverges = false;

    std::size_t size() const { return points.size(); }
    bool contains(const AlgebraElement& x, double radius = 1e-6) const;
};

struct Rank1Factors {
    Vec3 u{};  // row factor
    Vec3 v{};  // column factor
};

// Factor m as u v^T; nullopt when rank > 1 beyond tol * max(1, ||A||_inf).
std::optional<Rank1Factors> rank1_factor(const StructuralMatrix& m, double tol = 1e-12);

// Closed-form idempotents of a_ij = u_i v_j: x = v Q with Q (1 - Q S) = 0,
// S = sum_i u_i v_i^2, giving {0, v / S} when |S| > tol.
IdempotentSet idempotents_rank1(const Vec3& u, const Vec3& v, double tol = 1e-12);
// As above after checking ||m - u v^T||_inf <= 1e-9 max(1, ||m||_inf);
// throws std::invalid_argument when the factorization does not match.
IdempotentSet idempotents_rank1(const StructuralMatrix& m, const Rank1Factors& f, double tol = 1e-12);

struct NewtonOptions {
    double box = 10.0;          // start grid covers [-box, box]^3
    std::size_t grid = 7;       // points per axis
    std::size_t max_iter = 100;
    double newton_tol = 1e-10;  // scaled residual for convergence
    double dedup = 1e-6;
    bool rank1_seed = true;     // add v/S when m factors as u v^T
    std::vector<AlgebraElement> extra_seeds;
};

// Damped Newton on V(x) - x from a deterministic multi-start grid.
IdempotentSet idempotents_numeric(const StructuralMatrix& m, const NewtonOptions& opts = {});

struct Trajectory {
    std::vector<AlgebraElement> points;  // points[0] = x0
    bool diverged = false;               // stopped once ||x||_inf > 1e12
};

Trajectory evolve(const StructuralMatrix& m, const AlgebraElement& x0, std::size_t steps);

}  // namespace cea
