#pragma once

#include "cea/algebra.hpp"
#include "cea/expr.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace cea {

// Family ids:
//
//   id      structure                               roles
//   F0      zero                                    -
//   F1      equal columns, ratio h(t)/h(s)          h(t), f(s), g(s)
//   F2      equal columns, step at t = a            phi(s), psi(s), a
//   F3      proportional rows, 1/Phi(s) scale       g1,g2,g3(t), psi(s), phi(s)
//   F4      only row 3, ratio g(t)/g(s)             g(t), phi(t), f(t)
//   F5      only row 3, step at t = a               phi(t), psi(t), a
//   CUSTOM  nine entries a11..a33 in s and t
//
// Single-variable roles (h, g, g1..g3) are evaluated at whichever time the
// closed form needs, e.g. h(s) and h(t) in F1, g1(s) inside Phi(s) in F3.
enum class FamilyKind { F0, F1, F2, F3, F4, F5, Custom };

std::string kind_name(FamilyKind k);
FamilyKind parse_kind(const std::string& name);

struct RoleSpec {
    std::string name;
    std::set<std::string> vars;
};

// Roles a family expects, in canonical order.
std::vector<RoleSpec> roles_for(FamilyKind kind);
bool needs_threshold(FamilyKind kind);

class FamilyConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Failed definedness guard: h(s) = 0, Phi(s) = 0, g(s) = 0, time pair
// outside 0 <= s <= t, or a parameter expression that cannot be evaluated.
class DefinednessError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

class CeaFamily {
public:
    // Throws FamilyConfigError on unknown/missing roles, variable violations,
    // or a missing/non-positive threshold; ParseError bubbles up from the
    // expression parser.
    static CeaFamily make(FamilyKind kind, const std::map<std::string, std::string>& params,
                          std::optional<double> threshold = std::nullopt);

    FamilyKind kind() const noexcept { return kind_; }
    const std::map<std::string, std::string>& param_text() const noexcept { return text_; }
    std::optional<double> threshold() const noexcept { return threshold_; }

    StructuralMatrix matrix_at(double s, double t) const;
    // u v^T factorization of matrix_at(s, t); nullopt for CUSTOM.
    std::optional<Rank1Factors> rank1_at(double s, double t) const;

    // Value of role `name` at time `x` (single-variable roles) or at (s, t).
    double role(const std::string& name, double x) const;
    double role2(const std::string& name, double s, double t) const;

    bool step_active(double t) const { return t < threshold_.value_or(0.0); }

private:
    FamilyKind kind_ = FamilyKind::F0;
    std::map<std::string, TimeExpr> exprs_;
    std::map<std::string, std::string> text_;
    std::optional<double> threshold_;
};

// ||M[s,t] - M[s,tau] M[tau,t]||_max
double ck_residual(const CeaFamily& family, double s, double tau, double t);

struct TripleSampler {
    std::size_t count = 100;
    std::uint64_t seed = 1;
    double t_min = 0.0;
    double t_max = 5.0;
};

struct Triple {
    double s = 0.0, tau = 0.0, t = 0.0;
};

// Deterministic triples s <= tau <= t drawn uniformly on [t_min, t_max].
std::vector<Triple> sample_triples(const TripleSampler& sampler);

struct CkReport {
    double max_residual = 0.0;
    double max_scaled = 0.0;  // residual / max(1, ||M[s,t]||, ||M[s,tau]|| ||M[tau,t]||)
    Triple worst;
    std::size_t evaluated = 0;
    std::size_t skipped = 0;
    bool pass = false;
    std::uint64_t seed = 0;
};

// Pass iff every evaluated triple has scaled residual <= tol and at least one
// triple was evaluated. Undefined triples are skipped and counted.
CkReport verify_ck(const CeaFamily& family, const TripleSampler& sampler, double tol, int threads = 0);
CkReport verify_ck_serial(const CeaFamily& family, const TripleSampler& sampler, double tol);

// Closed-form predicted membership. `margin` is the relative distance of the
// cell from the boundary of the predicted set (0 on measure-zero sets).
struct Prediction {
    std::optional<bool> value;  // nullopt: not covered
    double margin = 0.0;

    bool covered() const { return value.has_value(); }
};

// Relative equality tolerance inside predicted sets.
inline constexpr double kPredictEq = 1e-9;

Prediction predicted_baric(const CeaFamily& family, double s, double t);
Prediction predicted_nilpotent_unique(const CeaFamily& family, double s, double t);
std::vector<AlgebraElement> predicted_idempotents(const CeaFamily& family, double s, double t);

}  // namespace cea
