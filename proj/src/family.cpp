#include "cea/family.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

namespace cea {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double gap(double x, double y) { return std::fabs(x - y) / std::max({1.0, std::fabs(x), std::fabs(y)}); }
bool approx_eq(double x, double y) { return gap(x, y) <= kPredictEq; }

const std::map<std::string, std::string>& role_aliases() {
    static const std::map<std::string, std::string> aliases{
        {"φ", "phi"}, {"ψ", "psi"}, {"varphi", "phi"}, {"g₁", "g1"}, {"g₂", "g2"}, {"g₃", "g3"}};
    return aliases;
}

std::string describe_roles(FamilyKind kind) {
    std::string out;
    for (const auto& r : roles_for(kind)) {
        if (!out.empty()) out += ", ";
        out += r.name;
    }
    if (needs_threshold(kind)) out += out.empty() ? "a" : ", a";
    return out.empty() ? "(none)" : out;
}

}  // namespace

std::string kind_name(FamilyKind k) {
    switch (k) {
        case FamilyKind::F0: return "F0";
        case FamilyKind::F1: return "F1";
        case FamilyKind::F2: return "F2";
        case FamilyKind::F3: return "F3";
        case FamilyKind::F4: return "F4";
        case FamilyKind::F5: return "F5";
        case FamilyKind::Custom: return "CUSTOM";
    }
    return "?";
}

FamilyKind parse_kind(const std::string& name) {
    for (auto k : {FamilyKind::F0, FamilyKind::F1, FamilyKind::F2, FamilyKind::F3, FamilyKind::F4, FamilyKind::F5,
                   FamilyKind::Custom}) {
        if (kind_name(k) == name) return k;
    }
    if (name == "custom") return FamilyKind::Custom;
    throw FamilyConfigError("unknown family `" + name + "` (expected F0..F5 or CUSTOM)");
}

std::vector<RoleSpec> roles_for(FamilyKind kind) {
    switch (kind) {
        case FamilyKind::F0: return {};
        case FamilyKind::F1: return {{"h", {"t"}}, {"f", {"s"}}, {"g", {"s"}}};
        case FamilyKind::F2: return {{"phi", {"s"}}, {"psi", {"s"}}};
        case FamilyKind::F3:
            return {{"g1", {"t"}}, {"g2", {"t"}}, {"g3", {"t"}}, {"psi", {"s"}}, {"phi", {"s"}}};
        case FamilyKind::F4: return {{"g", {"t"}}, {"phi", {"t"}}, {"f", {"t"}}};
        case FamilyKind::F5: return {{"phi", {"t"}}, {"psi", {"t"}}};
        case FamilyKind::Custom: {
            std::vector<RoleSpec> r;
            for (int i = 1; i <= 3; ++i)
                for (int j = 1; j <= 3; ++j) r.push_back({"a" + std::to_string(i) + std::to_string(j), {"s", "t"}});
            return r;
        }
    }
    return {};
}

bool needs_threshold(FamilyKind kind) { return kind == FamilyKind::F2 || kind == FamilyKind::F5; }

CeaFamily CeaFamily::make(FamilyKind kind, const std::map<std::string, std::string>& params,
                          std::optional<double> threshold) {
    CeaFamily fam;
    fam.kind_ = kind;
    const auto roles = roles_for(kind);
    std::map<std::string, std::string> given;
    for (const auto& [key, value] : params) {
        auto alias = role_aliases().find(key);
        given[alias == role_aliases().end() ? key : alias->second] = value;
    }
    for (const auto& [key, value] : given) {
        const bool known = std::any_of(roles.begin(), roles.end(), [&](const RoleSpec& r) { return r.name == key; });
        if (!known) {
            throw FamilyConfigError("unknown role `" + key + "` for family " + kind_name(kind) +
                                    "; expected roles: " + describe_roles(kind));
        }
    }
    for (const auto& r : roles) {
        auto it = given.find(r.name);
        if (it == given.end()) {
            // CUSTOM entries default to zero.
            if (kind == FamilyKind::Custom) {
                fam.exprs_[r.name] = TimeExpr::constant(0.0);
                fam.text_[r.name] = "0";
                continue;
            }
            throw FamilyConfigError("missing role `" + r.name + "` for family " + kind_name(kind) +
                                    "; required roles: " + describe_roles(kind));
        }
        TimeExpr e = TimeExpr::parse(it->second);
        const auto bad = restrict_variables(e, r.vars);
        if (!bad.empty()) {
            std::string vars;
            for (const auto& v : bad) vars += (vars.empty() ? "" : ",") + v;
            std::string allowed;
            for (const auto& v : r.vars) allowed += (allowed.empty() ? "" : ",") + v;
            throw FamilyConfigError("role `" + r.name + "` = `" + it->second + "` uses {" + vars +
                                    "} but may only depend on {" + allowed + "}");
        }
        fam.exprs_[r.name] = std::move(e);
        fam.text_[r.name] = it->second;
    }
    if (needs_threshold(kind)) {
        if (!threshold) throw FamilyConfigError("family " + kind_name(kind) + " requires threshold `a`");
        if (!(*threshold > 0.0) || !std::isfinite(*threshold)) {
            throw FamilyConfigError("threshold `a` must be a finite value > 0");
        }
        fam.threshold_ = threshold;
    }
    return fam;
}

double CeaFamily::role(const std::string& name, double x) const {
    try {
        return exprs_.at(name).eval(x, x);
    } catch (const EvalError& e) {
        std::ostringstream os;
        os << name << " undefined at " << format_real(x) << ": " << e.what();
        throw DefinednessError(os.str());
    }
}

double CeaFamily::role2(const std::string& name, double s, double t) const {
    try {
        return exprs_.at(name).eval(s, t);
    } catch (const EvalError& e) {
        std::ostringstream os;
        os << name << " undefined at (s,t)=(" << format_real(s) << "," << format_real(t) << "): " << e.what();
        throw DefinednessError(os.str());
    }
}

namespace {

// `what` names the guarded quantity, e.g. "Phi(s)"; all guards are taken at s.
void guard_nonzero(double value, const char* what, double at) {
    if (value == 0.0) throw DefinednessError(std::string(what) + "=0 at s=" + format_real(at));
}

}  // namespace

std::optional<Rank1Factors> CeaFamily::rank1_at(double s, double t) const {
    if (!(s >= 0.0) || !(s <= t)) {
        throw DefinednessError("time pair (s,t)=(" + format_real(s) + "," + format_real(t) + ") outside 0<=s<=t");
    }
    Rank1Factors f;
    switch (kind_) {
        case FamilyKind::F0: return f;
        case FamilyKind::F1: {
            const double hs = role("h", s);
            guard_nonzero(hs, "h(s)", s);
            const double ht = role("h", t);
            const double fs = role("f", s);
            const double gs = role("g", s);
            f.u = {0.5 * ht * (1.0 / hs + fs), 0.5 * ht * (1.0 / hs - gs), 0.5 * ht * (gs - fs)};
            f.v = {1.0, 1.0, 1.0};
            break;
        }
        case FamilyKind::F2: {
            if (!step_active(t)) return f;
            const double phi = role("phi", s);
            const double psi = role("psi", s);
            f.u = {0.5 * (1.0 + psi), 0.5 * (1.0 - phi), 0.5 * (phi - psi)};
            f.v = {1.0, 1.0, 1.0};
            break;
        }
        case FamilyKind::F3: {
            const double psi = role("psi", s);
            const double phi = role("phi", s);
            const double Phi = role("g1", s) + psi * role("g2", s) + phi * role("g3", s);
            guard_nonzero(Phi, "Phi(s)", s);
            f.u = {1.0 / Phi, psi / Phi, phi / Phi};
            f.v = {role("g1", t), role("g2", t), role("g3", t)};
            break;
        }
        case FamilyKind::F4: {
            const double gs = role("g", s);
            guard_nonzero(gs, "g(s)", s);
            f.u = {0.0, 0.0, 1.0};
            f.v = {role("phi", t) / gs, role("f", t) / gs, role("g", t) / gs};
            break;
        }
        case FamilyKind::F5: {
            if (!step_active(t)) return f;
            f.u = {0.0, 0.0, 1.0};
            f.v = {role("phi", t), role("psi", t), 1.0};
            break;
        }
        case FamilyKind::Custom: return std::nullopt;
    }
    for (std::size_t i = 0; i < 3; ++i) {
        if (!std::isfinite(f.u[i]) || !std::isfinite(f.v[i])) {
            throw DefinednessError("non-finite structural constant at (s,t)=(" + format_real(s) + "," +
                                   format_real(t) + ")");
        }
    }
    return f;
}

StructuralMatrix CeaFamily::matrix_at(double s, double t) const {
    if (!(s >= 0.0) || !(s <= t)) {
        throw DefinednessError("time pair (s,t)=(" + format_real(s) + "," + format_real(t) + ") outside 0<=s<=t");
    }
    StructuralMatrix m;
    switch (kind_) {
        case FamilyKind::F0: break;
        case FamilyKind::F1: {
            const double hs = role("h", s);
            guard_nonzero(hs, "h(s)", s);
            const double ht = role("h", t);
            const double fs = role("f", s);
            const double gs = role("g", s);
            const double rows[3] = {ht * (1.0 / hs + fs), ht * (1.0 / hs - gs), ht * (gs - fs)};
            for (std::size_t i = 0; i < 3; ++i)
                for (std::size_t j = 0; j < 3; ++j) m.a[i][j] = 0.5 * rows[i];
            break;
        }
        case FamilyKind::F2: {
            if (!step_active(t)) break;
            const double phi = role("phi", s);
            const double psi = role("psi", s);
            const double rows[3] = {1.0 + psi, 1.0 - phi, phi - psi};
            for (std::size_t i = 0; i < 3; ++i)
                for (std::size_t j = 0; j < 3; ++j) m.a[i][j] = 0.5 * rows[i];
            break;
        }
        case FamilyKind::F3: {
            const double psi = role("psi", s);
            const double phi = role("phi", s);
            const double Phi = role("g1", s) + psi * role("g2", s) + phi * role("g3", s);
            guard_nonzero(Phi, "Phi(s)", s);
            const double r[3] = {1.0, psi, phi};
            const double g[3] = {role("g1", t), role("g2", t), role("g3", t)};
            for (std::size_t i = 0; i < 3; ++i)
                for (std::size_t j = 0; j < 3; ++j) m.a[i][j] = (r[i] * g[j]) / Phi;
            break;
        }
        case FamilyKind::F4: {
            const double gs = role("g", s);
            guard_nonzero(gs, "g(s)", s);
            m.a[2] = {role("phi", t) / gs, role("f", t) / gs, role("g", t) / gs};
            break;
        }
        case FamilyKind::F5: {
            if (!step_active(t)) break;
            m.a[2] = {role("phi", t), role("psi", t), 1.0};
            break;
        }
        case FamilyKind::Custom: {
            for (std::size_t i = 0; i < 3; ++i)
                for (std::size_t j = 0; j < 3; ++j)
                    m.a[i][j] = role2("a" + std::to_string(i + 1) + std::to_string(j + 1), s, t);
            break;
        }
    }
    if (!m.all_finite()) {
        throw DefinednessError("non-finite structural constant at (s,t)=(" + format_real(s) + "," +
                               format_real(t) + ")");
    }
    m.provenance = kind_name(kind_);
    m.s = s;
    m.t = t;
    return m;
}

double ck_residual(const CeaFamily& family, double s, double tau, double t) {
    const StructuralMatrix whole = family.matrix_at(s, t);
    const StructuralMatrix left = family.matrix_at(s, tau);
    const StructuralMatrix right = family.matrix_at(tau, t);
    return max_abs_diff(whole, matmul(left, right));
}

std::vector<Triple> sample_triples(const TripleSampler& sampler) {
    std::mt19937_64 rng(sampler.seed);
    std::uniform_real_distribution<double> uni(sampler.t_min, sampler.t_max);
    std::vector<Triple> out(sampler.count);
    for (auto& tr : out) {
        double v[3] = {uni(rng), uni(rng), uni(rng)};
        std::sort(v, v + 3);
        tr = {v[0], v[1], v[2]};
    }
    return out;
}

namespace {

struct TripleEval {
    bool defined = false;
    double residual = 0.0;
    double scaled = 0.0;
};

TripleEval eval_triple(const CeaFamily& family, const Triple& tr) {
    TripleEval e;
    try {
        const StructuralMatrix whole = family.matrix_at(tr.s, tr.t);
        const StructuralMatrix left = family.matrix_at(tr.s, tr.tau);
        const StructuralMatrix right = family.matrix_at(tr.tau, tr.t);
        e.residual = max_abs_diff(whole, matmul(left, right));
        const double scale = std::max({1.0, whole.norm_inf(), left.norm_inf() * right.norm_inf()});
        e.scaled = e.residual / scale;
        e.defined = true;
    } catch (const std::domain_error&) {
        e.defined = false;
    }
    return e;
}

CkReport reduce(const std::vector<Triple>& triples, const std::vector<TripleEval>& evals, double tol,
                std::uint64_t seed) {
    CkReport rep;
    rep.seed = seed;
    bool first = true;
    for (std::size_t i = 0; i < triples.size(); ++i) {
        const auto& e = evals[i];
        if (!e.defined) {
            ++rep.skipped;
            continue;
        }
        ++rep.evaluated;
        rep.max_residual = std::max(rep.max_residual, e.residual);
        if (first || e.scaled > rep.max_scaled) {
            rep.max_scaled = e.scaled;
            rep.worst = triples[i];
            first = false;
        }
    }
    rep.pass = rep.evaluated > 0 && rep.max_scaled <= tol;
    return rep;
}

}  // namespace

CkReport verify_ck_serial(const CeaFamily& family, const TripleSampler& sampler, double tol) {
    const auto triples = sample_triples(sampler);
    std::vector<TripleEval> evals(triples.size());
    for (std::size_t i = 0; i < triples.size(); ++i) evals[i] = eval_triple(family, triples[i]);
    return reduce(triples, evals, tol, sampler.seed);
}

CkReport verify_ck(const CeaFamily& family, const TripleSampler& sampler, double tol, int threads) {
    const auto triples = sample_triples(sampler);
    std::vector<TripleEval> evals(triples.size());
    const int nthreads = threads > 0 ? threads : omp_get_max_threads();
    const auto n = static_cast<std::ptrdiff_t>(triples.size());
#pragma omp parallel for schedule(static) num_threads(nthreads)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        evals[static_cast<std::size_t>(i)] = eval_triple(family, triples[static_cast<std::size_t>(i)]);
    }
    return reduce(triples, evals, tol, sampler.seed);
}

Prediction predicted_baric(const CeaFamily& family, double s, double t) {
    Prediction p;
    switch (family.kind()) {
        case FamilyKind::F0:
        case FamilyKind::F3:
            p.value = false;
            p.margin = kInf;
            return p;
        case FamilyKind::F1: {
            const double hs = family.role("h", s);
            guard_nonzero(hs, "h(s)", s);
            const double inv = 1.0 / hs;
            const double fs = family.role("f", s);
            const double gs = family.role("g", s);
            const double ht = family.role("h", t);
            // g = f = 1/h, g = f = -1/h, or g = -f = 1/h; the weight h(t)/h(s) must not vanish.
            const double dist = std::min({std::max(gap(gs, inv), gap(fs, inv)), std::max(gap(gs, -inv), gap(fs, -inv)),
                                          std::max(gap(gs, inv), gap(fs, -inv))});
            p.value = dist <= kPredictEq && !approx_eq(ht, 0.0);
            p.margin = std::min(dist, gap(ht, 0.0));
            return p;
        }
        case FamilyKind::F2: {
            const double phi = family.role("phi", s);
            const double psi = family.role("psi", s);
            const double dist =
                std::min({std::max(gap(phi, 1.0), gap(psi, 1.0)), std::max(gap(phi, -1.0), gap(psi, -1.0)),
                          std::max(gap(phi, 1.0), gap(psi, -1.0))});
            p.value = dist <= kPredictEq && family.step_active(t);
            p.margin = std::min(dist, gap(t, *family.threshold()));
            return p;
        }
        case FamilyKind::F4: {
            guard_nonzero(family.role("g", s), "g(s)", s);
            const double gt = family.role("g", t);
            p.value = !approx_eq(gt, 0.0);
            p.margin = gap(gt, 0.0);
            return p;
        }
        case FamilyKind::F5:
            p.value = family.step_active(t);
            p.margin = gap(t, *family.threshold());
            return p;
        case FamilyKind::Custom: break;
    }
    p.margin = kInf;
    return p;
}

Prediction predicted_nilpotent_unique(const CeaFamily& family, double s, double t) {
    Prediction p;
    switch (family.kind()) {
        case FamilyKind::F0:
        case FamilyKind::F4:
        case FamilyKind::F5:
            p.value = false;
            p.margin = kInf;
            return p;
        case FamilyKind::F1: {
            const double hs = family.role("h", s);
            guard_nonzero(hs, "h(s)", s);
            // The closed-form set assumes h(s) > 0; the all-negative column
            // case that appears for h(s) < 0 is not part of it.
            if (hs < 0.0) {
                p.margin = kInf;
                return p;
            }
            const double inv = 1.0 / hs;
            const double fs = family.role("f", s);
            const double gs = family.role("g", s);
            const double ht = family.role("h", t);
            p.value = !approx_eq(ht, 0.0) && fs < gs && gs < inv && -fs < inv;
            p.margin = std::min({gap(ht, 0.0), gap(fs, gs), gap(gs, inv), gap(-fs, inv)});
            return p;
        }
        case FamilyKind::F2: {
            const double phi = family.role("phi", s);
            const double psi = family.role("psi", s);
            const double a = *family.threshold();
            p.value = -1.0 < psi && psi < phi && phi < 1.0 && t < a;
            p.margin = std::min({gap(-1.0, psi), gap(psi, phi), gap(phi, 1.0), gap(t, a)});
            return p;
        }
        case FamilyKind::F3:
        case FamilyKind::Custom: break;
    }
    p.margin = kInf;
    return p;
}

std::vector<AlgebraElement> predicted_idempotents(const CeaFamily& family, double s, double t) {
    std::vector<AlgebraElement> out{AlgebraElement{}};
    switch (family.kind()) {
        case FamilyKind::F0:
        case FamilyKind::Custom: break;
        case FamilyKind::F1: {
            const double hs = family.role("h", s);
            guard_nonzero(hs, "h(s)", s);
            const double ht = family.role("h", t);
            if (ht == 0.0) break;
            const double r = hs / ht;
            out.push_back({{r, r, r}});
            break;
        }
        case FamilyKind::F2:
            if (family.step_active(t)) out.push_back({{1.0, 1.0, 1.0}});
            break;
        case FamilyKind::F3: {
            const double psi = family.role("psi", s);
            const double phi = family.role("phi", s);
            const double Phi = family.role("g1", s) + psi * family.role("g2", s) + phi * family.role("g3", s);
            guard_nonzero(Phi, "Phi(s)", s);
            const double g1 = family.role("g1", t), g2 = family.role("g2", t), g3 = family.role("g3", t);
            // F(s,t) = (g1(t)^2 + psi(s) g2(t)^2 + phi(s) g3(t)^2) / Phi(s)
            const double F = (g1 * g1 + psi * g2 * g2 + phi * g3 * g3) / Phi;
            if (approx_eq(F, 0.0)) break;
            out.push_back({{g1 / F, g2 / F, g3 / F}});
            break;
        }
        case FamilyKind::F4: {
            const double gs = family.role("g", s);
            guard_nonzero(gs, "g(s)", s);
            const double gt = family.role("g", t);
            if (gt == 0.0) break;
            const double k = gs / (gt * gt);
            out.push_back({{k * family.role("phi", t), k * family.role("f", t), gs / gt}});
            break;
        }
        case FamilyKind::F5:
            if (family.step_active(t)) out.push_back({{family.role("phi", t), family.role("psi", t), 1.0}});
            break;
    }
    return out;
}

}  // namespace cea
