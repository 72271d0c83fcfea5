#include "cea/cli.hpp"

#include "cea/config.hpp"
#include "cea/diagram.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <ostream>
#include <optional>
#include <sstream>

namespace cea {

namespace {

struct Overrides {
    std::string config;
    std::optional<std::string> out;
    std::optional<double> tol;
    std::optional<std::uint64_t> seed;
    std::optional<int> threads;
    bool strict = false;
    std::optional<std::string> family;
    std::vector<std::string> params;
    std::optional<double> a;

    std::optional<std::size_t> samples;
    std::optional<double> t_min, t_max;

    std::optional<std::string> props;
    std::optional<std::string> json_out;
    std::optional<double> band;

    std::optional<double> s, t;
    std::optional<std::string> which;
    std::optional<std::string> x0;
    std::optional<std::size_t> steps;
};

void add_common(CLI::App* cmd, Overrides& o) {
    cmd->add_option("--config", o.config, "JSON run config");
    cmd->add_option("--out", o.out, "Output path");
    cmd->add_option("--tol", o.tol, "Tolerance");
    cmd->add_option("--seed", o.seed, "Random seed");
    cmd->add_option("--threads", o.threads, "Worker threads (0 = OpenMP default)");
    cmd->add_flag("--strict", o.strict, "Treat prediction mismatches as failures");
    cmd->add_option("--family", o.family, "Family id (F0..F5, CUSTOM); overrides config");
    cmd->add_option("--param", o.params, "Role expression ROLE=EXPR; repeatable");
    cmd->add_option("--a", o.a, "Step threshold a for F2/F5");
}

Vec3 parse_triple(const std::string& text) {
    std::stringstream ss(text);
    std::string item;
    std::vector<double> vals;
    while (std::getline(ss, item, ',')) vals.push_back(TimeExpr::parse(item).eval(0.0, 0.0));
    if (vals.size() != 3) throw ConfigError("expected three comma-separated values, got `" + text + "`");
    return {vals[0], vals[1], vals[2]};
}

RunConfig resolve(const Overrides& o) {
    RunConfig cfg = o.config.empty() ? RunConfig{} : RunConfig::load(o.config);
    if (o.family) cfg.family = *o.family;
    for (const auto& kv : o.params) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos || eq == 0) throw ConfigError("--param expects ROLE=EXPR, got `" + kv + "`");
        cfg.params[kv.substr(0, eq)] = kv.substr(eq + 1);
    }
    if (o.a) cfg.a = *o.a;
    if (o.out) cfg.out = *o.out;
    if (o.tol) cfg.tol = *o.tol;
    if (o.seed) cfg.sampler.seed = *o.seed;
    if (o.threads) cfg.threads = *o.threads;
    if (o.strict) cfg.strict = true;
    if (o.samples) cfg.sampler.count = *o.samples;
    if (o.t_min) cfg.sampler.t_min = *o.t_min;
    if (o.t_max) cfg.sampler.t_max = *o.t_max;
    if (o.props) cfg.props = PropertySelection::parse(*o.props);
    if (o.json_out) cfg.json_out = *o.json_out;
    if (o.band) cfg.band = *o.band;
    if (o.s) cfg.s = *o.s;
    if (o.t) cfg.t = *o.t;
    if (o.which) cfg.which = *o.which;
    if (o.x0) cfg.x0 = parse_triple(*o.x0);
    if (o.steps) cfg.steps = *o.steps;
    if (!(cfg.tol > 0.0)) throw ConfigError("tolerance must be > 0");
    if (cfg.threads < 0) throw ConfigError("--threads must be >= 0");
    return cfg;
}

std::string fmt_point(const AlgebraElement& x) {
    return "(" + format_real(x[0]) + ", " + format_real(x[1]) + ", " + format_real(x[2]) + ")";
}

void print_matrix(std::ostream& out, const StructuralMatrix& m) {
    out << "matrix\n";
    for (const auto& row : m.a) {
        out << "  " << format_real(row[0]) << ' ' << format_real(row[1]) << ' ' << format_real(row[2]) << '\n';
    }
}

void write_text(const std::string& path, const std::string& data) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::ios_base::failure("cannot open `" + path + "` for writing");
    f << data;
    if (!f) throw std::ios_base::failure("write to `" + path + "` failed");
}

std::pair<double, double> require_time_pair(const RunConfig& cfg) {
    if (!cfg.s || !cfg.t) throw ConfigError("time pair required: pass --s and --t (or set `s`, `t` in the config)");
    return {*cfg.s, *cfg.t};
}

IdempotentSet element_idempotents(const CeaFamily& fam, const StructuralMatrix& m, double s, double t,
                                  const NewtonOptions& newton) {
    if (auto f = fam.rank1_at(s, t)) return idempotents_rank1(m, *f);
    return idempotents_numeric(m, newton);
}

const char* method_name(IdempotentPoint::Method m) {
    return m == IdempotentPoint::Method::ClosedForm ? "closed-form" : "newton";
}

const char* completeness_name(IdempotentSet::Completeness c) {
    return c == IdempotentSet::Completeness::CertifiedRank1 ? "certified-rank1" : "heuristic-multistart";
}

int cmd_ck_verify(const RunConfig& cfg, std::ostream& out) {
    const CeaFamily fam = cfg.build_family();
    const CkReport rep = verify_ck(fam, cfg.sampler, cfg.tol, cfg.threads);
    std::ostringstream os;
    os << "family " << cfg.family << '\n';
    os << "seed " << rep.seed << '\n';
    os << "samples " << cfg.sampler.count << " evaluated " << rep.evaluated << " skipped " << rep.skipped << '\n';
    os << "max_residual " << format_real(rep.max_residual) << '\n';
    os << "max_scaled_residual " << format_real(rep.max_scaled) << '\n';
    os << "worst_triple s=" << format_real(rep.worst.s) << " tau=" << format_real(rep.worst.tau)
       << " t=" << format_real(rep.worst.t) << '\n';
    os << "tol " << format_real(cfg.tol) << '\n';
    os << "result " << (rep.pass ? "PASS" : "FAIL") << '\n';
    out << os.str();
    if (!cfg.out.empty()) {
        nlohmann::ordered_json j;
        j["family"] = cfg.family;
        j["seed"] = rep.seed;
        j["samples"] = cfg.sampler.count;
        j["evaluated"] = rep.evaluated;
        j["skipped"] = rep.skipped;
        j["max_residual"] = rep.max_residual;
        j["max_scaled_residual"] = rep.max_scaled;
        j["worst_triple"] = {rep.worst.s, rep.worst.tau, rep.worst.t};
        j["tol"] = cfg.tol;
        j["pass"] = rep.pass;
        write_text(cfg.out, j.dump(2) + "\n");
    }
    return rep.pass ? kExitOk : kExitFail;
}

int cmd_diagram(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    const CeaFamily fam = cfg.build_family();
    DiagramOptions opts;
    opts.props = cfg.props;
    opts.tol = cfg.tol;
    opts.band = cfg.band;
    opts.newton = cfg.newton;
    opts.threads = cfg.threads;
    PropertyDiagram d = sample_diagram(fam, cfg.grid, opts);
    d.seed = cfg.sampler.seed;
    if (cfg.out.empty()) {
        out << to_csv(d);
    } else {
        export_csv(d, cfg.out);
    }
    if (!cfg.json_out.empty()) export_json(d, cfg.json_out);
    std::size_t undefined = 0;
    for (const auto& c : d.cells) undefined += c.defined ? 0 : 1;
    const std::size_t mismatches = d.baric_mismatches() + d.nilpotent_mismatches();
    std::ostream& info = cfg.out.empty() ? err : out;
    info << "family " << cfg.family << " cells " << d.cells.size() << " undefined " << undefined
         << " baric_mismatches " << d.baric_mismatches() << " nilpotent_mismatches " << d.nilpotent_mismatches()
         << " seed " << cfg.sampler.seed << '\n';
    return (cfg.strict && mismatches > 0) ? kExitFail : kExitOk;
}

int cmd_points(const RunConfig& cfg, std::ostream& out) {
    if (cfg.which != "nilpotents" && cfg.which != "idempotents" && cfg.which != "all") {
        throw ConfigError("--which must be nilpotents, idempotents, or all");
    }
    const CeaFamily fam = cfg.build_family();
    const auto [s, t] = require_time_pair(cfg);
    const StructuralMatrix m = fam.matrix_at(s, t);
    out << "family " << cfg.family << " at (s,t) = (" << format_real(s) << ", " << format_real(t) << ")\n";
    print_matrix(out, m);
    const bool custom = fam.kind() == FamilyKind::Custom;
    if (cfg.which == "nilpotents" || cfg.which == "all") {
        const auto nc = nilpotent_classify(m, cfg.tol);
        out << "nilpotents: " << (nc.unique() ? "only-zero" : "positive-dimensional") << '\n';
        if (nc.witness) {
            out << "  witness y = (" << format_real((*nc.witness)[0]) << ", " << format_real((*nc.witness)[1]) << ", "
                << format_real((*nc.witness)[2]) << ")\n";
            out << "  support {";
            for (std::size_t i = 0; i < nc.support.size(); ++i) out << (i ? "," : "") << nc.support[i] + 1;
            out << "}\n";
            out << "  nilpotent x = " << fmt_point(*nc.nilpotent) << " residual "
                << format_real(norm_inf(square(m, *nc.nilpotent))) << '\n';
        }
        if (!custom) {
            const Prediction p = predicted_nilpotent_unique(fam, s, t);
            out << "  predicted unique: " << (p.value ? (*p.value ? "true" : "false") : "not-covered") << '\n';
        }
    }
    if (cfg.which == "idempotents" || cfg.which == "all") {
        const IdempotentSet set = element_idempotents(fam, m, s, t, cfg.newton);
        out << "idempotents: " << set.size() << " (" << completeness_name(set.completeness) << ")\n";
        for (std::size_t i = 0; i < set.points.size(); ++i) {
            const auto& p = set.points[i];
            out << "  " << i << ": " << fmt_point(p.x) << " residual " << format_real(p.residual) << " method "
                << method_name(p.method) << '\n';
        }
        if (set.nonzero_diverges) out << "  note: nonzero branch diverges (S = 0)\n";
        if (!custom) {
            out << "  predicted:";
            for (const auto& x : predicted_idempotents(fam, s, t)) out << ' ' << fmt_point(x);
            out << '\n';
        }
    }
    return kExitOk;
}

int cmd_dynamics(const RunConfig& cfg, std::ostream& out) {
    const CeaFamily fam = cfg.build_family();
    const auto [s, t] = require_time_pair(cfg);
    if (!cfg.x0) throw ConfigError("initial point required: pass --x0 X1,X2,X3");
    const StructuralMatrix m = fam.matrix_at(s, t);
    const IdempotentSet set = element_idempotents(fam, m, s, t, cfg.newton);
    const Trajectory tr = evolve(m, AlgebraElement{*cfg.x0}, cfg.steps);

    std::string csv = "step,x1,x2,x3,residual,idempotent\n";
    std::optional<std::size_t> first_hit;
    std::optional<std::size_t> hit_index;
    for (std::size_t k = 0; k < tr.points.size(); ++k) {
        const auto& x = tr.points[k];
        std::optional<std::size_t> near;
        for (std::size_t i = 0; i < set.points.size(); ++i) {
            if (distance_inf(set.points[i].x, x) <= 1e-6) {
                near = i;
                break;
            }
        }
        if (near && !first_hit) {
            first_hit = k;
            hit_index = near;
        }
        csv += std::to_string(k) + ',' + format_real(x[0]) + ',' + format_real(x[1]) + ',' + format_real(x[2]) + ',' +
               format_real(idempotent_residual(m, x)) + ',' + (near ? std::to_string(*near) : std::string()) + '\n';
    }
    std::ostringstream summary;
    summary << "family " << cfg.family << " at (s,t) = (" << format_real(s) << ", " << format_real(t) << ") steps "
            << tr.points.size() - 1 << '\n';
    if (first_hit) {
        summary << "converged to idempotent " << *hit_index << ' ' << fmt_point(set.points[*hit_index].x)
                << " at step " << *first_hit << '\n';
    } else {
        summary << "no listed idempotent reached within 1e-6\n";
    }
    if (tr.diverged) summary << "diverged: |x| exceeded 1e12 at step " << tr.points.size() - 1 << '\n';
    if (cfg.out.empty()) {
        out << csv;
        std::string line;
        std::istringstream in(summary.str());
        while (std::getline(in, line)) out << "# " << line << '\n';
    } else {
        write_text(cfg.out, csv);
        out << summary.str();
    }
    return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Chains of three-dimensional evolution algebras: CK verification and property diagrams", "cea"};
    app.require_subcommand(1);
    Overrides o;

    auto* ck = app.add_subcommand("ck-verify", "Check M[s,t] = M[s,tau] M[tau,t] on random triples");
    add_common(ck, o);
    ck->add_option("--samples", o.samples, "Number of random triples");
    ck->add_option("--t-min", o.t_min, "Lower end of the sampling window");
    ck->add_option("--t-max", o.t_max, "Upper end of the sampling window");

    auto* dg = app.add_subcommand("diagram", "Classify grid cells over 0 <= s <= t and export CSV/JSON");
    add_common(dg, o);
    dg->add_option("--props", o.props, "Comma list of baric,nilpotent,idempotent");
    dg->add_option("--json", o.json_out, "Also write a JSON diagram here");
    dg->add_option("--band", o.band, "Equality band width for predicted sets");

    auto* pt = app.add_subcommand("points", "List nilpotent/idempotent elements at one time pair");
    add_common(pt, o);
    pt->add_option("--s", o.s, "Time s");
    pt->add_option("--t", o.t, "Time t");
    pt->add_option("--which", o.which, "nilpotents | idempotents | all");

    auto* dy = app.add_subcommand("dynamics", "Iterate the evolution operator x -> x^2");
    add_common(dy, o);
    dy->add_option("--s", o.s, "Time s");
    dy->add_option("--t", o.t, "Time t");
    dy->add_option("--x0", o.x0, "Initial point X1,X2,X3");
    dy->add_option("--steps", o.steps, "Number of iterations");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    }

    try {
        const RunConfig cfg = resolve(o);
        if (ck->parsed()) return cmd_ck_verify(cfg, out);
        if (dg->parsed()) return cmd_diagram(cfg, out, err);
        if (pt->parsed()) return cmd_points(cfg, out);
        if (dy->parsed()) return cmd_dynamics(cfg, out);
    } catch (const ParseError& e) {
        err << "error: expression: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::ios_base::failure& e) {
        err << "error: I/O: " << e.what() << '\n';
        return kExitIo;
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::domain_error& e) {
        err << "error: domain: " << e.what() << '\n';
        return kExitUsage;
    }
    return kExitUsage;
}

}  // namespace cea
