#include "cea/diagram.hpp"

#include <json.hpp>
#include <omp.h>

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace cea {

void GridSpec::validate() const {
    auto finite = [](double x) { return std::isfinite(x); };
    if (!finite(s_min) || !finite(s_max) || !finite(t_min) || !finite(t_max)) {
        throw std::invalid_argument("grid bounds must be finite");
    }
    if (n_s < 1 || n_t < 1) throw std::invalid_argument("grid needs at least one node per axis");
    if (!(0.0 <= s_min && s_min <= s_max && s_max <= t_max && t_min <= t_max)) {
        throw std::invalid_argument("grid requires 0 <= s_min <= s_max <= t_max and t_min <= t_max");
    }
}

namespace {

double node(double lo, double hi, std::size_t n, std::size_t i) {
    if (n == 1) return lo;
    if (i + 1 == n) return hi;
    return lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
}

}  // namespace

double GridSpec::s_node(std::size_t i) const { return node(s_min, s_max, n_s, i); }
double GridSpec::t_node(std::size_t j) const { return node(t_min, t_max, n_t, j); }

std::size_t GridSpec::admissible_count() const {
    std::size_t n = 0;
    for (std::size_t i = 0; i < n_s; ++i)
        for (std::size_t j = 0; j < n_t; ++j)
            if (t_node(j) >= s_node(i)) ++n;
    return n;
}

PropertySelection PropertySelection::parse(const std::string& csv) {
    PropertySelection sel{false, false, false};
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item == "baric") {
            sel.baric = true;
        } else if (item == "nilpotent" || item == "nilpotents") {
            sel.nilpotent = true;
        } else if (item == "idempotent" || item == "idempotents") {
            sel.idempotent = true;
        } else if (item == "all") {
            sel = PropertySelection{};
        } else if (!item.empty()) {
            throw std::invalid_argument("unknown property `" + item + "` (expected baric, nilpotent, idempotent)");
        }
    }
    return sel;
}

std::string PropertySelection::to_string() const {
    std::string out;
    auto add = [&](bool on, const char* name) {
        if (!on) return;
        if (!out.empty()) out += ',';
        out += name;
    };
    add(baric, "baric");
    add(nilpotent, "nilpotent");
    add(idempotent, "idempotent");
    return out;
}

std::size_t PropertyDiagram::baric_mismatches() const {
    std::size_t n = 0;
    for (const auto& c : cells)
        if (c.baric_match && !*c.baric_match && !c.baric_in_band) ++n;
    return n;
}

std::size_t PropertyDiagram::nilpotent_mismatches() const {
    std::size_t n = 0;
    for (const auto& c : cells)
        if (c.nilpotent_match && !*c.nilpotent_match && !c.nilpotent_in_band) ++n;
    return n;
}

CellRecord classify_cell(const CeaFamily& family, double s, double t, const DiagramOptions& opts) {
    CellRecord cell;
    cell.s = s;
    cell.t = t;
    StructuralMatrix m;
    try {
        m = family.matrix_at(s, t);
    } catch (const std::domain_error& e) {
        cell.defined = false;
        cell.error = e.what();
        return cell;
    }
    const bool custom = family.kind() == FamilyKind::Custom;
    try {
        if (opts.props.baric) {
            const auto b = baric_check(m, opts.tol);
            cell.baric = b.has_value();
            if (b) {
                cell.baric_column = b->column + 1;
                cell.baric_weight = b->weight;
                for (auto q : b->qualifying) cell.baric_qualifying.push_back(q + 1);
            }
            if (!custom) {
                const Prediction p = predicted_baric(family, s, t);
                cell.predicted_baric = p.value;
                cell.baric_margin = p.margin;
                cell.baric_in_band = p.margin < opts.band;
                if (p.value) cell.baric_match = *p.value == *cell.baric;
            }
        }
        if (opts.props.nilpotent) {
            const auto nc = nilpotent_classify(m, opts.tol);
            cell.nilpotent_unique = nc.unique();
            cell.nilpotent_witness = nc.witness;
            if (!custom) {
                const Prediction p = predicted_nilpotent_unique(family, s, t);
                cell.predicted_nilpotent_unique = p.value;
                cell.nilpotent_margin = p.margin;
                cell.nilpotent_in_band = p.margin < opts.band;
                if (p.value) cell.nilpotent_match = *p.value == *cell.nilpotent_unique;
            }
        }
        if (opts.props.idempotent) {
            IdempotentSet set;
            if (auto f = family.rank1_at(s, t)) {
                set = idempotents_rank1(m, *f);
            } else {
                set = idempotents_numeric(m, opts.newton);
            }
            cell.idempotent_count = set.size();
            for (const auto& p : set.points) cell.idempotents.push_back(p.x);
        }
    } catch (const std::domain_error& e) {
        CellRecord bad;
        bad.s = s;
        bad.t = t;
        bad.defined = false;
        bad.error = e.what();
        return bad;
    }
    return cell;
}

namespace {

struct Node {
    double s, t;
};

std::vector<Node> grid_nodes(const GridSpec& grid) {
    std::vector<Node> nodes;
    for (std::size_t i = 0; i < grid.n_s; ++i)
        for (std::size_t j = 0; j < grid.n_t; ++j) {
            const double s = grid.s_node(i);
            const double t = grid.t_node(j);
            if (t >= s) nodes.push_back({s, t});
        }
    return nodes;
}

PropertyDiagram skeleton(const CeaFamily& family, const GridSpec& grid, const DiagramOptions& opts) {
    grid.validate();
    PropertyDiagram d;
    d.family = kind_name(family.kind());
    d.params = family.param_text();
    d.threshold = family.threshold();
    d.grid = grid;
    d.options = opts;
    return d;
}

}  // namespace

PropertyDiagram sample_diagram_serial(const CeaFamily& family, const GridSpec& grid, const DiagramOptions& opts) {
    PropertyDiagram d = skeleton(family, grid, opts);
    for (const auto& n : grid_nodes(grid)) d.cells.push_back(classify_cell(family, n.s, n.t, opts));
    return d;
}

PropertyDiagram sample_diagram(const CeaFamily& family, const GridSpec& grid, const DiagramOptions& opts) {
    PropertyDiagram d = skeleton(family, grid, opts);
    const auto nodes = grid_nodes(grid);
    d.cells.resize(nodes.size());
    const int nthreads = opts.threads > 0 ? opts.threads : omp_get_max_threads();
    const auto n = static_cast<std::ptrdiff_t>(nodes.size());
#pragma omp parallel for schedule(dynamic, 8) num_threads(nthreads)
    for (std::ptrdiff_t k = 0; k < n; ++k) {
        const auto& nd = nodes[static_cast<std::size_t>(k)];
        d.cells[static_cast<std::size_t>(k)] = classify_cell(family, nd.s, nd.t, opts);
    }
    return d;
}

namespace {

void put_bool(std::string& out, const std::optional<bool>& b) {
    if (b) out += *b ? '1' : '0';
}

template <class T>
void put_uint(std::string& out, const std::optional<T>& v) {
    if (v) out += std::to_string(*v);
}

void put_real(std::string& out, const std::optional<double>& v) {
    if (v) out += format_real(*v);
}

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    fields.push_back(cur);
    return fields;
}

double parse_real(const std::string& f, std::size_t line) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
    if (ec != std::errc() || ptr != f.data() + f.size()) {
        throw std::runtime_error("line " + std::to_string(line) + ": bad real `" + f + "`");
    }
    return v;
}

std::optional<bool> parse_bool(const std::string& f, std::size_t line) {
    if (f.empty()) return std::nullopt;
    if (f == "0") return false;
    if (f == "1") return true;
    throw std::runtime_error("line " + std::to_string(line) + ": bad flag `" + f + "`");
}

std::optional<std::size_t> parse_count(const std::string& f, std::size_t line) {
    if (f.empty()) return std::nullopt;
    std::size_t v = 0;
    auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
    if (ec != std::errc() || ptr != f.data() + f.size()) {
        throw std::runtime_error("line " + std::to_string(line) + ": bad count `" + f + "`");
    }
    return v;
}

}  // namespace

std::string to_csv(const PropertyDiagram& diagram) {
    std::string out = kCsvHeader;
    out += '\n';
    for (const auto& c : diagram.cells) {
        out += format_real(c.s);
        out += ',';
        out += format_real(c.t);
        out += ',';
        out += c.defined ? '1' : '0';
        out += ',';
        put_bool(out, c.baric);
        out += ',';
        put_uint(out, c.baric_column);
        out += ',';
        put_real(out, c.baric_weight);
        out += ',';
        put_bool(out, c.nilpotent_unique);
        out += ',';
        put_uint(out, c.idempotent_count);
        out += ',';
        put_bool(out, c.predicted_baric);
        out += ',';
        put_bool(out, c.predicted_nilpotent_unique);
        out += ',';
        put_bool(out, c.baric_match);
        out += ',';
        put_bool(out, c.nilpotent_match);
        out += '\n';
    }
    return out;
}

std::vector<CellRecord> from_csv(const std::string& text) {
    std::vector<CellRecord> cells;
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || line != kCsvHeader) throw std::runtime_error("missing or unexpected CSV header");
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto f = split(line);
        if (f.size() != 12) throw std::runtime_error("line " + std::to_string(lineno) + ": expected 12 fields");
        CellRecord c;
        c.s = parse_real(f[0], lineno);
        c.t = parse_real(f[1], lineno);
        const auto defined = parse_bool(f[2], lineno);
        if (!defined) throw std::runtime_error("line " + std::to_string(lineno) + ": empty `defined`");
        c.defined = *defined;
        c.baric = parse_bool(f[3], lineno);
        c.baric_column = parse_count(f[4], lineno);
        if (!f[5].empty()) c.baric_weight = parse_real(f[5], lineno);
        c.nilpotent_unique = parse_bool(f[6], lineno);
        c.idempotent_count = parse_count(f[7], lineno);
        c.predicted_baric = parse_bool(f[8], lineno);
        c.predicted_nilpotent_unique = parse_bool(f[9], lineno);
        c.baric_match = parse_bool(f[10], lineno);
        c.nilpotent_match = parse_bool(f[11], lineno);
        cells.push_back(std::move(c));
    }
    return cells;
}

std::string to_json(const PropertyDiagram& diagram) {
    using json = nlohmann::ordered_json;
    json meta;
    meta["tool"] = "cea";
    meta["tool_version"] = kToolVersion;
    meta["family"] = diagram.family;
    json params = json::object();
    for (const auto& [k, v] : diagram.params) params[k] = v;
    meta["params"] = params;
    meta["a"] = diagram.threshold ? json(*diagram.threshold) : json(nullptr);
    meta["grid"] = {{"s", {diagram.grid.s_min, diagram.grid.s_max, diagram.grid.n_s}},
                    {"t", {diagram.grid.t_min, diagram.grid.t_max, diagram.grid.n_t}}};
    meta["props"] = diagram.options.props.to_string();
    meta["seed"] = diagram.seed ? json(*diagram.seed) : json(nullptr);
    meta["tol"] = diagram.options.tol;
    meta["band"] = diagram.options.band;
    meta["cell_count"] = diagram.cells.size();
    meta["baric_mismatches"] = diagram.baric_mismatches();
    meta["nilpotent_mismatches"] = diagram.nilpotent_mismatches();

    auto opt_bool = [](const std::optional<bool>& b) { return b ? json(*b) : json(nullptr); };
    json cells = json::array();
    for (const auto& c : diagram.cells) {
        json j;
        j["s"] = c.s;
        j["t"] = c.t;
        j["defined"] = c.defined;
        if (!c.defined) {
            j["error"] = c.error;
            cells.push_back(std::move(j));
            continue;
        }
        if (c.baric) {
            json b;
            b["flag"] = *c.baric;
            b["column"] = c.baric_column ? json(*c.baric_column) : json(nullptr);
            b["weight"] = c.baric_weight ? json(*c.baric_weight) : json(nullptr);
            b["qualifying_columns"] = c.baric_qualifying;
            j["baric"] = b;
            j["predicted_baric"] = opt_bool(c.predicted_baric);
            j["baric_match"] = opt_bool(c.baric_match);
            j["baric_in_band"] = c.baric_in_band;
        }
        if (c.nilpotent_unique) {
            j["nilpotent_unique"] = *c.nilpotent_unique;
            j["nilpotent_witness"] =
                c.nilpotent_witness ? json(std::vector<double>(c.nilpotent_witness->begin(), c.nilpotent_witness->end()))
                                    : json(nullptr);
            j["predicted_nilpotent_unique"] = opt_bool(c.predicted_nilpotent_unique);
            j["nilpotent_match"] = opt_bool(c.nilpotent_match);
            j["nilpotent_in_band"] = c.nilpotent_in_band;
        }
        if (c.idempotent_count) {
            j["idempotent_count"] = *c.idempotent_count;
            json pts = json::array();
            for (const auto& p : c.idempotents) pts.push_back({p[0], p[1], p[2]});
            j["idempotents"] = pts;
        }
        cells.push_back(std::move(j));
    }
    json root;
    root["metadata"] = meta;
    root["cells"] = cells;
    return root.dump(2) + "\n";
}

namespace {

void write_file(const std::filesystem::path& path, const std::string& data) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::ios_base::failure("cannot open `" + path.string() + "` for writing");
    out.write(data.data(), static_cast<std::streamsize>(data.size()));
    if (!out) throw std::ios_base::failure("write to `" + path.string() + "` failed");
}

}  // namespace

void export_csv(const PropertyDiagram& diagram, const std::filesystem::path& path) {
    write_file(path, to_csv(diagram));
}

void export_json(const PropertyDiagram& diagram, const std::filesystem::path& path) {
    write_file(path, to_json(diagram));
}

std::vector<CellRecord> import_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::ios_base::failure("cannot open `" + path.string() + "`");
    std::stringstream ss;
    ss << in.rdbuf();
    return from_csv(ss.str());
}

}  // namespace cea
