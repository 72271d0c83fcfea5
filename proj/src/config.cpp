#include "cea/config.hpp"

#include <json.hpp>

#include <fstream>
#include <set>
#include <sstream>

namespace cea {

namespace {

using json = nlohmann::json;

void check_keys(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
    for (const auto& [key, value] : obj.items()) {
        if (!allowed.count(key)) throw ConfigError("unknown key `" + key + "` in " + where);
    }
}

std::string expr_string(const json& v, const std::string& role) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_number()) {
        std::ostringstream os;
        os.precision(17);
        os << v.get<double>();
        return os.str();
    }
    throw ConfigError("parameter `" + role + "` must be an expression string");
}

void read_axis(const json& v, const char* name, double& lo, double& hi, std::size_t& n) {
    if (!v.is_array() || v.size() != 3) throw ConfigError(std::string("grid.") + name + " must be [min, max, count]");
    lo = v[0].get<double>();
    hi = v[1].get<double>();
    const double count = v[2].get<double>();
    if (!(count >= 1.0) || count != static_cast<double>(static_cast<std::size_t>(count))) {
        throw ConfigError(std::string("grid.") + name + " count must be a positive integer");
    }
    n = static_cast<std::size_t>(count);
}

}  // namespace

RunConfig RunConfig::from_json_text(const std::string& text) {
    RunConfig cfg;
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!doc.is_object()) throw ConfigError("config must be a JSON object");
    check_keys(doc,
               {"family", "params", "a", "grid", "sampler", "samples", "seed", "tol", "band", "props", "threads",
                "strict", "out", "json_out", "s", "t", "which", "x0", "steps", "newton"},
               "config");
    try {
        if (doc.contains("family")) cfg.family = doc["family"].get<std::string>();
        if (doc.contains("params")) {
            if (!doc["params"].is_object()) throw ConfigError("`params` must be an object");
            for (const auto& [k, v] : doc["params"].items()) cfg.params[k] = expr_string(v, k);
        }
        if (doc.contains("a") && !doc["a"].is_null()) cfg.a = doc["a"].get<double>();
        if (doc.contains("grid")) {
            const auto& g = doc["grid"];
            check_keys(g, {"s", "t"}, "grid");
            if (g.contains("s")) read_axis(g["s"], "s", cfg.grid.s_min, cfg.grid.s_max, cfg.grid.n_s);
            if (g.contains("t")) read_axis(g["t"], "t", cfg.grid.t_min, cfg.grid.t_max, cfg.grid.n_t);
        }
        if (doc.contains("sampler")) {
            const auto& sm = doc["sampler"];
            check_keys(sm, {"samples", "seed", "t_min", "t_max"}, "sampler");
            if (sm.contains("samples")) cfg.sampler.count = sm["samples"].get<std::size_t>();
            if (sm.contains("seed")) cfg.sampler.seed = sm["seed"].get<std::uint64_t>();
            if (sm.contains("t_min")) cfg.sampler.t_min = sm["t_min"].get<double>();
            if (sm.contains("t_max")) cfg.sampler.t_max = sm["t_max"].get<double>();
        }
        if (doc.contains("samples")) cfg.sampler.count = doc["samples"].get<std::size_t>();
        if (doc.contains("seed")) cfg.sampler.seed = doc["seed"].get<std::uint64_t>();
        if (doc.contains("tol")) cfg.tol = doc["tol"].get<double>();
        if (doc.contains("band")) cfg.band = doc["band"].get<double>();
        if (doc.contains("props")) {
            const auto& p = doc["props"];
            if (p.is_string()) {
                cfg.props = PropertySelection::parse(p.get<std::string>());
            } else if (p.is_array()) {
                std::string joined;
                for (const auto& item : p) joined += item.get<std::string>() + ",";
                cfg.props = PropertySelection::parse(joined);
            } else {
                throw ConfigError("`props` must be a string or an array of strings");
            }
        }
        if (doc.contains("threads")) cfg.threads = doc["threads"].get<int>();
        if (doc.contains("strict")) cfg.strict = doc["strict"].get<bool>();
        if (doc.contains("out")) cfg.out = doc["out"].get<std::string>();
        if (doc.contains("json_out")) cfg.json_out = doc["json_out"].get<std::string>();
        if (doc.contains("s")) cfg.s = doc["s"].get<double>();
        if (doc.contains("t")) cfg.t = doc["t"].get<double>();
        if (doc.contains("which")) cfg.which = doc["which"].get<std::string>();
        if (doc.contains("x0")) {
            const auto& x = doc["x0"];
            if (!x.is_array() || x.size() != 3) throw ConfigError("`x0` must be a 3-element array");
            cfg.x0 = Vec3{x[0].get<double>(), x[1].get<double>(), x[2].get<double>()};
        }
        if (doc.contains("steps")) cfg.steps = doc["steps"].get<std::size_t>();
        if (doc.contains("newton")) {
            const auto& nw = doc["newton"];
            check_keys(nw, {"box", "grid", "max_iter"}, "newton");
            if (nw.contains("box")) cfg.newton.box = nw["box"].get<double>();
            if (nw.contains("grid")) cfg.newton.grid = nw["grid"].get<std::size_t>();
            if (nw.contains("max_iter")) cfg.newton.max_iter = nw["max_iter"].get<std::size_t>();
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config value has the wrong type: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    return cfg;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::ios_base::failure("cannot read config `" + path.string() + "`");
    std::stringstream ss;
    ss << in.rdbuf();
    return from_json_text(ss.str());
}

CeaFamily RunConfig::build_family() const { return CeaFamily::make(parse_kind(family), params, a); }

}  // namespace cea
