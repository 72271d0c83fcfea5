#include "support.hpp"

#include "cea/cli.hpp"
#include "cea/config.hpp"

#include <doctest.h>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace cea;

namespace {

struct Run {
    int code = -1;
    std::string out;
    std::string err;
};

Run run(const std::vector<std::string>& args) {
    std::ostringstream out, err;
    Run r;
    r.code = run_cli(args, out, err);
    r.out = out.str();
    r.err = err.str();
    return r;
}

std::filesystem::path temp_path(const std::string& name) {
    return std::filesystem::temp_directory_path() / ("cea_cli_" + name);
}

std::filesystem::path write_temp(const std::string& name, const std::string& text) {
    const auto p = temp_path(name);
    std::ofstream(p, std::ios::binary) << text;
    return p;
}

std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

const std::vector<std::string> kF1 = {"--family", "F1", "--param", "h=t", "--param", "f=0", "--param", "g=0"};

std::vector<std::string> with(std::vector<std::string> head, const std::vector<std::string>& tail) {
    head.insert(head.end(), tail.begin(), tail.end());
    return head;
}

}  // namespace

TEST_CASE("ck-verify exit codes") {
    auto r = run(with({"ck-verify"}, with(kF1, {"--samples", "100", "--tol", "1e-9"})));
    CHECK(r.code == kExitOk);
    CHECK(r.out.find("result PASS") != std::string::npos);
    CHECK(r.out.find("samples 100") != std::string::npos);

    r = run({"ck-verify", "--family", "CUSTOM", "--param", "a11=s+t", "--samples", "50"});
    CHECK(r.code == kExitFail);
    CHECK(r.out.find("result FAIL") != std::string::npos);

    r = run({"ck-verify", "--family", "F1", "--param", "f=0", "--param", "g=0"});
    CHECK(r.code == kExitUsage);
    CHECK(r.err.find("required roles") != std::string::npos);

    r = run({"ck-verify", "--family", "F1", "--param", "h=t+", "--param", "f=0", "--param", "g=0"});
    CHECK(r.code == kExitUsage);
    CHECK(r.err.find("expression") != std::string::npos);

    CHECK(run({"ck-verify", "--bogus"}).code == kExitUsage);
    CHECK(run({}).code == kExitUsage);
    CHECK(run({"--help"}).code == kExitOk);
    CHECK(run(with({"ck-verify"}, with(kF1, {"--tol", "0"}))).code == kExitUsage);
}

TEST_CASE("ck-verify writes a JSON report") {
    const auto path = temp_path("ck.json");
    const auto r = run(with({"ck-verify"}, with(kF1, {"--samples", "30", "--seed", "5", "--out", path.string()})));
    REQUIRE(r.code == kExitOk);
    const auto j = nlohmann::json::parse(read_file(path));
    CHECK(j["family"] == "F1");
    CHECK(j["seed"] == 5);
    CHECK(j["samples"] == 30);
    CHECK(j["pass"] == true);
    CHECK(j["worst_triple"].size() == 3);
    std::filesystem::remove(path);

    CHECK(run(with({"ck-verify"}, with(kF1, {"--out", "/nonexistent-dir/r.json"}))).code == kExitIo);
}

TEST_CASE("config file and flag precedence") {
    const auto cfg = write_temp("cfg.json", R"({
        "family": "F5",
        "params": {"phi": "0.3", "psi": "0.7"},
        "a": 3.0,
        "grid": {"s": [0, 5, 6], "t": [0, 5, 6]},
        "sampler": {"samples": 40, "seed": 9},
        "props": ["baric", "idempotent"]
    })");
    auto r = run({"diagram", "--config", cfg.string()});
    REQUIRE(r.code == kExitOk);
    const auto cells = from_csv(r.out);
    CHECK(cells.size() == 21);
    CHECK_FALSE(cells[0].nilpotent_unique.has_value());
    CHECK(r.err.find("seed 9") != std::string::npos);

    // Flags override the file.
    r = run({"diagram", "--config", cfg.string(), "--a", "1", "--seed", "3"});
    REQUIRE(r.code == kExitOk);
    for (const auto& c : from_csv(r.out)) CHECK(c.baric == (c.t < 1.0));
    CHECK(r.err.find("seed 3") != std::string::npos);

    r = run({"ck-verify", "--config", cfg.string()});
    CHECK(r.code == kExitOk);
    CHECK(r.out.find("samples 40") != std::string::npos);
    std::filesystem::remove(cfg);

    const auto bad_key = write_temp("bad.json", R"({"family": "F0", "colour": 1})");
    r = run({"diagram", "--config", bad_key.string()});
    CHECK(r.code == kExitUsage);
    CHECK(r.err.find("colour") != std::string::npos);
    std::filesystem::remove(bad_key);

    const auto empty = write_temp("empty.json", "");
    CHECK(run({"diagram", "--config", empty.string()}).code == kExitUsage);
    std::filesystem::remove(empty);

    CHECK(run({"diagram", "--config", temp_path("absent.json").string()}).code == kExitIo);
}

TEST_CASE("RunConfig parsing") {
    const auto cfg = RunConfig::from_json_text(R"({"family": "F2", "params": {"phi": "s", "psi": "0"}, "a": 2,
        "grid": {"s": [0.1, 2, 4], "t": [0.5, 3, 5]}, "props": "baric", "x0": [1, 2, 3],
        "newton": {"box": 4, "grid": 5}})");
    CHECK(cfg.family == "F2");
    CHECK(cfg.a == 2.0);
    CHECK(cfg.grid.s_min == 0.1);
    CHECK(cfg.grid.n_t == 5);
    CHECK(cfg.grid.t_min == 0.5);
    CHECK(cfg.props.to_string() == "baric");
    CHECK(cfg.x0 == Vec3{1, 2, 3});
    CHECK(cfg.newton.box == 4.0);
    CHECK(cfg.newton.grid == 5);
    CHECK(cfg.build_family().kind() == FamilyKind::F2);

    CHECK_THROWS_AS(RunConfig::from_json_text("[1]"), ConfigError);
    CHECK_THROWS_AS(RunConfig::from_json_text(R"({"grid": {"s": [0, 1]}})"), ConfigError);
    CHECK_THROWS_AS(RunConfig::from_json_text(R"({"tol": "small"})"), ConfigError);
    CHECK_THROWS_AS(RunConfig::from_json_text(R"({"newton": {"seeds": 3}})"), ConfigError);
}

TEST_CASE("diagram output and strict mode") {
    const auto csv = temp_path("d.csv");
    const auto js = temp_path("d.json");
    auto r = run({"diagram", "--family", "F5", "--param", "phi=0.3", "--param", "psi=0.7", "--a", "3", "--out",
                  csv.string(), "--json", js.string()});
    REQUIRE(r.code == kExitOk);
    CHECK(r.out.find("cells 1275") != std::string::npos);
    CHECK(from_csv(read_file(csv)).size() == 1275);
    const auto j = nlohmann::json::parse(read_file(js));
    CHECK(j["metadata"]["family"] == "F5");
    CHECK(j["metadata"]["cell_count"] == 1275);
    std::filesystem::remove(csv);
    std::filesystem::remove(js);

    // F3 with psi = phi = 0 is baric although the predicted set says never.
    const std::vector<std::string> f3 = {"diagram", "--family", "F3", "--param", "g1=1+t", "--param", "g2=t",
                                         "--param", "g3=2", "--param", "psi=0", "--param", "phi=0",
                                         "--props", "baric"};
    r = run(f3);
    CHECK(r.code == kExitOk);
    CHECK(r.err.find("baric_mismatches 1275") != std::string::npos);
    r = run(with(f3, {"--strict"}));
    CHECK(r.code == kExitFail);

    r = run({"diagram", "--family", "F0", "--props", "colour"});
    CHECK(r.code == kExitUsage);
}

TEST_CASE("diagram is deterministic across thread counts") {
    const std::vector<std::string> base = {"diagram", "--family", "F4", "--param", "g=sin(t)+0.2", "--param",
                                           "phi=1+t", "--param", "f=cos(t)"};
    const auto a = run(with(base, {"--threads", "1"}));
    const auto b = run(with(base, {"--threads", "3"}));
    REQUIRE(a.code == kExitOk);
    CHECK(a.out == b.out);
    CHECK(run(with(base, {"--threads", "-1"})).code == kExitUsage);
}

TEST_CASE("points") {
    auto r = run(with({"points"}, with(kF1, {"--s", "1", "--t", "2", "--which", "all"})));
    REQUIRE(r.code == kExitOk);
    CHECK(r.out.find("idempotents: 2 (certified-rank1)") != std::string::npos);
    CHECK(r.out.find("1: (0.5, 0.5, 0.5)") != std::string::npos);
    CHECK(r.out.find("nilpotents: positive-dimensional") != std::string::npos);
    CHECK(r.out.find("support {3}") != std::string::npos);

    r = run({"points", "--family", "F4", "--param", "g=exp(t)", "--param", "phi=2", "--param", "f=1", "--s", "1",
             "--t", "2", "--which", "nilpotents"});
    REQUIRE(r.code == kExitOk);
    CHECK(r.out.find("support {1}") != std::string::npos);
    CHECK(r.out.find("residual 0") != std::string::npos);
    CHECK(r.out.find("idempotents:") == std::string::npos);

    r = run({"points", "--family", "CUSTOM", "--param", "a11=1", "--param", "a22=1", "--param", "a33=1", "--s",
             "0", "--t", "1"});
    REQUIRE(r.code == kExitOk);
    CHECK(r.out.find("idempotents: 8 (heuristic-multistart)") != std::string::npos);

    CHECK(run({"points", "--family", "F0", "--s", "3", "--t", "1"}).code == kExitUsage);
    CHECK(run({"points", "--family", "F0"}).code == kExitUsage);
    CHECK(run({"points", "--family", "F0", "--s", "0", "--t", "1", "--which", "some"}).code == kExitUsage);
}

TEST_CASE("dynamics") {
    auto r = run(with({"dynamics"}, with(kF1, {"--s", "1", "--t", "2", "--x0", "0.4,0.4,0.4", "--steps", "10"})));
    REQUIRE(r.code == kExitOk);
    CHECK(r.out.rfind("step,x1,x2,x3,residual,idempotent\n", 0) == 0);
    CHECK(r.out.find("\n1,0.32000000000000006,0.32000000000000006,") != std::string::npos);
    CHECK(r.out.find("# converged to idempotent 0") != std::string::npos);

    r = run(with({"dynamics"}, with(kF1, {"--s", "1", "--t", "2", "--x0", "0.5,0.5,0.5", "--steps", "2"})));
    REQUIRE(r.code == kExitOk);
    CHECK(r.out.find("# converged to idempotent 1 (0.5, 0.5, 0.5) at step 0") != std::string::npos);

    r = run({"dynamics", "--family", "CUSTOM", "--param", "a11=1", "--param", "a22=1", "--param", "a33=1", "--s",
             "0", "--t", "1", "--x0", "10,0,0", "--steps", "50"});
    REQUIRE(r.code == kExitOk);
    CHECK(r.out.find("# diverged") != std::string::npos);

    const auto path = temp_path("traj.csv");
    r = run(with({"dynamics"}, with(kF1, {"--s", "1", "--t", "2", "--x0", "0.4,0.4,0.4", "--out", path.string()})));
    REQUIRE(r.code == kExitOk);
    CHECK(r.out.rfind("family F1", 0) == 0);
    CHECK(read_file(path).rfind("step,", 0) == 0);
    std::filesystem::remove(path);

    CHECK(run(with({"dynamics"}, with(kF1, {"--s", "1", "--t", "2"}))).code == kExitUsage);
    CHECK(run(with({"dynamics"}, with(kF1, {"--s", "1", "--t", "2", "--x0", "1,2"}))).code == kExitUsage);
}
