#pragma once

#include "cea/diagram.hpp"
#include "cea/family.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>

namespace cea {

class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// One document holding the family and command options. Command-line flags
// are applied on top of the loaded values by the CLI.
//
//   {
//     "family": "F1",
//     "params": { "h": "t", "f": "0", "g": "0" },
//     "a": 3.0,
//     "grid": { "s": [0.1, 5, 50], "t": [0.1, 5, 50] },
//     "sampler": { "samples": 100, "seed": 1, "t_min": 0, "t_max": 5 },
//     "tol": 1e-9, "band": 1e-3, "props": "baric,nilpotent,idempotent",
//     "threads": 0, "strict": false,
//     "out": "diagram.csv", "json_out": "diagram.json",
//     "s": 1, "t": 2, "which": "idempotents", "x0": [0.4, 0.4, 0.4], "steps": 10,
//     "newton": { "box": 10, "grid": 7 }
//   }
struct RunConfig {
    std::string family = "F0";
    std::map<std::string, std::string> params;
    std::optional<double> a;

    GridSpec grid;
    TripleSampler sampler;
    double tol = 1e-9;
    double band = 1e-3;
    PropertySelection props;
    int threads = 0;
    bool strict = false;

    std::string out;
    std::string json_out;

    std::optional<double> s;
    std::optional<double> t;
    std::string which = "idempotents";
    std::optional<Vec3> x0;
    std::size_t steps = 10;
    NewtonOptions newton;

    static RunConfig from_json_text(const std::string& text);  // throws ConfigError
    static RunConfig load(const std::filesystem::path& path);  // adds std::ios_base::failure

    CeaFamily build_family() const;  // throws FamilyConfigError / ParseError
};

}  // namespace cea
