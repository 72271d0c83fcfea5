#pragma once

#include "cea/family.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace cea {

// Inclusive linear grid over s and t; nodes with t < s are dropped.
struct GridSpec {
    double s_min = 0.0, s_max = 5.0;
    double t_min = 0.0, t_max = 5.0;
    std::size_t n_s = 50, n_t = 50;

    void validate() const;  // throws std::invalid_argument
    double s_node(std::size_t i) const;
    double t_node(std::size_t j) const;
    std::size_t admissible_count() const;
};

struct PropertySelection {
    bool baric = true;
    bool nilpotent = true;
    bool idempotent = true;

    static PropertySelection parse(const std::string& csv);  // "baric,nilpotent,idempotent"
    std::string to_string() const;
    bool any() const { return baric || nilpotent || idempotent; }
};

struct CellRecord {
    double s = 0.0;
    double t = 0.0;
    bool defined = true;
    std::string error;

    std::optional<bool> baric;
    std::optional<std::size_t> baric_column;  // one-based, as printed
    std::optional<double> baric_weight;
    std::vector<std::size_t> baric_qualifying;  // one-based

    std::optional<bool> nilpotent_unique;
    std::optional<Vec3> nilpotent_witness;

    std::optional<std::size_t> idempotent_count;
    std::vector<AlgebraElement> idempotents;

    std::optional<bool> predicted_baric;
    std::optional<bool> predicted_nilpotent_unique;
    std::optional<bool> baric_match;
    std::optional<bool> nilpotent_match;
    // Distance to the predicted set boundary; cells below the band width
    // are reported but not counted as mismatches.
    double baric_margin = 0.0;
    double nilpotent_margin = 0.0;
    bool baric_in_band = false;
    bool nilpotent_in_band = false;
};

struct DiagramOptions {
    PropertySelection props;
    double tol = 1e-9;
    double band = 1e-3;
    NewtonOptions newton;  // CUSTOM families only
    int threads = 0;       // 0: OpenMP default
};

struct PropertyDiagram {
    std::string family;
    std::map<std::string, std::string> params;
    std::optional<double> threshold;
    GridSpec grid;
    DiagramOptions options;
    std::optional<std::uint64_t> seed;  // echoed from the run config
    std::vector<CellRecord> cells;  // s-major, then t

    std::size_t baric_mismatches() const;
    std::size_t nilpotent_mismatches() const;
};

CellRecord classify_cell(const CeaFamily& family, double s, double t, const DiagramOptions& opts);

// OpenMP over cells; output is identical to the serial kernel for any thread count.
PropertyDiagram sample_diagram(const CeaFamily& family, const GridSpec& grid, const DiagramOptions& opts = {});
PropertyDiagram sample_diagram_serial(const CeaFamily& family, const GridSpec& grid, const DiagramOptions& opts = {});

inline constexpr const char* kCsvHeader =
    "s,t,defined,baric,baric_column,baric_weight,nilpotent_unique,idempotent_count,"
    "predicted_baric,predicted_nilpotent_unique,baric_match,nilpotent_match";

std::string to_csv(const PropertyDiagram& diagram);
std::vector<CellRecord> from_csv(const std::string& text);  // throws std::runtime_error
std::string to_json(const PropertyDiagram& diagram);

// Throw std::ios_base::failure on I/O errors.
void export_csv(const PropertyDiagram& diagram, const std::filesystem::path& path);
void export_json(const PropertyDiagram& diagram, const std::filesystem::path& path);
std::vector<CellRecord> import_csv(const std::filesystem::path& path);

inline constexpr const char* kToolVersion = "0.1.0";

}  // namespace cea
