#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fbmlab/blowup.hpp"
#include "fbmlab/density.hpp"
#include "fbmlab/field.hpp"
#include "fbmlab/minimizer.hpp"

namespace fbm {

enum class FieldSource {
    Minimize,      // minimize J_eps from the harmonic extension
    BoundaryData,  // sample the boundary-data generator at every node
    File,          // load field.path
};

struct Scenario {
    int schema_version = 1;
    Grid grid;
    DensityModel model;
    std::optional<double> lambda;
    BoundaryData boundary;
    FieldSource field_source = FieldSource::Minimize;
    std::string field_path;

    bool auto_points = true;
    std::vector<Point> points;
    int auto_stride = 1;
    int auto_max_points = 0;  // 0: no cap

    double r_min = 0.1;
    double r_max = 0.3;
    double ratio = 1.1;
    double margin = 0.05;

    MinimizeOptions minimize;
    double eps_factor = 2.0;
    double neumann_tol = 1e-8;
    std::optional<double> F0;

    std::string output_dir = "out";
    std::uint64_t seed = 0;

    bool blowup_enabled = true;
    std::vector<double> blowup_scales;  // empty: dyadic_scales
    BlowupOptions blowup;

    double lambda_value() const;
    double F0_value() const;
    std::vector<double> radii() const;
    Problem problem() const;
};

struct Diagnostic {
    std::string path;     // dotted field path, e.g. "radii.ratio"
    std::string message;
    bool geometric = false;

    std::string str() const;
};

/// Schema and geometric feasibility checks; empty means valid. Relative file
/// paths resolve against base_dir.
std::vector<Diagnostic> validate_scenario_text(const std::string& text, const std::string& base_dir = ".");
std::vector<Diagnostic> validate_scenario_file(const std::string& path);

/// Throws ConfigError on schema diagnostics and GeometryError when only
/// geometric diagnostics remain.
Scenario parse_scenario(const std::string& text, const std::string& base_dir = ".");
Scenario load_scenario(const std::string& path);

/// Parses "x,y[,z]".
Point parse_point(const std::string& s, int dim);

}  // namespace fbm
