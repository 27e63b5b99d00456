#pragma once

#include <optional>
#include <string>
#include <vector>

#include "fbmlab/field.hpp"

namespace fbm {

/// Extra header entries carried by ghost-potential files.
struct FieldMeta {
    std::optional<Point> base_point;
    std::optional<double> F0;
};

/// Raw contents of a field file: `components` doubles per node.
struct FieldFile {
    Grid grid;
    int components = 1;
    std::vector<double> data;
    FieldMeta meta;
};

/// Header path for a data file: "<path>.json".
std::string header_path(const std::string& data_path);

/// Writes little-endian float64 node values to `data_path` and the JSON header
/// {dim, lo, hi, n_cells, components, data, ...} to header_path(data_path).
void write_field(const std::string& data_path, const ScalarField& f, const FieldMeta& meta = {});
void write_field(const std::string& data_path, const VectorField& f, const FieldMeta& meta = {});

/// Throws ConfigError on a malformed header or a size mismatch.
FieldFile read_field_file(const std::string& data_path);
ScalarField read_scalar_field(const std::string& data_path, FieldMeta* meta = nullptr);

/// Shortest decimal string that parses back to the same double.
std::string format_double(double v);

/// CSV with header x,y[,z].
void write_points_csv(const std::string& path, const std::vector<Point>& pts, int dim);

}  // namespace fbm
