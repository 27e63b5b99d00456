#include "fbmlab/field_io.hpp"

#include <bit>
#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "fbmlab/errors.hpp"

namespace fbm {

using nlohmann::json;

namespace {


void put_le(std::ostream& os, double v) {
    std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(bits >> (8 * i));
    os.write(reinterpret_cast<const char*>(b), 8);
}

double get_le(const unsigned char* b) {
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return std::bit_cast<double>(bits);
}

json grid_json(const Grid& g) {
    json lo = json::array(), hi = json::array(), n = json::array();
    for (int a = 0; a < g.dim; ++a) {
        lo.push_back(g.lo[a]);
        hi.push_back(g.hi[a]);
        n.push_back(g.n_cells[a]);
    }
    return json{{"dim", g.dim}, {"lo", lo}, {"hi", hi}, {"n_cells", n}};
}

void write_impl(const std::string& path, const Grid& g, int comps, const std::vector<double>& data,
                const FieldMeta& meta) {
    {
        std::ofstream os(path, std::ios::binary);
        if (!os) throw ConfigError("cannot open " + path + " for writing");
        for (double v : data) put_le(os, v);
        if (!os) throw ConfigError("write failed: " + path);
    }
    json h = grid_json(g);
    h["components"] = comps;
    h["data"] = std::filesystem::path(path).filename().string();
    h["format"] = "f64le";
    if (meta.base_point) {
        json z = json::array();
        for (int a = 0; a < g.dim; ++a) z.push_back((*meta.base_point)[a]);
        h["base_point"] = z;
    }
    if (meta.F0) h["F0"] = *meta.F0;
    std::ofstream hs(header_path(path));
    if (!hs) throw ConfigError("cannot open " + header_path(path) + " for writing");
    hs << h.dump(2) << "\n";
}

}  // namespace

std::string header_path(const std::string& data_path) { return data_path + ".json"; }

void write_field(const std::string& path, const ScalarField& f, const FieldMeta& meta) {
    write_impl(path, f.grid, 1, f.values, meta);
}

void write_field(const std::string& path, const VectorField& f, const FieldMeta& meta) {
    write_impl(path, f.grid, f.grid.dim, f.values, meta);
}

FieldFile read_field_file(const std::string& path) {
    std::ifstream hs(header_path(path));
    if (!hs) throw ConfigError("missing field header " + header_path(path));
    json h;
    try {
        hs >> h;
    } catch (const json::exception& e) {
        throw ConfigError("malformed field header " + header_path(path) + ": " + e.what());
    }
    FieldFile out;
    try {
        const int dim = h.at("dim").get<int>();
        if (dim != 2 && dim != 3) throw ConfigError("field header: dim must be 2 or 3");
        Point lo{}, hi{};
        std::array<int, 3> n{};
        for (int a = 0; a < dim; ++a) {
            lo[a] = h.at("lo").at(a).get<double>();
            hi[a] = h.at("hi").at(a).get<double>();
            n[a] = h.at("n_cells").at(a).get<int>();
        }
        out.grid = Grid::make(dim, lo, hi, n);
        out.components = h.value("components", 1);
        if (h.contains("base_point")) {
            Point z{};
            for (int a = 0; a < dim; ++a) z[a] = h["base_point"].at(a).get<double>();
            out.meta.base_point = z;
        }
        if (h.contains("F0")) out.meta.F0 = h["F0"].get<double>();
    } catch (const json::exception& e) {
        throw ConfigError("field header " + header_path(path) + ": " + e.what());
    }
    std::ifstream is(path, std::ios::binary);
    if (!is) throw ConfigError("cannot open field data " + path);
    std::vector<unsigned char> raw((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
    const std::size_t expect = out.grid.node_count() * static_cast<std::size_t>(out.components);
    if (raw.size() != expect * 8) {
        throw ConfigError("field data " + path + " has " + std::to_string(raw.size()) +
                          " bytes, expected " + std::to_string(expect * 8));
    }
    out.data.resize(expect);
    for (std::size_t i = 0; i < expect; ++i) out.data[i] = get_le(raw.data() + 8 * i);
    return out;
}

ScalarField read_scalar_field(const std::string& path, FieldMeta* meta) {
    FieldFile ff = read_field_file(path);
    if (ff.components != 1) throw ConfigError(path + " is not a scalar field");
    ScalarField f(ff.grid);
    f.values = std::move(ff.data);
    if (meta) *meta = ff.meta;
    return f;
}

std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

void write_points_csv(const std::string& path, const std::vector<Point>& pts, int dim) {
    std::ofstream os(path);
    if (!os) throw ConfigError("cannot open " + path + " for writing");
    os << (dim == 3 ? "x,y,z\n" : "x,y\n");
    for (const auto& p : pts) {
        for (int a = 0; a < dim; ++a) os << (a ? "," : "") << format_double(p[a]);
        os << "\n";
    }
}

}  // namespace fbm
