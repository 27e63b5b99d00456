#include "fbmlab/scenario.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <memory>
#include <set>
#include <sstream>

#include <json.hpp>

#include "fbmlab/errors.hpp"
#include "fbmlab/field_io.hpp"
#include "fbmlab/monotonicity.hpp"

namespace fbm {

using nlohmann::json;

double Scenario::lambda_value() const { return lambda ? *lambda : bernoulli_lambda(model); }

double Scenario::F0_value() const { return F0 ? *F0 : eval_dF(model, 1.0); }

std::vector<double> Scenario::radii() const { return geometric_radii(r_min, r_max, ratio); }

Problem Scenario::problem() const { return Problem::make(grid, model, boundary, lambda, eps_factor); }

std::string Diagnostic::str() const { return path.empty() ? message : path + ": " + message; }

namespace {

class Reader {
public:
    explicit Reader(std::string base_dir) : base_(std::move(base_dir)) {}

    std::vector<Diagnostic> diags;
    Scenario s;

    void run(const std::string& text) {
        json j;
        try {
            j = json::parse(text);
        } catch (const json::parse_error& e) {
            schema("", std::string("invalid JSON: ") + e.what());
            return;
        }
        if (!j.is_object()) {
            schema("", "scenario must be a JSON object");
            return;
        }
        static const std::set<std::string> known = {
            "schema_version", "grid", "density", "lambda", "boundary_data", "field",
            "points_of_interest", "auto_stride", "auto_max_points", "radii", "tol", "max_iter",
            "eps_factor", "descent", "neumann_tol", "F0", "output", "seed", "blowup", "description"};
        for (const auto& [k, v] : j.items()) {
            if (!known.count(k)) schema(k, "unknown field");
        }
        if (!j.contains("schema_version")) {
            schema("schema_version", "missing required field");
        } else if (!j["schema_version"].is_number_integer() || j["schema_version"].get<int>() != 1) {
            schema("schema_version", "must be 1");
        }
        const bool grid_ok = read_grid(j);
        read_density(j);
        if (j.contains("lambda")) {
            if (auto v = number(j["lambda"], "lambda")) {
                if (!(*v > 0.0)) schema("lambda", "must be positive");
                s.lambda = *v;
            }
        }
        read_boundary(j);
        read_field(j);
        read_radii(j);
        read_solver(j);
        read_output(j);
        read_blowup(j);
        read_points(j, grid_ok);
    }

private:
    std::string base_;

    void schema(const std::string& path, const std::string& msg) { diags.push_back({path, msg, false}); }
    void geometry(const std::string& path, const std::string& msg) { diags.push_back({path, msg, true}); }

    std::string resolve(const std::string& p) const {
        std::filesystem::path fp(p);
        if (fp.is_absolute()) return p;
        return (std::filesystem::path(base_) / fp).string();
    }

    std::optional<double> number(const json& v, const std::string& path) {
        if (!v.is_number()) {
            schema(path, "must be a number");
            return std::nullopt;
        }
        const double d = v.get<double>();
        if (!std::isfinite(d)) {
            schema(path, "must be finite");
            return std::nullopt;
        }
        return d;
    }

    std::optional<int> integer(const json& v, const std::string& path) {
        if (!v.is_number_integer()) {
            schema(path, "must be an integer");
            return std::nullopt;
        }
        return v.get<int>();
    }

    std::optional<std::vector<double>> vec(const json& v, const std::string& path, int dim) {
        if (v.is_number() && dim > 0) {
            auto d = number(v, path);
            if (!d) return std::nullopt;
            return std::vector<double>(dim, *d);
        }
        if (!v.is_array()) {
            schema(path, "must be an array of numbers");
            return std::nullopt;
        }
        std::vector<double> out;
        for (std::size_t i = 0; i < v.size(); ++i) {
            auto d = number(v[i], path + "[" + std::to_string(i) + "]");
            if (!d) return std::nullopt;
            out.push_back(*d);
        }
        if (dim > 0 && static_cast<int>(out.size()) != dim) {
            schema(path, "must have " + std::to_string(dim) + " entries");
            return std::nullopt;
        }
        return out;
    }

    bool read_grid(const json& j) {
        if (!j.contains("grid")) {
            schema("grid", "missing required field");
            return false;
        }
        const json& g = j["grid"];
        if (!g.is_object()) {
            schema("grid", "must be an object");
            return false;
        }
        if (!g.contains("dim")) {
            schema("grid.dim", "missing required field");
            return false;
        }
        const auto dim_read = integer(g["dim"], "grid.dim");
        if (!dim_read) return false;
        const int dim_value = *dim_read;
        if (dim_value != 2 && dim_value != 3) {
            schema("grid.dim", "must be 2 or 3");
            return false;
        }
        const int* dim = &dim_value;
        std::optional<std::vector<double>> lo, hi, nc;
        for (const char* key : {"lo", "hi", "n_cells"}) {
            if (!g.contains(key)) schema(std::string("grid.") + key, "missing required field");
        }
        if (g.contains("lo")) lo = vec(g["lo"], "grid.lo", *dim);
        if (g.contains("hi")) hi = vec(g["hi"], "grid.hi", *dim);
        if (g.contains("n_cells")) nc = vec(g["n_cells"], "grid.n_cells", *dim);
        if (!lo || !hi || !nc) return false;
        Point plo{}, phi{};
        std::array<int, 3> n{};
        for (int a = 0; a < *dim; ++a) {
            plo[a] = (*lo)[a];
            phi[a] = (*hi)[a];
            if ((*nc)[a] != std::floor((*nc)[a]) || (*nc)[a] < 2) {
                schema("grid.n_cells", "entries must be integers >= 2");
                return false;
            }
            n[a] = static_cast<int>((*nc)[a]);
        }
        try {
            s.grid = Grid::make(*dim, plo, phi, n);
        } catch (const Error& e) {
            schema("grid", e.what());
            return false;
        }
        return true;
    }

    void read_density(const json& j) {
        if (!j.contains("density")) {
            schema("density", "missing required field");
            return;
        }
        const json& d = j["density"];
        if (!d.is_object() || !d.contains("kind") || !d["kind"].is_string()) {
            schema("density.kind", "must be \"linear\" or \"arctan\"");
            return;
        }
        const std::string kind = d["kind"].get<std::string>();
        double alpha = 0.0;
        if (d.contains("alpha")) {
            if (auto a = number(d["alpha"], "density.alpha")) alpha = *a;
        }
        if (alpha < 0.0) {
            schema("density.alpha", "must be nonnegative");
            alpha = 0.0;
        }
        if (kind == "linear") {
            s.model = DensityModel::linear();
        } else if (kind == "arctan") {
            if (!d.contains("alpha")) schema("density.alpha", "missing required field for kind arctan");
            s.model = DensityModel::arctan(alpha);
        } else {
            schema("density.kind", "must be \"linear\" or \"arctan\"");
        }
        if (d.contains("t_max")) {
            if (auto v = number(d["t_max"], "density.t_max")) {
                if (*v > 0.0) s.model.t_max = *v;
                else schema("density.t_max", "must be positive");
            }
        }
    }

    void read_boundary(const json& j) {
        if (!j.contains("boundary_data")) {
            schema("boundary_data", "missing required field");
            return;
        }
        const json& b = j["boundary_data"];
        if (!b.is_object() || !b.contains("kind") || !b["kind"].is_string()) {
            schema("boundary_data.kind", "must be one of halfplane, radial, wedge, file");
            return;
        }
        const int dim = s.grid.dim;
        const std::string kind = b["kind"].get<std::string>();
        try {
            if (kind == "halfplane") {
                Point e{1.0, 0.0, 0.0};
                if (b.contains("direction")) {
                    if (auto v = vec(b["direction"], "boundary_data.direction", dim)) {
                        e = {};
                        for (int a = 0; a < dim; ++a) e[a] = (*v)[a];
                    }
                }
                s.boundary = BoundaryData::halfplane(e);
            } else if (kind == "radial") {
                double c = 0.5;
                if (b.contains("c")) {
                    if (auto v = number(b["c"], "boundary_data.c")) c = *v;
                }
                Point center{};
                if (b.contains("center")) {
                    if (auto v = vec(b["center"], "boundary_data.center", dim)) {
                        for (int a = 0; a < dim; ++a) center[a] = (*v)[a];
                    }
                }
                s.boundary = BoundaryData::radial(c, center);
            } else if (kind == "wedge") {
                double angle = 0.0;
                if (!b.contains("angle")) schema("boundary_data.angle", "missing required field");
                else if (auto v = number(b["angle"], "boundary_data.angle")) angle = *v;
                s.boundary = BoundaryData::wedge(angle);
            } else if (kind == "file") {
                if (!b.contains("path") || !b["path"].is_string()) {
                    schema("boundary_data.path", "missing required field");
                    return;
                }
                const std::string p = resolve(b["path"].get<std::string>());
                auto f = std::make_shared<ScalarField>(read_scalar_field(p));
                if (f->grid.dim != dim) schema("boundary_data.path", "field dimension differs from grid.dim");
                s.boundary = BoundaryData::from_field(std::move(f), p);
            } else {
                schema("boundary_data.kind", "must be one of halfplane, radial, wedge, file");
            }
        } catch (const Error& e) {
            schema("boundary_data", e.what());
        }
    }

    void read_field(const json& j) {
        if (!j.contains("field")) return;
        const json& f = j["field"];
        if (!f.is_object() || !f.contains("source") || !f["source"].is_string()) {
            schema("field.source", "must be one of minimize, boundary_data, file");
            return;
        }
        const std::string src = f["source"].get<std::string>();
        if (src == "minimize") {
            s.field_source = FieldSource::Minimize;
        } else if (src == "boundary_data") {
            s.field_source = FieldSource::BoundaryData;
        } else if (src == "file") {
            s.field_source = FieldSource::File;
            if (!f.contains("path") || !f["path"].is_string()) {
                schema("field.path", "missing required field for source file");
            } else {
                s.field_path = resolve(f["path"].get<std::string>());
            }
        } else {
            schema("field.source", "must be one of minimize, boundary_data, file");
        }
    }

    void read_radii(const json& j) {
        if (!j.contains("radii")) {
            schema("radii", "missing required field");
            return;
        }
        const json& r = j["radii"];
        if (!r.is_object()) {
            schema("radii", "must be an object");
            return;
        }
        for (const char* key : {"r_min", "r_max", "ratio"}) {
            if (!r.contains(key)) {
                schema(std::string("radii.") + key, "missing required field");
                continue;
            }
            if (auto v = number(r[key], std::string("radii.") + key)) {
                if (std::string(key) == "r_min") s.r_min = *v;
                else if (std::string(key) == "r_max") s.r_max = *v;
                else s.ratio = *v;
            }
        }
        if (r.contains("margin")) {
            if (auto v = number(r["margin"], "radii.margin")) {
                if (*v < 0.0) schema("radii.margin", "must be nonnegative");
                else s.margin = *v;
            }
        }
        if (!(s.r_min > 0.0)) schema("radii.r_min", "must be positive");
        if (!(s.r_max >= s.r_min)) schema("radii.r_max", "must be at least r_min");
        if (!(s.ratio > 1.0)) schema("radii.ratio", "radii.ratio must exceed 1");
    }

    void read_solver(const json& j) {
        if (j.contains("tol")) {
            if (auto v = number(j["tol"], "tol")) {
                if (*v > 0.0) s.minimize.tol = *v;
                else schema("tol", "must be positive");
            }
        }
        if (j.contains("max_iter")) {
            if (auto v = integer(j["max_iter"], "max_iter")) {
                if (*v >= 0) s.minimize.max_iter = *v;
                else schema("max_iter", "must be nonnegative");
            }
        }
        if (j.contains("eps_factor")) {
            if (auto v = number(j["eps_factor"], "eps_factor")) {
                if (*v > 0.0) s.eps_factor = *v;
                else schema("eps_factor", "must be positive");
            }
        }
        if (j.contains("descent")) {
            const std::string d = j["descent"].is_string() ? j["descent"].get<std::string>() : "";
            if (d == "sobolev") s.minimize.descent = Descent::Sobolev;
            else if (d == "plain") s.minimize.descent = Descent::Plain;
            else schema("descent", "must be \"sobolev\" or \"plain\"");
        }
        if (j.contains("neumann_tol")) {
            if (auto v = number(j["neumann_tol"], "neumann_tol")) {
                if (*v > 0.0) s.neumann_tol = *v;
                else schema("neumann_tol", "must be positive");
            }
        }
        if (j.contains("F0")) {
            if (auto v = number(j["F0"], "F0")) s.F0 = *v;
        }
        if (j.contains("seed")) {
            if (!j["seed"].is_number_unsigned() && !j["seed"].is_number_integer()) {
                schema("seed", "must be a nonnegative integer");
            } else if (j["seed"].is_number_integer() && j["seed"].get<long long>() < 0) {
                schema("seed", "must be a nonnegative integer");
            } else {
                s.seed = j["seed"].get<std::uint64_t>();
            }
        }
    }

    void read_output(const json& j) {
        if (!j.contains("output")) return;
        const json& o = j["output"];
        if (!o.is_object() || (o.contains("dir") && !o["dir"].is_string())) {
            schema("output.dir", "must be a string");
            return;
        }
        if (o.contains("dir")) s.output_dir = resolve(o["dir"].get<std::string>());
    }

    void read_blowup(const json& j) {
        if (!j.contains("blowup")) return;
        const json& b = j["blowup"];
        if (!b.is_object()) {
            schema("blowup", "must be an object");
            return;
        }
        if (b.contains("enabled")) {
            if (b["enabled"].is_boolean()) s.blowup_enabled = b["enabled"].get<bool>();
            else schema("blowup.enabled", "must be a boolean");
        }
        if (b.contains("delta")) {
            if (auto v = number(b["delta"], "blowup.delta")) s.blowup.delta = *v;
        }
        if (b.contains("gamma")) {
            if (auto v = number(b["gamma"], "blowup.gamma")) s.blowup.gamma = *v;
        }
        if (b.contains("ref_cells")) {
            if (auto v = integer(b["ref_cells"], "blowup.ref_cells")) {
                if (*v >= 4) s.blowup.ref_cells = *v;
                else schema("blowup.ref_cells", "must be at least 4");
            }
        }
        if (b.contains("scales")) {
            if (auto v = vec(b["scales"], "blowup.scales", 0)) {
                s.blowup_scales = *v;
                for (std::size_t i = 0; i < v->size(); ++i) {
                    if (!((*v)[i] > 0.0) || (i > 0 && !((*v)[i] < (*v)[i - 1]))) {
                        schema("blowup.scales", "must be positive and strictly decreasing");
                        break;
                    }
                }
            }
        }
    }

    void read_points(const json& j, bool grid_ok) {
        if (j.contains("auto_stride")) {
            if (auto v = integer(j["auto_stride"], "auto_stride")) {
                if (*v >= 1) s.auto_stride = *v;
                else schema("auto_stride", "must be at least 1");
            }
        }
        if (j.contains("auto_max_points")) {
            if (auto v = integer(j["auto_max_points"], "auto_max_points")) {
                if (*v >= 0) s.auto_max_points = *v;
                else schema("auto_max_points", "must be nonnegative");
            }
        }
        if (!j.contains("points_of_interest")) {
            schema("points_of_interest", "missing required field");
            return;
        }
        const json& p = j["points_of_interest"];
        if (p.is_string()) {
            if (p.get<std::string>() != "auto") schema("points_of_interest", "must be \"auto\" or a list of points");
            s.auto_points = true;
            return;
        }
        if (!p.is_array() || p.empty()) {
            schema("points_of_interest", "must be \"auto\" or a non-empty list of points");
            return;
        }
        s.auto_points = false;
        if (!grid_ok) return;
        const int dim = s.grid.dim;
        for (std::size_t i = 0; i < p.size(); ++i) {
            const std::string path = "points_of_interest[" + std::to_string(i) + "]";
            auto v = vec(p[i], path, dim);
            if (!v) continue;
            Point z{};
            for (int a = 0; a < dim; ++a) z[a] = (*v)[a];
            s.points.push_back(z);
            if (!s.grid.contains(z)) {
                geometry(path, "point lies outside the grid");
            } else if (s.r_max > 0.0 && !s.grid.contains_ball(z, s.r_max * (1.0 + s.margin))) {
                geometry(path, "ball of radius r_max (1 + margin) exits the grid");
            }
        }
    }
};

std::string read_text(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open scenario " + path);
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

std::string parent_dir(const std::string& path) {
    const auto p = std::filesystem::path(path).parent_path();
    return p.empty() ? std::string(".") : p.string();
}

}  // namespace

std::vector<Diagnostic> validate_scenario_text(const std::string& text, const std::string& base_dir) {
    Reader r(base_dir);
    r.run(text);
    return r.diags;
}

std::vector<Diagnostic> validate_scenario_file(const std::string& path) {
    std::string text;
    try {
        text = read_text(path);
    } catch (const ConfigError& e) {
        return {{"", e.what(), false}};
    }
    return validate_scenario_text(text, parent_dir(path));
}

Scenario parse_scenario(const std::string& text, const std::string& base_dir) {
    Reader r(base_dir);
    r.run(text);
    std::string schema_msg, geo_msg;
    for (const auto& d : r.diags) {
        std::string& dst = d.geometric ? geo_msg : schema_msg;
        dst += (dst.empty() ? "" : "; ") + d.str();
    }
    if (!schema_msg.empty()) throw ConfigError(schema_msg);
    if (!geo_msg.empty()) throw GeometryError(geo_msg);
    return r.s;
}

Scenario load_scenario(const std::string& path) { return parse_scenario(read_text(path), parent_dir(path)); }

Point parse_point(const std::string& text, int dim) {
    Point z{};
    std::stringstream ss(text);
    std::string item;
    int a = 0;
    while (std::getline(ss, item, ',')) {
        if (a >= dim) throw ConfigError("point \"" + text + "\" has more than " + std::to_string(dim) + " coordinates");
        try {
            std::size_t used = 0;
            z[a] = std::stod(item, &used);
            while (used < item.size() && std::isspace(static_cast<unsigned char>(item[used]))) ++used;
            if (used != item.size()) throw std::invalid_argument("trailing");
        } catch (const std::exception&) {
            throw ConfigError("point \"" + text + "\": bad coordinate \"" + item + "\"");
        }
        ++a;
    }
    if (a != dim) throw ConfigError("point \"" + text + "\" needs " + std::to_string(dim) + " coordinates");
    return z;
}

}  // namespace fbm
