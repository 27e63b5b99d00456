#include "fbmlab/pipeline.hpp"

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <thread>

#include <json.hpp>

#include "fbmlab/errors.hpp"
#include "fbmlab/field_io.hpp"

namespace fbm {

using nlohmann::json;

namespace {

json point_json(const Point& z, int dim) {
    json a = json::array();
    for (int i = 0; i < dim; ++i) a.push_back(z[i]);
    return a;
}

void write_json(const std::string& path, const json& j) {
    std::ofstream os(path);
    if (!os) throw ConfigError("cannot open " + path + " for writing");
    os << j.dump(2) << "\n";
}

// Radii where the centered differences of the ghost identities fit in the box.
std::vector<double> identity_radii(const Scenario& s, const Point& z) {
    std::vector<double> out;
    for (double r : s.radii()) {
        if (r - s.grid.h > 0.0 && s.grid.contains_ball(z, r + s.grid.h)) out.push_back(r);
    }
    return out;
}

}  // namespace

int exit_code_for(const std::exception& e) {
    if (dynamic_cast<const ConfigError*>(&e)) return 2;
    if (dynamic_cast<const SolverError*>(&e) || dynamic_cast<const DivergedError*>(&e)) return 3;
    if (dynamic_cast<const GeometryError*>(&e)) return 4;
    return 1;
}

ScalarField run_minimize_stage(const Scenario& s, const std::string& field_out,
                               const std::string& report_out) {
    const Problem p = s.problem();
    json rep;
    rep["grid_h"] = s.grid.h;
    rep["model"] = s.model.name();
    rep["alpha"] = s.model.alpha;
    rep["lambda"] = p.lambda;
    rep["eps"] = p.eps;
    ScalarField u;
    switch (s.field_source) {
        case FieldSource::BoundaryData:
            rep["source"] = "boundary_data";
            u = boundary_values(p);
            break;
        case FieldSource::File: {
            rep["source"] = "file";
            rep["path"] = s.field_path;
            u = read_scalar_field(s.field_path);
            if (!u.grid.same_as(s.grid)) throw ConfigError("field.path: grid differs from the scenario grid");
            break;
        }
        case FieldSource::Minimize: {
            rep["source"] = "minimize";
            const ScalarField u0 = harmonic_extension(p);
            auto [um, mr] = minimize(p, u0, s.minimize);
            u = std::move(um);
            rep["iterations"] = mr.iterations;
            rep["initial_energy"] = mr.initial_energy;
            rep["final_energy"] = mr.final_energy;
            rep["gradient_norm"] = mr.gradient_norm;
            rep["converged"] = mr.converged;
            rep["stop_reason"] = mr.stop_reason;
            rep["step_history"] = mr.step_history;
            rep["energy_history"] = mr.energy_history;
            break;
        }
    }
    const double lip = max_norm(gradient(u));
    rep["lipschitz"] = lip;
    DensityModel scan_model = s.model;
    scan_model.t_max = std::max(s.model.t_max, lip * lip);
    const StructuralReport sr = check_structural(scan_model);
    rep["structural"] = {{"t_max", scan_model.t_max},
                         {"c0_observed", sr.c0_observed},
                         {"C0_observed", sr.C0_observed},
                         {"F2_margin", sr.F2_margin},
                         {"pass", sr.pass}};
    rep["free_boundary_points"] = free_boundary_points(u).size();
    write_field(field_out, u);
    if (!report_out.empty()) write_json(report_out, rep);
    return u;
}

std::vector<Point> select_points(const Scenario& s, const ScalarField& u) {
    if (!s.auto_points) {
        for (const Point& z : s.points) {
            if (!s.grid.contains(z)) throw GeometryError("point of interest lies outside the grid");
        }
        return s.points;
    }
    std::vector<Point> fit;
    for (const Point& z : free_boundary_points(u)) {
        if (s.grid.contains_ball(z, s.r_max * (1.0 + s.margin))) fit.push_back(z);
    }
    std::vector<Point> out;
    for (std::size_t i = 0; i < fit.size(); i += static_cast<std::size_t>(s.auto_stride)) {
        out.push_back(fit[i]);
        if (s.auto_max_points > 0 && static_cast<int>(out.size()) >= s.auto_max_points) break;
    }
    if (out.empty()) throw GeometryError("no free-boundary point admits the radius range");
    return out;
}

GhostFunction run_ghost_stage(const Scenario& s, const ScalarField& u, const Point& z,
                              const std::string& ghost_out, const std::string& report_out) {
    const FluxField U = flux_field(u, s.model, z, s.F0_value());
    GhostFunction g = neumann_solve(U, s.neumann_tol);
    const int dim = s.grid.dim;
    json rep;
    rep["z"] = point_json(z, dim);
    rep["F0"] = U.F0;
    rep["cap_radius"] = U.cap_radius;
    rep["iterations"] = g.iterations;
    rep["weak_divergence_residual"] = g.relative_residual;
    const StabilityReport st = decomposition_stability_check(U.field, g);
    rep["stability"] = {{"s", 1.5}, {"phi_norm", st.phi_norm}, {"U_norm", st.U_norm}, {"ratio", st.ratio}};
    const SmallUReport sm = smallU_bound_check(U, s.model, u);
    rep["smallU"] = {{"max_violation", sm.max_violation}, {"eps_star", sm.eps_star},
                     {"lipschitz", sm.lipschitz}, {"C_Lip", sm.C_Lip}, {"pass", sm.pass}};
    const std::vector<double> radii = identity_radii(s, z);
    json shell = json::array();
    for (const auto& row : shell_identity_check(U.field, g, z, radii)) {
        shell.push_back({{"r", row.r}, {"flux", row.flux}, {"d_shell", row.d_shell}, {"mismatch", row.mismatch}});
    }
    rep["shell_identity"] = shell;
    json raj = json::array();
    for (const auto& row : raj_identity_check(U.field, g, z, radii)) {
        raj.push_back({{"r", row.r}, {"d_mean_phi", row.d_mean_phi}, {"mean_radial_U", row.mean_radial_U},
                       {"gap", row.gap}, {"corrected_gap", row.corrected_gap}});
    }
    rep["raj_identity"] = raj;
    json pron = json::array();
    for (double r : radii) pron.push_back({{"r", r}, {"value", flux_energy_ratio(U, r)}});
    rep["flux_energy_ratio"] = pron;
    FieldMeta meta;
    meta.base_point = z;
    meta.F0 = U.F0;
    write_field(ghost_out, g.potential, meta);
    if (!report_out.empty()) write_json(report_out, rep);
    return g;
}

GhostFunction load_ghost(const std::string& path) {
    FieldMeta meta;
    GhostFunction g;
    g.potential = read_scalar_field(path, &meta);
    if (!meta.base_point || !meta.F0) throw ConfigError(path + ": header lacks base_point or F0");
    g.z = *meta.base_point;
    g.F0 = *meta.F0;
    return g;
}

MonotonicityReport run_monotonicity_stage(const Scenario& s, const ScalarField& u,
                                          const GhostFunction& g, const std::string& csv_out) {
    if (!g.potential.grid.same_as(u.grid)) throw ContractError("ghost and field grids differ");
    const MonotonicityReport rep = scan(u, s.model, s.lambda_value(), g.z, s.radii(), g);
    write_report_csv(csv_out, rep);
    return rep;
}

std::string run_blowup_stage(const Scenario& s, const ScalarField& u, const Point& z,
                             const std::string& csv_out) {
    std::vector<double> scales = s.blowup_scales.empty() ? dyadic_scales(u.grid, z) : s.blowup_scales;
    std::string verdict = "unavailable";
    BlowupSequence seq;
    if (u.grid.dim == 3 && check_flatness_condition(s.model).pass && scales.size() >= 2) {
        const RegularityReport rr = regularity_verdict(u, s.model, z, scales, s.blowup);
        seq = rr.sequence;
        verdict = verdict_name(rr.verdict);
    } else {
        seq = blowup_sequence(u, z, scales, s.blowup);
    }
    std::ofstream os(csv_out);
    if (!os) throw ConfigError("cannot open " + csv_out + " for writing");
    const int dim = u.grid.dim;
    os << "scale,deviation,deficit,e_x,e_y" << (dim == 3 ? ",e_z" : "") << "\n";
    for (const auto& r : seq.scales) {
        os << format_double(r.scale) << "," << format_double(r.deviation) << "," << format_double(r.deficit);
        for (int a = 0; a < dim; ++a) os << "," << format_double(r.e_best[a]);
        os << "\n";
    }
    return verdict;
}

int thread_cap() {
    int cap = static_cast<int>(std::thread::hardware_concurrency());
    if (const char* env = std::getenv("FBMLAB_THREADS")) {
        try {
            const int v = std::stoi(env);
            if (v >= 1) cap = v;
        } catch (const std::exception&) {
        }
    }
    return std::max(1, cap);
}

int run_pipeline(const Scenario& s) {
    namespace fs = std::filesystem;
    fs::create_directories(s.output_dir);
    const auto out = [&](const std::string& name) { return (fs::path(s.output_dir) / name).string(); };

    const ScalarField u = run_minimize_stage(s, out("field.bin"), out("minimize.json"));
    write_points_csv(out("free_boundary.csv"), free_boundary_points(u), u.grid.dim);
    const std::vector<Point> points = select_points(s, u);

    struct Result {
        int violations = 0;
        double tol_mono = 0.0;
        std::string verdict;
    };
    std::vector<Result> results(points.size());
    std::vector<std::exception_ptr> errors(points.size());
    auto work = [&](std::size_t k) {
        try {
            const std::string idx = std::to_string(k);
            const GhostFunction g =
                run_ghost_stage(s, u, points[k], out("ghost_" + idx + ".bin"), out("ghost_" + idx + ".json"));
            const MonotonicityReport mr = run_monotonicity_stage(s, u, g, out("monotonicity_" + idx + ".csv"));
            results[k].violations = mr.violations;
            results[k].tol_mono = mr.tol_mono;
            if (s.blowup_enabled) {
                results[k].verdict = run_blowup_stage(s, u, points[k], out("blowup_" + idx + ".csv"));
            }
        } catch (...) {
            errors[k] = std::current_exception();
        }
    };
    const int workers = std::min<int>(thread_cap(), static_cast<int>(points.size()));
    if (workers <= 1) {
        for (std::size_t k = 0; k < points.size(); ++k) work(k);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (std::size_t k = next++; k < points.size(); k = next++) work(k);
            });
        }
        for (auto& t : pool) t.join();
    }
    for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }

    json summary;
    summary["seed"] = s.seed;
    summary["dim"] = s.grid.dim;
    summary["h"] = s.grid.h;
    summary["model"] = s.model.name();
    summary["alpha"] = s.model.alpha;
    summary["lambda"] = s.lambda_value();
    summary["F0"] = s.F0_value();
    summary["radii"] = s.radii();
    json pts = json::array();
    int total = 0;
    for (std::size_t k = 0; k < points.size(); ++k) {
        json p;
        p["index"] = k;
        p["z"] = point_json(points[k], s.grid.dim);
        p["violations"] = results[k].violations;
        p["tol_mono"] = results[k].tol_mono;
        if (s.blowup_enabled) p["verdict"] = results[k].verdict;
        pts.push_back(p);
        total += results[k].violations;
    }
    summary["points"] = pts;
    summary["total_violations"] = total;
    write_json(out("summary.json"), summary);
    return total;
}

}  // namespace fbm
