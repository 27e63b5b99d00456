// Command-line front end: minimize | ghost | monotonicity | blowup | pipeline | validate.

#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "fbmlab/errors.hpp"
#include "fbmlab/field_io.hpp"
#include "fbmlab/pipeline.hpp"

int main(int argc, char** argv) {
    CLI::App app{"fbmlab: free-boundary energy, ghost function and monotonicity diagnostics"};
    app.require_subcommand(1);

    std::string config, field, ghost, out, report, zstr, out_dir;

    auto* cmd_min = app.add_subcommand("minimize", "Produce the scenario field and write it");
    cmd_min->add_option("--config", config, "Scenario JSON")->required();
    cmd_min->add_option("--out", out, "Field data file")->required();
    cmd_min->add_option("--report", report, "Report JSON");

    auto* cmd_ghost = app.add_subcommand("ghost", "Solve for the ghost function at one base point");
    cmd_ghost->add_option("--field", field, "Field data file")->required();
    cmd_ghost->add_option("--config", config, "Scenario JSON")->required();
    cmd_ghost->add_option("--z", zstr, "Base point \"x,y[,z]\"")->required();
    cmd_ghost->add_option("--out", out, "Ghost potential data file")->required();
    cmd_ghost->add_option("--report", report, "Report JSON");

    auto* cmd_mono = app.add_subcommand("monotonicity", "Scan A(z, r) over the scenario radii");
    cmd_mono->add_option("--field", field, "Field data file")->required();
    cmd_mono->add_option("--ghost", ghost, "Ghost potential data file")->required();
    cmd_mono->add_option("--config", config, "Scenario JSON")->required();
    cmd_mono->add_option("--out", out, "Report CSV")->required();

    auto* cmd_blow = app.add_subcommand("blowup", "Blow-up deviation and flatness at one point");
    cmd_blow->add_option("--field", field, "Field data file")->required();
    cmd_blow->add_option("--config", config, "Scenario JSON")->required();
    cmd_blow->add_option("--z", zstr, "Base point \"x,y[,z]\"")->required();
    cmd_blow->add_option("--out", out, "Blow-up CSV")->required();

    auto* cmd_pipe = app.add_subcommand("pipeline", "Run every stage for every point of interest");
    cmd_pipe->add_option("--config", config, "Scenario JSON")->required();
    cmd_pipe->add_option("--out-dir", out_dir, "Override output.dir");

    auto* cmd_val = app.add_subcommand("validate", "Check a scenario and list diagnostics");
    cmd_val->add_option("--config", config, "Scenario JSON")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (*cmd_val) {
            const auto diags = fbm::validate_scenario_file(config);
            for (const auto& d : diags) std::cout << d.str() << "\n";
            return diags.empty() ? 0 : 2;
        }
        fbm::Scenario s = fbm::load_scenario(config);
        auto load_field = [&] {
            fbm::ScalarField u = fbm::read_scalar_field(field);
            if (!u.grid.same_as(s.grid)) throw fbm::ConfigError(field + ": grid differs from the scenario grid");
            return u;
        };
        if (*cmd_min) {
            fbm::run_minimize_stage(s, out, report);
        } else if (*cmd_ghost) {
            const fbm::ScalarField u = load_field();
            const fbm::Point z = fbm::parse_point(zstr, s.grid.dim);
            if (!s.grid.contains(z)) throw fbm::GeometryError("z lies outside the grid");
            fbm::run_ghost_stage(s, u, z, out, report);
        } else if (*cmd_mono) {
            const fbm::ScalarField u = load_field();
            const fbm::GhostFunction g = fbm::load_ghost(ghost);
            const auto rep = fbm::run_monotonicity_stage(s, u, g, out);
            std::cout << "violations " << rep.violations << " tol_mono " << fbm::format_double(rep.tol_mono) << "\n";
        } else if (*cmd_blow) {
            const fbm::ScalarField u = load_field();
            const fbm::Point z = fbm::parse_point(zstr, s.grid.dim);
            if (!s.grid.contains(z)) throw fbm::GeometryError("z lies outside the grid");
            std::cout << "verdict " << fbm::run_blowup_stage(s, u, z, out) << "\n";
        } else if (*cmd_pipe) {
            if (!out_dir.empty()) s.output_dir = out_dir;
            const int v = fbm::run_pipeline(s);
            std::cout << "total_violations " << v << "\n";
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return fbm::exit_code_for(e);
    }
    return 0;
}
