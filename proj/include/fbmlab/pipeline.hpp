#pragma once

#include <exception>
#include <string>
#include <vector>

#include "fbmlab/blowup.hpp"
#include "fbmlab/ghost.hpp"
#include "fbmlab/minimizer.hpp"
#include "fbmlab/monotonicity.hpp"
#include "fbmlab/scenario.hpp"

namespace fbm {

/// Exit statuses: 0 ok, 1 other error, 2 configuration, 3 solver, 4 geometry.
int exit_code_for(const std::exception& e);

/// Field for the scenario: minimized, sampled from the boundary data, or loaded.
/// Writes the field (and a minimize report when one is produced).
ScalarField run_minimize_stage(const Scenario& s, const std::string& field_out,
                               const std::string& report_out);

/// Free-boundary points admitting B_{r_max (1 + margin)}, every auto_stride-th
/// in lexicographic order, or the explicit list. GeometryError if none remain.
std::vector<Point> select_points(const Scenario& s, const ScalarField& u);

/// Flux, Neumann solve and identity diagnostics for one base point.
GhostFunction run_ghost_stage(const Scenario& s, const ScalarField& u, const Point& z,
                              const std::string& ghost_out, const std::string& report_out);

MonotonicityReport run_monotonicity_stage(const Scenario& s, const ScalarField& u,
                                          const GhostFunction& g, const std::string& csv_out);

/// CSV columns: scale,deviation,deficit,e_x,e_y[,e_z]. The verdict string is
/// "regular", "inconclusive" or "unavailable".
std::string run_blowup_stage(const Scenario& s, const ScalarField& u, const Point& z,
                             const std::string& csv_out);

/// Reads a ghost file written by run_ghost_stage (potential plus header).
GhostFunction load_ghost(const std::string& path);

/// Worker cap from FBMLAB_THREADS (default: hardware concurrency, at least 1).
int thread_cap();

/// Full pipeline into s.output_dir. Per-point files use the suffix _<index>.
/// Returns the number of monotonicity violations over all points.
int run_pipeline(const Scenario& s);

}  // namespace fbm
