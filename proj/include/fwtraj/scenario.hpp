#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "fwtraj/model.hpp"
#include "fwtraj/solver.hpp"

namespace fwtraj {

inline constexpr int kScenarioSchemaVersion = 1;

/// Parsed scenario file: validated problem plus the solver settings it carries.
struct Scenario {
    std::string id;  // file stem
    ProblemSpec spec;  // obstacles already inflated by vehicle_radius
    SolverConfig config;
    double vehicle_radius = 0.0;
    std::vector<Ellipsoid> raw_obstacles;  // as stored in the file, pre-inflation
};

/// CLI flags that take precedence over scenario-file values.
struct ConfigOverrides {
    std::optional<int> steps;
    std::optional<int> max_iter;
    std::optional<double> residual_tol;
    std::optional<HeadingVariant> heading_variant;
    void apply(Scenario& scenario) const;
};

/// Load and validate one scenario file. Throws ScenarioError with the
/// offending field named in the message.
Scenario load_scenario(const std::filesystem::path& path);

/// Serialize back to the documented schema (raw obstacles, not inflated).
std::string scenario_to_json(const Scenario& scenario);
void save_scenario(const Scenario& scenario, const std::filesystem::path& path);

struct RunReport {
    std::string scenario_id;
    SolutionMetrics metrics;
    ResidualReport residuals;
    TrajectorySolution solution;
    std::filesystem::path trajectory_csv;
    std::filesystem::path convergence_csv;
    std::filesystem::path summary_json;
};

/// Solve one scenario and write trajectory CSV, convergence CSV and a summary
/// record into output_dir. CSV layouts:
///   trajectory:  t,x,y,z,psi,gamma,v,v_dot,gamma_dot,phi,phi_dot,psi_dot
///   convergence: iter,r_kinematic,r_collision,r_heading_rate
RunReport run_scenario(const Scenario& scenario, const std::filesystem::path& output_dir);

struct BatchEntry {
    std::string scenario_id;
    int steps = 0;
    bool failed = false;  // solver threw; message in `error`
    std::string error;
    SolutionMetrics metrics;
};

struct AggregateStat {
    std::string metric;
    double median = 0.0, min = 0.0, max = 0.0;
};

struct BatchSummary {
    std::vector<BatchEntry> runs;
    std::vector<AggregateStat> aggregate(int steps) const;  // over successful runs
    bool all_converged() const;
    bool any_failed() const;
};

/// Run every *.json scenario in scenario_dir (sorted by name) at each
/// requested step count. Per-scenario failures are recorded and the batch
/// continues. Writes per-run reports plus aggregate.json / aggregate.csv.
BatchSummary run_batch(const std::filesystem::path& scenario_dir,
                       const std::vector<int>& step_counts, const ConfigOverrides& overrides,
                       const std::filesystem::path& output_dir);

}  // namespace fwtraj
