#include <CLI11.hpp>
#include <cstdio>
#include <string>
#include <vector>

#include "fwtraj/errors.hpp"
#include "fwtraj/scenario.hpp"

namespace {

// exit codes: 0 converged, 2 max-iter-reached, 3 input error, 4 numerical failure
constexpr int kExitConverged = 0;
constexpr int kExitMaxIter = 2;
constexpr int kExitInputError = 3;
constexpr int kExitNumerical = 4;

std::vector<int> parse_steps(const std::string& csv)
{
    std::vector<int> out;
    size_t pos = 0;
    while (pos < csv.size())
    {
        const size_t comma = csv.find(',', pos);
        const std::string tok = csv.substr(pos, comma == std::string::npos ? comma : comma - pos);
        try
        {
            out.push_back(std::stoi(tok));
        }
        catch (...)
        {
            throw fwtraj::ScenarioError("--steps: expected comma-separated integers, got '" +
                                        tok + "'");
        }
        if (comma == std::string::npos)
            break;
        pos = comma + 1;
    }
    return out;
}

fwtraj::ConfigOverrides make_overrides(const CLI::App& cmd, int steps, int max_iter, double tol,
                                       const std::string& heading_variant)
{
    fwtraj::ConfigOverrides ov;
    if (cmd.count("--steps"))
        ov.steps = steps;
    if (cmd.count("--max-iter"))
        ov.max_iter = max_iter;
    if (cmd.count("--tol"))
        ov.residual_tol = tol;
    if (cmd.count("--heading-variant"))
        ov.heading_variant = heading_variant == "qp" ? fwtraj::HeadingVariant::ConstrainedQp
                                                     : fwtraj::HeadingVariant::UnconstrainedAdmm;
    return ov;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"fwtraj - alternating-minimization trajectory optimizer for fixed-wing UAVs"};
    app.require_subcommand(1);

    std::string scenario_path, scenario_dir, out_dir = "out";
    std::string steps_csv = "50,100", heading_variant = "admm";
    int steps = 0, max_iter = 300;
    double tol = 1e-3;

    CLI::App* solve = app.add_subcommand("solve", "solve one scenario file");
    solve->add_option("scenario", scenario_path, "scenario .json file")->required();
    solve->add_option("--steps", steps, "override planning steps n");
    solve->add_option("--max-iter", max_iter, "override iteration limit");
    solve->add_option("--tol", tol, "override residual tolerance");
    solve->add_option("--out", out_dir, "output directory (default: out)");
    solve->add_option("--heading-variant", heading_variant, "admm|qp")
        ->check(CLI::IsMember({"admm", "qp"}));

    CLI::App* bench = app.add_subcommand("bench", "run a directory of scenarios");
    bench->add_option("dir", scenario_dir, "directory of scenario .json files")->required();
    bench->add_option("--steps", steps_csv, "comma-separated step counts (default: 50,100)");
    bench->add_option("--max-iter", max_iter, "override iteration limit");
    bench->add_option("--tol", tol, "override residual tolerance");
    bench->add_option("--out", out_dir, "output directory (default: out)");
    bench->add_option("--heading-variant", heading_variant, "admm|qp")
        ->check(CLI::IsMember({"admm", "qp"}));

    CLI11_PARSE(app, argc, argv);

    try
    {
        if (solve->parsed())
        {
            fwtraj::Scenario sc = fwtraj::load_scenario(scenario_path);
            make_overrides(*solve, steps, max_iter, tol, heading_variant).apply(sc);
            const fwtraj::RunReport rep = fwtraj::run_scenario(sc, out_dir);
            const auto& m = rep.metrics;
            std::printf("%s: %s in %d iterations, %.3fs wall\n", rep.scenario_id.c_str(),
                        m.converged ? "converged" : "max-iter-reached", m.iterations,
                        m.wall_time);
            std::printf("  final position residual %.3f m, arc length %.1f m\n",
                        m.final_position_residual, m.arc_length);
            std::printf("  control norms: |gamma_dot| %.3f rad/s, |phi_dot| %.3f rad/s, "
                        "|v_dot| %.3f m/s^2\n",
                        m.gamma_dot_norm, m.phi_dot_norm, m.v_dot_norm);
            std::printf("  outputs in %s\n", out_dir.c_str());
            return m.converged ? kExitConverged : kExitMaxIter;
        }

        // bench
        const std::vector<int> step_counts = parse_steps(steps_csv);
        fwtraj::BatchSummary summary = fwtraj::run_batch(
            scenario_dir, step_counts, make_overrides(*bench, steps, max_iter, tol,
                                                      heading_variant),
            out_dir);
        if (summary.runs.empty())
            std::fprintf(stderr, "warning: no scenario files found in %s\n",
                         scenario_dir.c_str());
        for (const auto& r : summary.runs)
        {
            if (r.failed)
                std::printf("%-28s FAILED: %s\n", r.scenario_id.c_str(), r.error.c_str());
            else
                std::printf("%-28s %s iters=%-4d miss=%6.2f m wall=%.3fs\n",
                            r.scenario_id.c_str(),
                            r.metrics.converged ? "converged " : "max-iter  ",
                            r.metrics.iterations, r.metrics.final_position_residual,
                            r.metrics.wall_time);
        }
        std::printf("aggregate written to %s\n", (out_dir + "/aggregate.json").c_str());
        if (summary.any_failed())
            return kExitNumerical;
        return summary.all_converged() ? kExitConverged : kExitMaxIter;
    }
    catch (const fwtraj::ScenarioError& e)
    {
        std::fprintf(stderr, "input error: %s\n", e.what());
        return kExitInputError;
    }
    catch (const fwtraj::DimensionError& e)
    {
        std::fprintf(stderr, "input error: %s\n", e.what());
        return kExitInputError;
    }
    catch (const fwtraj::DegenerateSpecError& e)
    {
        std::fprintf(stderr, "input error: %s\n", e.what());
        return kExitInputError;
    }
    catch (const std::exception& e)
    {
        std::fprintf(stderr, "numerical failure: %s\n", e.what());
        return kExitNumerical;
    }
}
