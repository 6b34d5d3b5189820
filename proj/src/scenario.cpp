#include "fwtraj/scenario.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <json.hpp>

#include "fwtraj/errors.hpp"

namespace fwtraj {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& field, const std::string& why)
{
    throw ScenarioError(field + ": " + why);
}

void reject_unknown(const json& obj, const std::string& where,
                    std::initializer_list<const char*> allowed)
{
    for (auto it = obj.begin(); it != obj.end(); ++it)
    {
        if (std::find_if(allowed.begin(), allowed.end(),
                         [&](const char* k) { return it.key() == k; }) == allowed.end())
            fail(where.empty() ? it.key() : where + "." + it.key(), "unknown field");
    }
}

double get_number(const json& obj, const std::string& where, const char* key)
{
    if (!obj.contains(key))
        fail(where + "." + key, "missing required field");
    if (!obj[key].is_number())
        fail(where + "." + key, "expected a number");
    return obj[key].get<double>();
}

double get_number_or(const json& obj, const std::string& where, const char* key, double fallback)
{
    if (!obj.contains(key))
        return fallback;
    if (!obj[key].is_number())
        fail(where + "." + key, "expected a number");
    return obj[key].get<double>();
}

Eigen::Vector3d get_vec3(const json& obj, const std::string& where, const char* key)
{
    if (!obj.contains(key))
        fail(where + "." + key, "missing required field");
    const json& v = obj[key];
    if (!v.is_array() || v.size() != 3 || !v[0].is_number() || !v[1].is_number() ||
        !v[2].is_number())
        fail(where + "." + key, "expected an array of 3 numbers");
    return {v[0].get<double>(), v[1].get<double>(), v[2].get<double>()};
}

json vec3_to_json(const Eigen::Vector3d& v) { return json::array({v.x(), v.y(), v.z()}); }

std::string format_double(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

void write_text_file(const std::filesystem::path& path, const std::string& text)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw ScenarioError("cannot open for writing: " + path.string());
    out << text;
    if (!out)
        throw ScenarioError("write failed: " + path.string());
}

}  // namespace

void ConfigOverrides::apply(Scenario& scenario) const
{
    if (steps)
        scenario.spec.horizon.n = *steps;
    if (max_iter)
        scenario.config.max_iter = *max_iter;
    if (residual_tol)
        scenario.config.residual_tol = *residual_tol;
    if (heading_variant)
        scenario.config.heading_variant = *heading_variant;
}

Scenario load_scenario(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw ScenarioError("cannot open scenario file: " + path.string());
    json doc;
    try
    {
        doc = json::parse(in);
    }
    catch (const json::parse_error& e)
    {
        throw ScenarioError("parse error in " + path.string() + ": " + e.what());
    }
    if (!doc.is_object())
        fail(path.string(), "top level must be an object");

    Scenario sc;
    sc.id = path.stem().string();

    reject_unknown(doc, "",
                   {"schema_version", "start", "goal", "limits", "obstacles", "vehicle_radius",
                    "horizon", "solver"});

    if (!doc.contains("schema_version") || !doc["schema_version"].is_number_integer())
        fail("schema_version", "missing or not an integer");
    if (doc["schema_version"].get<int>() != kScenarioSchemaVersion)
        fail("schema_version", "unsupported version " + doc["schema_version"].dump() +
                                   " (expected " + std::to_string(kScenarioSchemaVersion) + ")");

    if (!doc.contains("start") || !doc["start"].is_object())
        fail("start", "missing or not an object");
    const json& start = doc["start"];
    reject_unknown(start, "start",
                   {"position", "velocity", "acceleration", "heading", "heading_rate"});
    sc.spec.start.position = get_vec3(start, "start", "position");
    sc.spec.start.velocity = get_vec3(start, "start", "velocity");
    if (start.contains("acceleration"))
        sc.spec.start.acceleration = get_vec3(start, "start", "acceleration");
    if (start.contains("heading"))
    {
        if (!start["heading"].is_number())
            fail("start.heading", "expected a number");
        sc.spec.start.heading = start["heading"].get<double>();
    }
    sc.spec.start.heading_rate = get_number_or(start, "start", "heading_rate", 0.0);

    sc.spec.goal = get_vec3(doc, "", "goal");

    if (!doc.contains("limits") || !doc["limits"].is_object())
        fail("limits", "missing or not an object");
    const json& lim = doc["limits"];
    reject_unknown(lim, "limits", {"v_min", "v_max", "gamma_max", "phi_max", "g"});
    sc.spec.limits.v_min = get_number(lim, "limits", "v_min");
    sc.spec.limits.v_max = get_number(lim, "limits", "v_max");
    sc.spec.limits.gamma_max = get_number(lim, "limits", "gamma_max");
    sc.spec.limits.phi_max = get_number(lim, "limits", "phi_max");
    sc.spec.limits.g = get_number_or(lim, "limits", "g", 9.81);

    if (doc.contains("obstacles"))
    {
        if (!doc["obstacles"].is_array())
            fail("obstacles", "expected an array");
        int idx = 0;
        for (const json& o : doc["obstacles"])
        {
            const std::string where = "obstacles[" + std::to_string(idx) + "]";
            if (!o.is_object())
                fail(where, "expected an object");
            reject_unknown(o, where, {"center", "semi_axes"});
            Ellipsoid e;
            e.center = get_vec3(o, where, "center");
            e.semi_axes = get_vec3(o, where, "semi_axes");
            sc.raw_obstacles.push_back(e);
            ++idx;
        }
    }

    sc.vehicle_radius = get_number_or(doc, "", "vehicle_radius", 0.0);
    if (sc.vehicle_radius < 0.0)
        fail("vehicle_radius", "must be >= 0");
    sc.spec.obstacles = inflate_obstacles(sc.raw_obstacles, sc.vehicle_radius);

    if (!doc.contains("horizon") || !doc["horizon"].is_object())
        fail("horizon", "missing or not an object");
    const json& hor = doc["horizon"];
    reject_unknown(hor, "horizon", {"n", "degree", "total_time"});
    if (!hor.contains("n") || !hor["n"].is_number_integer())
        fail("horizon.n", "missing or not an integer");
    sc.spec.horizon.n = hor["n"].get<int>();
    if (hor.contains("degree"))
    {
        if (!hor["degree"].is_number_integer())
            fail("horizon.degree", "expected an integer");
        sc.spec.horizon.degree = hor["degree"].get<int>();
    }
    if (hor.contains("total_time"))
    {
        const json& tt = hor["total_time"];
        if (tt.is_string())
        {
            if (tt.get<std::string>() != "auto")
                fail("horizon.total_time", "expected a number or \"auto\"");
            sc.spec.horizon.total_time.reset();
        }
        else if (tt.is_number())
        {
            sc.spec.horizon.total_time = tt.get<double>();
        }
        else
        {
            fail("horizon.total_time", "expected a number or \"auto\"");
        }
    }

    if (doc.contains("solver"))
    {
        if (!doc["solver"].is_object())
            fail("solver", "expected an object");
        const json& sv = doc["solver"];
        reject_unknown(sv, "solver",
                       {"max_iter", "residual_tol", "rho_nh", "rho_c", "rho_in", "w_goal",
                        "w_smooth", "pre_iterations", "heading_variant"});
        if (sv.contains("max_iter"))
        {
            if (!sv["max_iter"].is_number_integer())
                fail("solver.max_iter", "expected an integer");
            sc.config.max_iter = sv["max_iter"].get<int>();
        }
        sc.config.residual_tol =
            get_number_or(sv, "solver", "residual_tol", sc.config.residual_tol);
        sc.spec.weights.rho_nh = get_number_or(sv, "solver", "rho_nh", 1.0);
        sc.spec.weights.rho_c = get_number_or(sv, "solver", "rho_c", 1.0);
        sc.spec.weights.rho_in = get_number_or(sv, "solver", "rho_in", 1.0);
        sc.spec.weights.w_goal = get_number_or(sv, "solver", "w_goal", 1.0);
        sc.spec.weights.w_smooth = get_number_or(sv, "solver", "w_smooth", 1.0);
        if (sv.contains("pre_iterations"))
        {
            if (!sv["pre_iterations"].is_number_integer())
                fail("solver.pre_iterations", "expected an integer");
            sc.config.pre_iterations = sv["pre_iterations"].get<int>();
        }
        if (sv.contains("heading_variant"))
        {
            const std::string hv = sv["heading_variant"].is_string()
                                       ? sv["heading_variant"].get<std::string>()
                                       : std::string();
            if (hv == "admm")
                sc.config.heading_variant = HeadingVariant::UnconstrainedAdmm;
            else if (hv == "qp")
                sc.config.heading_variant = HeadingVariant::ConstrainedQp;
            else
                fail("solver.heading_variant", "expected \"admm\" or \"qp\"");
        }
    }

    try
    {
        validate_spec(sc.spec);
    }
    catch (const std::exception& e)
    {
        throw ScenarioError(std::string(e.what()) + " (scenario " + sc.id + ")");
    }
    return sc;
}

std::string scenario_to_json(const Scenario& sc)
{
    json doc;
    doc["schema_version"] = kScenarioSchemaVersion;
    json start;
    start["position"] = vec3_to_json(sc.spec.start.position);
    start["velocity"] = vec3_to_json(sc.spec.start.velocity);
    start["acceleration"] = vec3_to_json(sc.spec.start.acceleration);
    if (sc.spec.start.heading)
        start["heading"] = *sc.spec.start.heading;
    start["heading_rate"] = sc.spec.start.heading_rate;
    doc["start"] = start;
    doc["goal"] = vec3_to_json(sc.spec.goal);
    doc["limits"] = {{"v_min", sc.spec.limits.v_min},
                     {"v_max", sc.spec.limits.v_max},
                     {"gamma_max", sc.spec.limits.gamma_max},
                     {"phi_max", sc.spec.limits.phi_max},
                     {"g", sc.spec.limits.g}};
    doc["obstacles"] = json::array();
    for (const auto& e : sc.raw_obstacles)
        doc["obstacles"].push_back(
            {{"center", vec3_to_json(e.center)}, {"semi_axes", vec3_to_json(e.semi_axes)}});
    doc["vehicle_radius"] = sc.vehicle_radius;
    json hor;
    hor["n"] = sc.spec.horizon.n;
    hor["degree"] = sc.spec.horizon.degree;
    if (sc.spec.horizon.total_time)
        hor["total_time"] = *sc.spec.horizon.total_time;
    else
        hor["total_time"] = "auto";
    doc["horizon"] = hor;
    doc["solver"] = {{"max_iter", sc.config.max_iter},
                     {"residual_tol", sc.config.residual_tol},
                     {"rho_nh", sc.spec.weights.rho_nh},
                     {"rho_c", sc.spec.weights.rho_c},
                     {"rho_in", sc.spec.weights.rho_in},
                     {"w_goal", sc.spec.weights.w_goal},
                     {"w_smooth", sc.spec.weights.w_smooth},
                     {"pre_iterations", sc.config.pre_iterations},
                     {"heading_variant", sc.config.heading_variant ==
                                                 HeadingVariant::UnconstrainedAdmm
                                             ? "admm"
                                             : "qp"}};
    return doc.dump(2) + "\n";
}

void save_scenario(const Scenario& scenario, const std::filesystem::path& path)
{
    write_text_file(path, scenario_to_json(scenario));
}

RunReport run_scenario(const Scenario& scenario, const std::filesystem::path& output_dir)
{
    std::filesystem::create_directories(output_dir);

    Solver solver(scenario.spec, scenario.config);
    TrajectorySolution sol = solver.solve();

    RunReport rep;
    rep.scenario_id = scenario.id;
    rep.metrics = sol.metrics;
    rep.residuals = sol.residuals;

    // trajectory CSV
    std::string csv = "t,x,y,z,psi,gamma,v,v_dot,gamma_dot,phi,phi_dot,psi_dot\n";
    for (int t = 0; t < scenario.spec.horizon.n; ++t)
    {
        csv += format_double(sol.t(t)) + "," + format_double(sol.x(t)) + "," +
               format_double(sol.y(t)) + "," + format_double(sol.z(t)) + "," +
               format_double(sol.psi(t)) + "," + format_double(sol.gamma(t)) + "," +
               format_double(sol.v(t)) + "," + format_double(sol.controls.v_dot(t)) + "," +
               format_double(sol.controls.gamma_dot(t)) + "," +
               format_double(sol.controls.phi(t)) + "," + format_double(sol.controls.phi_dot(t)) +
               "," + format_double(sol.controls.psi_dot(t)) + "\n";
    }
    rep.trajectory_csv = output_dir / (scenario.id + "_trajectory.csv");
    write_text_file(rep.trajectory_csv, csv);

    // convergence CSV
    std::string conv = "iter,r_kinematic,r_collision,r_heading_rate\n";
    for (size_t k = 0; k < sol.residuals.iterations(); ++k)
    {
        conv += std::to_string(k + 1) + "," + format_double(sol.residuals.mean_kinematic[k]) +
                "," + format_double(sol.residuals.mean_collision[k]) + "," +
                format_double(sol.residuals.mean_heading_rate[k]) + "\n";
    }
    rep.convergence_csv = output_dir / (scenario.id + "_convergence.csv");
    write_text_file(rep.convergence_csv, conv);

    // summary record
    json summary;
    summary["scenario"] = scenario.id;
    summary["status"] =
        sol.status == SolveStatus::Converged ? "converged" : "max-iter-reached";
    summary["iterations"] = sol.iterations;
    summary["total_time"] = sol.total_time;
    summary["steps"] = scenario.spec.horizon.n;
    summary["metrics"] = {{"gamma_dot_norm", sol.metrics.gamma_dot_norm},
                          {"phi_dot_norm", sol.metrics.phi_dot_norm},
                          {"v_dot_norm", sol.metrics.v_dot_norm},
                          {"final_position_residual", sol.metrics.final_position_residual},
                          {"arc_length", sol.metrics.arc_length},
                          {"wall_time", sol.metrics.wall_time},
                          {"iterations", sol.metrics.iterations},
                          {"converged", sol.metrics.converged}};
    rep.summary_json = output_dir / (scenario.id + "_summary.json");
    write_text_file(rep.summary_json, summary.dump(2) + "\n");

    rep.solution = std::move(sol);
    return rep;
}

namespace {

std::vector<std::pair<std::string, double>> metric_fields(const SolutionMetrics& m)
{
    return {{"gamma_dot_norm", m.gamma_dot_norm},
            {"phi_dot_norm", m.phi_dot_norm},
            {"v_dot_norm", m.v_dot_norm},
            {"final_position_residual", m.final_position_residual},
            {"arc_length", m.arc_length},
            {"wall_time", m.wall_time},
            {"iterations", static_cast<double>(m.iterations)},
            {"converged", m.converged ? 1.0 : 0.0}};
}

double median_of(std::vector<double> v)
{
    std::sort(v.begin(), v.end());
    const size_t n = v.size();
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

std::vector<AggregateStat> BatchSummary::aggregate(int steps) const
{
    std::vector<AggregateStat> out;
    std::vector<const BatchEntry*> ok;
    for (const auto& r : runs)
        if (!r.failed && r.steps == steps)
            ok.push_back(&r);
    if (ok.empty())
        return out;
    const auto names = metric_fields(ok.front()->metrics);
    for (size_t f = 0; f < names.size(); ++f)
    {
        std::vector<double> vals;
        vals.reserve(ok.size());
        for (const auto* r : ok)
            vals.push_back(metric_fields(r->metrics)[f].second);
        AggregateStat st;
        st.metric = names[f].first;
        st.median = median_of(vals);
        st.min = *std::min_element(vals.begin(), vals.end());
        st.max = *std::max_element(vals.begin(), vals.end());
        out.push_back(st);
    }
    return out;
}

bool BatchSummary::all_converged() const
{
    for (const auto& r : runs)
        if (r.failed || !r.metrics.converged)
            return false;
    return true;
}

bool BatchSummary::any_failed() const
{
    for (const auto& r : runs)
        if (r.failed)
            return true;
    return false;
}

BatchSummary run_batch(const std::filesystem::path& scenario_dir,
                       const std::vector<int>& step_counts, const ConfigOverrides& overrides,
                       const std::filesystem::path& output_dir)
{
    if (!std::filesystem::is_directory(scenario_dir))
        throw ScenarioError("not a scenario directory: " + scenario_dir.string());
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(scenario_dir))
        if (entry.is_regular_file() && entry.path().extension() == ".json")
            files.push_back(entry.path());
    std::sort(files.begin(), files.end());

    std::filesystem::create_directories(output_dir);
    BatchSummary summary;
    for (const auto& file : files)
    {
        for (int steps : step_counts.empty() ? std::vector<int>{0} : step_counts)
        {
            BatchEntry entry;
            try
            {
                Scenario sc = load_scenario(file);
                overrides.apply(sc);
                if (steps > 0)
                    sc.spec.horizon.n = steps;
                entry.steps = sc.spec.horizon.n;
                sc.id += "_n" + std::to_string(sc.spec.horizon.n);
                entry.scenario_id = sc.id;
                RunReport rep = run_scenario(sc, output_dir);
                entry.metrics = rep.metrics;
            }
            catch (const std::exception& e)
            {
                entry.failed = true;
                entry.error = e.what();
                if (entry.scenario_id.empty())
                    entry.scenario_id = file.stem().string();
            }
            summary.runs.push_back(std::move(entry));
        }
    }

    // aggregate outputs
    std::vector<int> variants;
    for (const auto& r : summary.runs)
        if (!r.failed && std::find(variants.begin(), variants.end(), r.steps) == variants.end())
            variants.push_back(r.steps);
    std::sort(variants.begin(), variants.end());

    json agg;
    agg["runs"] = json::array();
    for (const auto& r : summary.runs)
    {
        json jr;
        jr["scenario"] = r.scenario_id;
        jr["steps"] = r.steps;
        jr["failed"] = r.failed;
        if (r.failed)
            jr["error"] = r.error;
        else
            for (const auto& [name, val] : metric_fields(r.metrics))
                jr[name] = val;
        agg["runs"].push_back(jr);
    }
    std::string csv = "steps,metric,median,min,max\n";
    for (int steps : variants)
    {
        json jstats;
        for (const auto& st : summary.aggregate(steps))
        {
            jstats[st.metric] = {{"median", st.median}, {"min", st.min}, {"max", st.max}};
            csv += std::to_string(steps) + "," + st.metric + "," + format_double(st.median) +
                   "," + format_double(st.min) + "," + format_double(st.max) + "\n";
        }
        agg["aggregate"][std::to_string(steps)] = jstats;
    }
    write_text_file(output_dir / "aggregate.json", agg.dump(2) + "\n");
    write_text_file(output_dir / "aggregate.csv", csv);
    return summary;
}

}  // namespace fwtraj
