#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "fwtraj/errors.hpp"
#include "fwtraj/scenario.hpp"

using namespace fwtraj;

namespace {

const std::filesystem::path kScenarioDir = FWTRAJ_SCENARIO_DIR;

std::filesystem::path temp_dir()
{
    const auto dir = std::filesystem::temp_directory_path() / "fwtraj_test";
    std::filesystem::create_directories(dir);
    return dir;
}

void write_file(const std::filesystem::path& p, const std::string& text)
{
    std::ofstream out(p, std::ios::binary);
    out << text;
}

std::string read_file(const std::filesystem::path& p)
{
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

const char* kMinimalScenario = R"({
  "schema_version": 1,
  "start": {"position": [0, 0, 30], "velocity": [10, 0, 0]},
  "goal": [200, 0, 30],
  "limits": {"v_min": 8, "v_max": 15, "gamma_max": 0.43, "phi_max": 0.69},
  "horizon": {"n": 40}
})";

}  // namespace

TEST_CASE("minimal file gets documented defaults")
{
    const auto path = temp_dir() / "minimal.json";
    write_file(path, kMinimalScenario);
    const Scenario sc = load_scenario(path);
    CHECK(sc.spec.horizon.n == 40);
    CHECK(sc.spec.horizon.degree == 10);
    CHECK(!sc.spec.horizon.total_time.has_value());  // auto
    CHECK(sc.spec.weights.rho_nh == 1.0);
    CHECK(sc.spec.weights.rho_c == 1.0);
    CHECK(sc.spec.weights.rho_in == 1.0);
    CHECK(sc.spec.weights.w_goal == 1.0);
    CHECK(sc.spec.weights.w_smooth == 1.0);
    CHECK(sc.config.max_iter == 300);
    CHECK(sc.config.residual_tol == 1e-3);
    CHECK(sc.config.heading_variant == HeadingVariant::UnconstrainedAdmm);
    CHECK(sc.spec.limits.g == doctest::Approx(9.81));
    CHECK(!sc.spec.start.heading.has_value());
}

TEST_CASE("validation errors name the offending field")
{
    const auto path = temp_dir() / "bad_limits.json";
    std::string text = kMinimalScenario;
    text.replace(text.find("\"v_min\": 8"), 10, "\"v_min\": 20");
    write_file(path, text);
    try
    {
        load_scenario(path);
        FAIL("expected ScenarioError");
    }
    catch (const ScenarioError& e)
    {
        CHECK(std::string(e.what()).find("limits.v_min") != std::string::npos);
    }
}

TEST_CASE("unknown fields are rejected")
{
    const auto path = temp_dir() / "unknown.json";
    std::string text = kMinimalScenario;
    text.replace(text.find("\"goal\""), 6, "\"goal2\"");
    write_file(path, text);
    CHECK_THROWS_AS(load_scenario(path), ScenarioError);

    // nested unknown fields too
    const auto path2 = temp_dir() / "unknown2.json";
    std::string text2 = kMinimalScenario;
    text2.replace(text2.find("\"v_min\""), 7, "\"vmin\"");
    write_file(path2, text2);
    CHECK_THROWS_AS(load_scenario(path2), ScenarioError);
}

TEST_CASE("start inside an inflated obstacle is a validation error")
{
    const auto path = temp_dir() / "inside.json";
    std::string text = R"({
      "schema_version": 1,
      "start": {"position": [0, 0, 30], "velocity": [10, 0, 0]},
      "goal": [200, 0, 30],
      "limits": {"v_min": 8, "v_max": 15, "gamma_max": 0.43, "phi_max": 0.69},
      "obstacles": [{"center": [2, 0, 30], "semi_axes": [1.5, 1.5, 1.5]}],
      "vehicle_radius": 1.0,
      "horizon": {"n": 40}
    })";
    write_file(path, text);
    CHECK_THROWS_AS(load_scenario(path), ScenarioError);
}

TEST_CASE("load -> serialize -> load round trip is lossless")
{
    const Scenario sc = load_scenario(kScenarioDir / "urban" / "urban_00.json");
    const auto path = temp_dir() / "roundtrip.json";
    save_scenario(sc, path);
    const Scenario sc2 = load_scenario(path);
    CHECK(sc2.spec.start.position.isApprox(sc.spec.start.position));
    CHECK(sc2.spec.start.velocity.isApprox(sc.spec.start.velocity));
    CHECK(sc2.spec.goal.isApprox(sc.spec.goal));
    CHECK(sc2.spec.limits.v_min == sc.spec.limits.v_min);
    CHECK(sc2.spec.limits.phi_max == sc.spec.limits.phi_max);
    CHECK(sc2.vehicle_radius == sc.vehicle_radius);
    CHECK(sc2.raw_obstacles.size() == sc.raw_obstacles.size());
    for (size_t i = 0; i < sc.raw_obstacles.size(); ++i)
    {
        CHECK(sc2.raw_obstacles[i].center.isApprox(sc.raw_obstacles[i].center));
        CHECK(sc2.raw_obstacles[i].semi_axes.isApprox(sc.raw_obstacles[i].semi_axes));
    }
    CHECK(sc2.spec.horizon.n == sc.spec.horizon.n);
    CHECK(sc2.spec.horizon.degree == sc.spec.horizon.degree);
    CHECK(sc2.spec.weights.rho_c == sc.spec.weights.rho_c);
    CHECK(sc2.config.max_iter == sc.config.max_iter);
    // serialization itself is stable
    CHECK(scenario_to_json(sc2) == scenario_to_json(sc));
}

TEST_CASE("run_scenario writes the documented CSVs")
{
    Scenario sc = load_scenario(kScenarioDir / "open_field.json");
    const auto out = temp_dir() / "run_out";
    std::filesystem::remove_all(out);
    const RunReport rep = run_scenario(sc, out);

    const std::string traj = read_file(rep.trajectory_csv);
    CHECK(traj.rfind("t,x,y,z,psi,gamma,v,v_dot,gamma_dot,phi,phi_dot,psi_dot\n", 0) == 0);
    const auto rows = std::count(traj.begin(), traj.end(), '\n');
    CHECK(rows == sc.spec.horizon.n + 1);  // header + n data rows

    // every emitted numeric field parses back as a finite double
    {
        std::istringstream stream(traj);
        std::string line;
        std::getline(stream, line);  // header
        int parsed_rows = 0;
        while (std::getline(stream, line))
        {
            std::istringstream cells(line);
            std::string cell;
            int cols = 0;
            while (std::getline(cells, cell, ','))
            {
                const double value = std::stod(cell);
                CHECK(std::isfinite(value));
                ++cols;
            }
            CHECK(cols == 12);
            ++parsed_rows;
        }
        CHECK(parsed_rows == sc.spec.horizon.n);
    }

    const std::string conv = read_file(rep.convergence_csv);
    CHECK(conv.rfind("iter,r_kinematic,r_collision,r_heading_rate\n", 0) == 0);
    // converged run: last row's residual columns are all below the tolerance
    const size_t last_line_start = conv.rfind('\n', conv.size() - 2) + 1;
    const std::string last = conv.substr(last_line_start);
    double it, rk, rc, rh;
    REQUIRE(std::sscanf(last.c_str(), "%lf,%lf,%lf,%lf", &it, &rk, &rc, &rh) == 4);
    CHECK(rk <= sc.config.residual_tol);
    CHECK(rc <= sc.config.residual_tol);
    CHECK(rh <= sc.config.residual_tol);

    // byte-identical on re-run
    const std::string traj1 = read_file(rep.trajectory_csv);
    const std::string conv1 = read_file(rep.convergence_csv);
    const RunReport rep2 = run_scenario(sc, out);
    CHECK(read_file(rep2.trajectory_csv) == traj1);
    CHECK(read_file(rep2.convergence_csv) == conv1);
}

TEST_CASE("run_batch on an empty directory yields an empty summary")
{
    const auto dir = temp_dir() / "empty_scenarios";
    std::filesystem::create_directories(dir);
    const auto out = temp_dir() / "empty_out";
    const BatchSummary summary = run_batch(dir, {50}, {}, out);
    CHECK(summary.runs.empty());
    CHECK(summary.all_converged());  // vacuously
    CHECK(!summary.any_failed());
    CHECK(std::filesystem::exists(out / "aggregate.json"));
}

TEST_CASE("batch aggregate equals independent recomputation")
{
    const auto out = temp_dir() / "agg_out";
    std::filesystem::remove_all(out);
    // two scenarios, one steps variant, keeps runtime small
    const auto dir = temp_dir() / "two_scenarios";
    std::filesystem::create_directories(dir);
    std::filesystem::copy_file(kScenarioDir / "urban" / "urban_00.json", dir / "a.json",
                               std::filesystem::copy_options::overwrite_existing);
    std::filesystem::copy_file(kScenarioDir / "urban" / "urban_01.json", dir / "b.json",
                               std::filesystem::copy_options::overwrite_existing);
    const BatchSummary summary = run_batch(dir, {50}, {}, out);
    REQUIRE(summary.runs.size() == 2);
    REQUIRE(!summary.any_failed());

    const auto stats = summary.aggregate(50);
    REQUIRE(!stats.empty());
    for (const auto& st : stats)
    {
        if (st.metric != "final_position_residual")
            continue;
        const double a = summary.runs[0].metrics.final_position_residual;
        const double b = summary.runs[1].metrics.final_position_residual;
        CHECK(st.min == doctest::Approx(std::min(a, b)));
        CHECK(st.max == doctest::Approx(std::max(a, b)));
        CHECK(st.median == doctest::Approx(0.5 * (a + b)));
    }
}

TEST_CASE("per-scenario failures are recorded and the batch continues")
{
    const auto dir = temp_dir() / "mixed_scenarios";
    std::filesystem::create_directories(dir);
    write_file(dir / "bad.json", "{ not json");
    std::filesystem::copy_file(kScenarioDir / "open_field.json", dir / "ok.json",
                               std::filesystem::copy_options::overwrite_existing);
    const auto out = temp_dir() / "mixed_out";
    const BatchSummary summary = run_batch(dir, {40}, {}, out);
    REQUIRE(summary.runs.size() == 2);
    CHECK(summary.any_failed());
    int ok = 0, failed = 0;
    for (const auto& r : summary.runs)
        (r.failed ? failed : ok)++;
    CHECK(ok == 1);
    CHECK(failed == 1);
}
