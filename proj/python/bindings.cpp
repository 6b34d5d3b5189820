#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "fwtraj/basis.hpp"
#include "fwtraj/model.hpp"
#include "fwtraj/postprocess.hpp"
#include "fwtraj/scenario.hpp"
#include "fwtraj/solver.hpp"

namespace py = pybind11;
using namespace fwtraj;

PYBIND11_MODULE(_core, m)
{
    m.doc() = "Alternating-minimization 3D trajectory optimizer for fixed-wing UAVs";

    py::class_<BasisSet>(m, "BasisSet")
        .def_readonly("n", &BasisSet::n)
        .def_readonly("degree", &BasisSet::degree)
        .def_readonly("total_time", &BasisSet::total_time)
        .def_readonly("t_samples", &BasisSet::t_samples)
        .def_readonly("P", &BasisSet::P)
        .def_readonly("Pdot", &BasisSet::Pdot)
        .def_readonly("Pddot", &BasisSet::Pddot);
    m.def("build_basis", &build_basis, py::arg("n"), py::arg("degree"), py::arg("total_time"));
    m.def("eval_curve", &eval_curve, py::arg("basis"), py::arg("coeffs"), py::arg("order"));

    py::class_<Ellipsoid>(m, "Ellipsoid")
        .def(py::init([](const Eigen::Vector3d& center, const Eigen::Vector3d& semi_axes) {
                 return Ellipsoid{center, semi_axes};
             }),
             py::arg("center"), py::arg("semi_axes"))
        .def_readwrite("center", &Ellipsoid::center)
        .def_readwrite("semi_axes", &Ellipsoid::semi_axes);

    py::class_<Limits>(m, "Limits")
        .def(py::init<>())
        .def_readwrite("v_min", &Limits::v_min)
        .def_readwrite("v_max", &Limits::v_max)
        .def_readwrite("gamma_max", &Limits::gamma_max)
        .def_readwrite("phi_max", &Limits::phi_max)
        .def_readwrite("g", &Limits::g);

    py::class_<BoundaryState>(m, "BoundaryState")
        .def(py::init<>())
        .def_readwrite("position", &BoundaryState::position)
        .def_readwrite("velocity", &BoundaryState::velocity)
        .def_readwrite("acceleration", &BoundaryState::acceleration)
        .def_readwrite("heading", &BoundaryState::heading)
        .def_readwrite("heading_rate", &BoundaryState::heading_rate);

    py::class_<Weights>(m, "Weights")
        .def(py::init<>())
        .def_readwrite("rho_nh", &Weights::rho_nh)
        .def_readwrite("rho_c", &Weights::rho_c)
        .def_readwrite("rho_in", &Weights::rho_in)
        .def_readwrite("w_goal", &Weights::w_goal)
        .def_readwrite("w_smooth", &Weights::w_smooth);

    py::class_<Horizon>(m, "Horizon")
        .def(py::init<>())
        .def_readwrite("n", &Horizon::n)
        .def_readwrite("degree", &Horizon::degree)
        .def_readwrite("total_time", &Horizon::total_time);

    py::class_<ProblemSpec>(m, "ProblemSpec")
        .def(py::init<>())
        .def_readwrite("start", &ProblemSpec::start)
        .def_readwrite("goal", &ProblemSpec::goal)
        .def_readwrite("limits", &ProblemSpec::limits)
        .def_readwrite("obstacles", &ProblemSpec::obstacles)
        .def_readwrite("weights", &ProblemSpec::weights)
        .def_readwrite("horizon", &ProblemSpec::horizon);

    m.def("inflate_obstacles", &inflate_obstacles, py::arg("raw"), py::arg("vehicle_radius"));
    m.def("eval_kinematic_residual", &eval_kinematic_residual);
    m.def("eval_collision_residual", &eval_collision_residual);
    m.def(
        "check_avoidance",
        [](const Eigen::VectorXd& x, const Eigen::VectorXd& y, const Eigen::VectorXd& z,
           const std::vector<Ellipsoid>& obstacles, double margin) {
            const auto rep = check_avoidance(x, y, z, obstacles, margin);
            return py::make_tuple(rep.passed, rep.worst_lhs);
        },
        py::arg("x"), py::arg("y"), py::arg("z"), py::arg("obstacles"), py::arg("margin") = 1e-2);

    py::enum_<HeadingVariant>(m, "HeadingVariant")
        .value("UNCONSTRAINED_ADMM", HeadingVariant::UnconstrainedAdmm)
        .value("CONSTRAINED_QP", HeadingVariant::ConstrainedQp);

    py::class_<SolverConfig>(m, "SolverConfig")
        .def(py::init<>())
        .def_readwrite("max_iter", &SolverConfig::max_iter)
        .def_readwrite("residual_tol", &SolverConfig::residual_tol)
        .def_readwrite("rho_nh", &SolverConfig::rho_nh)
        .def_readwrite("rho_c", &SolverConfig::rho_c)
        .def_readwrite("rho_in", &SolverConfig::rho_in)
        .def_readwrite("pre_iterations", &SolverConfig::pre_iterations)
        .def_readwrite("heading_variant", &SolverConfig::heading_variant);

    py::class_<ResidualReport>(m, "ResidualReport")
        .def_readonly("mean_kinematic", &ResidualReport::mean_kinematic)
        .def_readonly("mean_collision", &ResidualReport::mean_collision)
        .def_readonly("mean_heading_rate", &ResidualReport::mean_heading_rate)
        .def("iterations", &ResidualReport::iterations);

    py::class_<ControlProfile>(m, "ControlProfile")
        .def_readonly("v_dot", &ControlProfile::v_dot)
        .def_readonly("gamma_dot", &ControlProfile::gamma_dot)
        .def_readonly("phi", &ControlProfile::phi)
        .def_readonly("phi_dot", &ControlProfile::phi_dot)
        .def_readonly("psi_dot", &ControlProfile::psi_dot);

    py::class_<SolutionMetrics>(m, "SolutionMetrics")
        .def_readonly("gamma_dot_norm", &SolutionMetrics::gamma_dot_norm)
        .def_readonly("phi_dot_norm", &SolutionMetrics::phi_dot_norm)
        .def_readonly("v_dot_norm", &SolutionMetrics::v_dot_norm)
        .def_readonly("final_position_residual", &SolutionMetrics::final_position_residual)
        .def_readonly("arc_length", &SolutionMetrics::arc_length)
        .def_readonly("wall_time", &SolutionMetrics::wall_time)
        .def_readonly("iterations", &SolutionMetrics::iterations)
        .def_readonly("converged", &SolutionMetrics::converged);

    py::enum_<SolveStatus>(m, "SolveStatus")
        .value("CONVERGED", SolveStatus::Converged)
        .value("MAX_ITER_REACHED", SolveStatus::MaxIterReached);

    py::class_<TrajectorySolution>(m, "TrajectorySolution")
        .def_readonly("t", &TrajectorySolution::t)
        .def_readonly("x", &TrajectorySolution::x)
        .def_readonly("y", &TrajectorySolution::y)
        .def_readonly("z", &TrajectorySolution::z)
        .def_readonly("psi", &TrajectorySolution::psi)
        .def_readonly("gamma", &TrajectorySolution::gamma)
        .def_readonly("v", &TrajectorySolution::v)
        .def_readonly("controls", &TrajectorySolution::controls)
        .def_readonly("metrics", &TrajectorySolution::metrics)
        .def_readonly("residuals", &TrajectorySolution::residuals)
        .def_readonly("status", &TrajectorySolution::status)
        .def_readonly("iterations", &TrajectorySolution::iterations)
        .def_readonly("total_time", &TrajectorySolution::total_time);

    m.def(
        "solve",
        [](const ProblemSpec& spec, const SolverConfig& config) {
            Solver solver(spec, config);
            return solver.solve();
        },
        py::arg("spec"), py::arg("config") = SolverConfig{},
        "Run the alternating-minimization optimizer on a problem");
    m.def("estimate_traversal_time", &estimate_traversal_time, py::arg("spec"), py::arg("basis"),
          py::arg("pre_iterations") = 30);
    m.def("recover_controls", &recover_controls, py::arg("v"), py::arg("gamma"),
          py::arg("psi_dot"), py::arg("dt"), py::arg("limits"));

    py::class_<Scenario>(m, "Scenario")
        .def_readwrite("id", &Scenario::id)
        .def_readwrite("spec", &Scenario::spec)
        .def_readwrite("config", &Scenario::config)
        .def_readonly("vehicle_radius", &Scenario::vehicle_radius);
    m.def("load_scenario", &load_scenario, py::arg("path"));
    m.def(
        "solve_scenario",
        [](const std::filesystem::path& path) {
            const Scenario sc = load_scenario(path);
            Solver solver(sc.spec, sc.config);
            return solver.solve();
        },
        py::arg("path"), "Load a scenario file and solve it");
}
