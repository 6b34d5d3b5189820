#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

namespace fwtraj {

/// Axis-aligned ellipsoid, semi-axes already inflated by the vehicle radius.
struct Ellipsoid {
    Eigen::Vector3d center;     // m
    Eigen::Vector3d semi_axes;  // m, all > 0
};

struct Limits {
    double v_min = 8.0;        // m/s, > 0
    double v_max = 15.0;       // m/s, > v_min
    double gamma_max = 0.436;  // rad, flight-path angle bound
    double phi_max = 0.698;    // rad, bank angle bound
    double g = 9.81;           // m/s^2
};

/// Initial boundary condition. heading is optional: when absent, the start
/// velocity direction is used, then the bearing to the goal (a coincident
/// start/goal at rest is rejected).
struct BoundaryState {
    Eigen::Vector3d position = Eigen::Vector3d::Zero();
    Eigen::Vector3d velocity = Eigen::Vector3d::Zero();
    Eigen::Vector3d acceleration = Eigen::Vector3d::Zero();
    std::optional<double> heading;  // rad
    double heading_rate = 0.0;      // rad/s
};

struct Weights {
    double rho_nh = 1.0;   // kinematic penalty, >= 0
    double rho_c = 1.0;    // collision penalty, >= 0
    double rho_in = 1.0;   // heading-rate penalty, >= 0
    double w_goal = 1.0;   // goal-reaching cost, > 0
    double w_smooth = 1.0; // second-derivative cost, > 0
};

struct Horizon {
    int n = 50;
    int degree = 10;
    std::optional<double> total_time;  // seconds; nullopt = "auto"
};

struct ProblemSpec {
    BoundaryState start;
    Eigen::Vector3d goal = Eigen::Vector3d::Zero();
    Limits limits;
    std::vector<Ellipsoid> obstacles;  // pre-inflated
    Weights weights;
    Horizon horizon;
};

/// Grow each semi-axis by the vehicle radius.
std::vector<Ellipsoid> inflate_obstacles(const std::vector<Ellipsoid>& raw, double vehicle_radius);

/// Stacked nonholonomic residuals [xd - v cos(psi) cos(gamma);
/// yd - v sin(psi) cos(gamma); zd + v sin(gamma)], 3n entries.
Eigen::VectorXd eval_kinematic_residual(const Eigen::VectorXd& xdot, const Eigen::VectorXd& ydot,
                                        const Eigen::VectorXd& zdot, const Eigen::VectorXd& psi,
                                        const Eigen::VectorXd& gamma, const Eigen::VectorXd& v);

/// Stacked polar collision residuals, 3*m*n entries ordered [x-block; y-block;
/// z-block], each block obstacle-major. alpha/beta/d are m x n.
Eigen::VectorXd eval_collision_residual(const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                                        const Eigen::VectorXd& z, const Eigen::MatrixXd& alpha,
                                        const Eigen::MatrixXd& beta, const Eigen::MatrixXd& d,
                                        const std::vector<Ellipsoid>& obstacles);

struct AvoidanceReport {
    bool passed = true;
    double worst_lhs = -std::numeric_limits<double>::infinity();  // max over pairs of Eq-LHS
    int worst_obstacle = -1;
    int worst_sample = -1;
    // pass_matrix(i, t) is true when sample t clears obstacle i at the margin
    Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> pass_matrix;
};

/// Original ellipsoidal avoidance check: sample passes obstacle i when
/// 1 - ((x-cx)/a)^2 - ((y-cy)/b)^2 - ((z-cz)/c)^2 <= margin.
AvoidanceReport check_avoidance(const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                                const Eigen::VectorXd& z, const std::vector<Ellipsoid>& obstacles,
                                double margin);

/// Throws DimensionError/DegenerateSpecError on an ill-posed problem
/// (limit ordering, obstacle axes, start inside an obstacle, ...).
void validate_spec(const ProblemSpec& spec);

}  // namespace fwtraj
