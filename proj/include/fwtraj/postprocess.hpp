#pragma once

#include <Eigen/Dense>

#include "fwtraj/model.hpp"

namespace fwtraj {

/// Control inputs recovered from the state trajectory via differential
/// flatness: psi_dot analytic, v_dot/gamma_dot by finite differences,
/// phi = atan(v psi_dot / g), phi_dot by finite differences of phi.
struct ControlProfile {
    Eigen::VectorXd v_dot;      // m/s^2
    Eigen::VectorXd gamma_dot;  // rad/s
    Eigen::VectorXd phi;        // rad
    Eigen::VectorXd phi_dot;    // rad/s
    Eigen::VectorXd psi_dot;    // rad/s
};

struct SolutionMetrics {
    double gamma_dot_norm = 0.0;          // rad/s
    double phi_dot_norm = 0.0;            // rad/s
    double v_dot_norm = 0.0;              // m/s^2
    double final_position_residual = 0.0; // m
    double arc_length = 0.0;              // m
    double wall_time = 0.0;               // s
    int iterations = 0;
    bool converged = false;
};

/// Central differences in the interior, first-order one-sided at the ends.
Eigen::VectorXd finite_difference(const Eigen::VectorXd& samples, double dt);

ControlProfile recover_controls(const Eigen::VectorXd& v, const Eigen::VectorXd& gamma,
                                const Eigen::VectorXd& psi_dot, double dt, const Limits& limits);

SolutionMetrics compute_metrics(const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                                const Eigen::VectorXd& z, const Eigen::Vector3d& goal,
                                const ControlProfile& controls, double wall_time, int iterations,
                                bool converged);

}  // namespace fwtraj
