#include "fwtraj/postprocess.hpp"

#include <cmath>

#include "fwtraj/errors.hpp"

namespace fwtraj {

Eigen::VectorXd finite_difference(const Eigen::VectorXd& samples, double dt)
{
    const Eigen::Index n = samples.size();
    if (n < 2)
        throw DimensionError("finite_difference: need at least 2 samples");
    Eigen::VectorXd out(n);
    out(0) = (samples(1) - samples(0)) / dt;
    for (Eigen::Index i = 1; i + 1 < n; ++i)
        out(i) = (samples(i + 1) - samples(i - 1)) / (2.0 * dt);
    out(n - 1) = (samples(n - 1) - samples(n - 2)) / dt;
    return out;
}

ControlProfile recover_controls(const Eigen::VectorXd& v, const Eigen::VectorXd& gamma,
                                const Eigen::VectorXd& psi_dot, double dt, const Limits& limits)
{
    if (v.size() != gamma.size() || v.size() != psi_dot.size())
        throw DimensionError("recover_controls: v, gamma, psi_dot must have equal length");
    ControlProfile c;
    c.psi_dot = psi_dot;
    c.v_dot = finite_difference(v, dt);
    c.gamma_dot = finite_difference(gamma, dt);
    c.phi.resize(v.size());
    for (Eigen::Index i = 0; i < v.size(); ++i)
        c.phi(i) = std::atan(v(i) * psi_dot(i) / limits.g);  // inverts psid = (g/v) tan(phi)
    c.phi_dot = finite_difference(c.phi, dt);
    return c;
}

SolutionMetrics compute_metrics(const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                                const Eigen::VectorXd& z, const Eigen::Vector3d& goal,
                                const ControlProfile& controls, double wall_time, int iterations,
                                bool converged)
{
    SolutionMetrics m;
    m.gamma_dot_norm = controls.gamma_dot.norm();
    m.phi_dot_norm = controls.phi_dot.norm();
    m.v_dot_norm = controls.v_dot.norm();
    const Eigen::Index n = x.size();
    m.final_position_residual =
        (Eigen::Vector3d(x(n - 1), y(n - 1), z(n - 1)) - goal).norm();
    double arc = 0.0;
    for (Eigen::Index t = 0; t + 1 < n; ++t)
        arc += Eigen::Vector3d(x(t + 1) - x(t), y(t + 1) - y(t), z(t + 1) - z(t)).norm();
    m.arc_length = arc;
    m.wall_time = wall_time;
    m.iterations = iterations;
    m.converged = converged;
    return m;
}

}  // namespace fwtraj
