#include "fwtraj/model.hpp"

#include <cmath>

#include "fwtraj/errors.hpp"

namespace fwtraj {

std::vector<Ellipsoid> inflate_obstacles(const std::vector<Ellipsoid>& raw, double vehicle_radius)
{
    if (vehicle_radius < 0.0)
        throw DimensionError("inflate_obstacles: vehicle_radius must be >= 0");
    std::vector<Ellipsoid> out = raw;
    for (auto& e : out)
        e.semi_axes.array() += vehicle_radius;
    return out;
}

Eigen::VectorXd eval_kinematic_residual(const Eigen::VectorXd& xdot, const Eigen::VectorXd& ydot,
                                        const Eigen::VectorXd& zdot, const Eigen::VectorXd& psi,
                                        const Eigen::VectorXd& gamma, const Eigen::VectorXd& v)
{
    const Eigen::Index n = xdot.size();
    if (ydot.size() != n || zdot.size() != n || psi.size() != n || gamma.size() != n ||
        v.size() != n)
        throw DimensionError("eval_kinematic_residual: inputs must all have length n");

    Eigen::VectorXd r(3 * n);
    const Eigen::ArrayXd cp = psi.array().cos(), sp = psi.array().sin();
    const Eigen::ArrayXd cg = gamma.array().cos(), sg = gamma.array().sin();
    r.segment(0, n) = xdot.array() - v.array() * cp * cg;
    r.segment(n, n) = ydot.array() - v.array() * sp * cg;
    r.segment(2 * n, n) = zdot.array() + v.array() * sg;
    return r;
}

Eigen::VectorXd eval_collision_residual(const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                                        const Eigen::VectorXd& z, const Eigen::MatrixXd& alpha,
                                        const Eigen::MatrixXd& beta, const Eigen::MatrixXd& d,
                                        const std::vector<Ellipsoid>& obstacles)
{
    const Eigen::Index n = x.size();
    const Eigen::Index m = static_cast<Eigen::Index>(obstacles.size());
    if (y.size() != n || z.size() != n)
        throw DimensionError("eval_collision_residual: position vectors must have length n");
    if (alpha.rows() != m || alpha.cols() != n || beta.rows() != m || beta.cols() != n ||
        d.rows() != m || d.cols() != n)
        throw DimensionError("eval_collision_residual: alpha/beta/d must be m x n");

    Eigen::VectorXd r(3 * m * n);
    for (Eigen::Index i = 0; i < m; ++i)
    {
        const auto& ob = obstacles[static_cast<size_t>(i)];
        const Eigen::ArrayXd sb = beta.row(i).array().sin().transpose();
        const Eigen::ArrayXd cb = beta.row(i).array().cos().transpose();
        const Eigen::ArrayXd ca = alpha.row(i).array().cos().transpose();
        const Eigen::ArrayXd sa = alpha.row(i).array().sin().transpose();
        const Eigen::ArrayXd di = d.row(i).array().transpose();
        r.segment(i * n, n) = x.array() - ob.center.x() - ob.semi_axes.x() * di * sb * ca;
        r.segment(m * n + i * n, n) = y.array() - ob.center.y() - ob.semi_axes.y() * di * sb * sa;
        r.segment(2 * m * n + i * n, n) = z.array() - ob.center.z() - ob.semi_axes.z() * di * cb;
    }
    return r;
}

AvoidanceReport check_avoidance(const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                                const Eigen::VectorXd& z, const std::vector<Ellipsoid>& obstacles,
                                double margin)
{
    if (margin < 0.0)
        throw DimensionError("check_avoidance: margin must be >= 0");
    const Eigen::Index n = x.size();
    const Eigen::Index m = static_cast<Eigen::Index>(obstacles.size());

    AvoidanceReport rep;
    rep.pass_matrix.resize(m, n);
    rep.pass_matrix.setConstant(true);
    for (Eigen::Index i = 0; i < m; ++i)
    {
        const auto& ob = obstacles[static_cast<size_t>(i)];
        for (Eigen::Index t = 0; t < n; ++t)
        {
            const double ex = (x(t) - ob.center.x()) / ob.semi_axes.x();
            const double ey = (y(t) - ob.center.y()) / ob.semi_axes.y();
            const double ez = (z(t) - ob.center.z()) / ob.semi_axes.z();
            const double lhs = 1.0 - ex * ex - ey * ey - ez * ez;
            if (lhs > rep.worst_lhs)
            {
                rep.worst_lhs = lhs;
                rep.worst_obstacle = static_cast<int>(i);
                rep.worst_sample = static_cast<int>(t);
            }
            if (lhs > margin)
            {
                rep.pass_matrix(i, t) = false;
                rep.passed = false;
            }
        }
    }
    return rep;
}

void validate_spec(const ProblemSpec& spec)
{
    const Limits& l = spec.limits;
    if (!(l.v_min > 0.0) || !(l.v_min < l.v_max))
        throw DimensionError("limits.v_min: need 0 < v_min < v_max");
    if (!(l.gamma_max > 0.0) || !(l.gamma_max < M_PI / 2.0))
        throw DimensionError("limits.gamma_max: need 0 < gamma_max < pi/2");
    if (!(l.phi_max > 0.0) || !(l.phi_max < M_PI / 2.0))
        throw DimensionError("limits.phi_max: need 0 < phi_max < pi/2");
    if (!(l.g > 0.0))
        throw DimensionError("limits.g: need g > 0");
    if (!spec.goal.allFinite())
        throw DimensionError("goal: must be finite");
    if (spec.weights.rho_nh < 0.0 || spec.weights.rho_c < 0.0 || spec.weights.rho_in < 0.0)
        throw DimensionError("weights: penalty weights must be >= 0");
    if (!(spec.weights.w_goal > 0.0) || !(spec.weights.w_smooth > 0.0))
        throw DimensionError("weights: w_goal and w_smooth must be > 0");
    if (spec.horizon.n < 3)
        throw DimensionError("horizon.n: need n >= 3");
    if (spec.horizon.degree < 4)
        throw DimensionError("horizon.degree: need degree >= 4");
    if (spec.horizon.total_time && !(*spec.horizon.total_time > 0.0))
        throw DimensionError("horizon.total_time: must be > 0 or auto");
    for (size_t i = 0; i < spec.obstacles.size(); ++i)
    {
        const auto& ob = spec.obstacles[i];
        if (!(ob.semi_axes.minCoeff() > 0.0))
            throw DimensionError("obstacles[" + std::to_string(i) + "].semi_axes: must be > 0");
        const Eigen::Array3d e = (spec.start.position - ob.center).array() / ob.semi_axes.array();
        if (e.square().sum() <= 1.0)
            throw DegenerateSpecError("start.position lies inside inflated obstacles[" +
                                      std::to_string(i) + "]");
    }
}

}  // namespace fwtraj
