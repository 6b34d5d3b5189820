#include "fwtraj/solver.hpp"

#include <chrono>
#include <cmath>

#include "fwtraj/errors.hpp"

namespace fwtraj {

namespace {

constexpr double kRcondFloor = 1e-14;
constexpr double kDenomFloor = 1e-12;

Eigen::PartialPivLU<Eigen::MatrixXd> factor_or_throw(const Eigen::MatrixXd& kkt, const char* what)
{
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(kkt);
    if (!(lu.rcond() > kRcondFloor))
        throw SingularKktError(std::string(what) +
                               ": KKT matrix is numerically singular (rank-deficient equality "
                               "rows or degree too low)");
    return lu;
}

}  // namespace

void ResidualReport::push(const ResidualEntry& e)
{
    mean_kinematic.push_back(e.kinematic);
    mean_collision.push_back(e.collision);
    mean_heading_rate.push_back(e.heading_rate);
}

double wrap_angle(double a)
{
    a = std::fmod(a + M_PI, 2.0 * M_PI);
    if (a <= 0.0)
        a += 2.0 * M_PI;
    return a - M_PI;
}

Eigen::VectorXd unwrap_angles(double anchor, const Eigen::VectorXd& raw)
{
    Eigen::VectorXd out(raw.size());
    double prev = anchor;
    for (Eigen::Index i = 0; i < raw.size(); ++i)
    {
        out(i) = prev + wrap_angle(raw(i) - prev);
        prev = out(i);
    }
    return out;
}

Eigen::VectorXd flight_path_raw(const Eigen::VectorXd& xdot, const Eigen::VectorXd& ydot,
                                const Eigen::VectorXd& zdot, const Eigen::VectorXd& psi)
{
    Eigen::VectorXd g(xdot.size());
    for (Eigen::Index i = 0; i < xdot.size(); ++i)
    {
        const double along = xdot(i) * std::cos(psi(i)) + ydot(i) * std::sin(psi(i));
        g(i) = std::atan2(-zdot(i), along);
    }
    return g;
}

void polar_angles(const Eigen::Vector3d& p, const Ellipsoid& ob, double& alpha, double& beta)
{
    const Eigen::Array3d e = (p - ob.center).array() / ob.semi_axes.array();
    if (e.matrix().squaredNorm() == 0.0)
    {
        alpha = 0.0;
        beta = M_PI / 2.0;  // deterministic tie-break at the center
        return;
    }
    alpha = std::atan2(e.y(), e.x());
    beta = std::atan2(std::hypot(e.x(), e.y()), e.z());
    beta = std::clamp(beta, 0.0, M_PI);
}

double polar_distance(const Eigen::Vector3d& p, const Ellipsoid& ob)
{
    return ((p - ob.center).array() / ob.semi_axes.array()).matrix().norm();
}

double distance_raw(const Eigen::Vector3d& p, const Ellipsoid& ob, double alpha, double beta)
{
    const double sb = std::sin(beta), cb = std::cos(beta);
    const double ca = std::cos(alpha), sa = std::sin(alpha);
    const Eigen::Vector3d r = p - ob.center;
    const double a = ob.semi_axes.x(), b = ob.semi_axes.y(), c = ob.semi_axes.z();
    const double num = a * sb * ca * r.x() + b * sb * sa * r.y() + c * cb * r.z();
    const double den = a * a * sb * sb * ca * ca + b * b * sb * sb * sa * sa + c * c * cb * cb;
    return num / std::max(den, kDenomFloor);
}

void admm_rate_update(const Eigen::VectorXd& Ac, const Eigen::VectorXd& b_in, double rho_in,
                      Eigen::VectorXd& s_in, Eigen::VectorXd& lambda_in)
{
    s_in = (-Ac + b_in - lambda_in / rho_in).cwiseMax(0.0);
    // lambda + rho (Ac - b + s) with s as above collapses to a projection;
    // this form lands on exact zeros where the constraint is slack
    lambda_in = (lambda_in + rho_in * (Ac - b_in)).cwiseMax(0.0);
}

KktCache build_kkt_cache(const BasisSet& basis, const ProblemSpec& spec, double rho_nh,
                         double rho_c, double rho_in)
{
    const int k = basis.degree + 1;
    const int m = static_cast<int>(spec.obstacles.size());
    KktCache cache;
    cache.rho_nh = rho_nh;
    cache.rho_c = rho_c;
    cache.rho_in = rho_in;
    cache.obstacle_count = m;

    const Eigen::RowVectorXd Pn = basis.P.row(basis.n - 1);
    cache.Q_pos = spec.weights.w_smooth * basis.Pddot.transpose() * basis.Pddot +
                  spec.weights.w_goal * Pn.transpose() * Pn;

    Eigen::MatrixXd H = cache.Q_pos + rho_nh * basis.Pdot.transpose() * basis.Pdot +
                        rho_c * static_cast<double>(m) * basis.P.transpose() * basis.P;

    cache.A_eq.resize(3, k);
    cache.A_eq.row(0) = basis.P.row(0);
    cache.A_eq.row(1) = basis.Pdot.row(0);
    cache.A_eq.row(2) = basis.Pddot.row(0);

    cache.pos_kkt.setZero(k + 3, k + 3);
    cache.pos_kkt.topLeftCorner(k, k) = H;
    cache.pos_kkt.topRightCorner(k, 3) = cache.A_eq.transpose();
    cache.pos_kkt.bottomLeftCorner(3, k) = cache.A_eq;
    cache.pos_lu = factor_or_throw(cache.pos_kkt, "position step");

    // heading quadratic: smoothness + arctan2 surrogate + relaxed rate bounds
    // (A_in^T A_in = 2 Pdot^T Pdot)
    cache.Q_psi = spec.weights.w_smooth * basis.Pddot.transpose() * basis.Pddot +
                  rho_nh * basis.P.transpose() * basis.P +
                  2.0 * rho_in * basis.Pdot.transpose() * basis.Pdot;

    cache.A_eq_psi.resize(2, k);
    cache.A_eq_psi.row(0) = basis.P.row(0);
    cache.A_eq_psi.row(1) = basis.Pdot.row(0);

    cache.psi_kkt.setZero(k + 2, k + 2);
    cache.psi_kkt.topLeftCorner(k, k) = cache.Q_psi;
    cache.psi_kkt.topRightCorner(k, 2) = cache.A_eq_psi.transpose();
    cache.psi_kkt.bottomLeftCorner(2, k) = cache.A_eq_psi;
    cache.psi_lu = factor_or_throw(cache.psi_kkt, "heading step");

    return cache;
}

double resolve_initial_heading(const ProblemSpec& spec)
{
    if (spec.start.heading)
        return *spec.start.heading;
    // a moving start pins the heading; the boundary rows would otherwise
    // force a kinematic residual at t0 that no iteration can remove
    const double vx = spec.start.velocity.x(), vy = spec.start.velocity.y();
    if (std::hypot(vx, vy) > 1e-9)
        return std::atan2(vy, vx);
    const double dx = spec.goal.x() - spec.start.position.x();
    const double dy = spec.goal.y() - spec.start.position.y();
    if (std::hypot(dx, dy) <= 1e-9)
        throw DegenerateSpecError(
            "start and goal coincide in the horizontal plane and no start heading was supplied");
    return std::atan2(dy, dx);
}

Solver::Solver(ProblemSpec spec, SolverConfig config)
    : spec_(std::move(spec)), config_(config)
{
    validate_spec(spec_);
    if (config_.max_iter < 1)
        throw DimensionError("SolverConfig.max_iter must be >= 1");
    if (!(config_.residual_tol > 0.0))
        throw DimensionError("SolverConfig.residual_tol must be > 0");

    rho_nh_ = config_.rho_nh.value_or(spec_.weights.rho_nh);
    rho_c_ = config_.rho_c.value_or(spec_.weights.rho_c);
    rho_in_ = config_.rho_in.value_or(spec_.weights.rho_in);
    if (rho_nh_ < 0.0 || rho_c_ < 0.0 || rho_in_ < 0.0)
        throw DimensionError("penalty parameters must be >= 0");

    double total_time;
    if (spec_.horizon.total_time)
    {
        total_time = *spec_.horizon.total_time;
    }
    else
    {
        const double dist = (spec_.goal - spec_.start.position).norm();
        const double v_mid = 0.5 * (spec_.limits.v_min + spec_.limits.v_max);
        const double t0 = std::max(dist / v_mid, spec_.horizon.n * 0.01);
        const BasisSet pre = build_basis(spec_.horizon.n, spec_.horizon.degree, t0);
        ProblemSpec est_spec = spec_;  // pre-solve sees the resolved penalties
        est_spec.weights.rho_c = rho_c_;
        est_spec.weights.rho_in = rho_in_;
        total_time = estimate_traversal_time(est_spec, pre, config_.pre_iterations);
    }

    basis_ = build_basis(spec_.horizon.n, spec_.horizon.degree, total_time);
    cache_ = build_kkt_cache(basis_, spec_, rho_nh_, rho_c_, rho_in_);
    psi0_ = resolve_initial_heading(spec_);
    initialize_state();
}

Eigen::VectorXd Solver::samples(int axis, int order) const
{
    const Eigen::VectorXd* c = nullptr;
    switch (axis)
    {
    case 0: c = &state_.c_x; break;
    case 1: c = &state_.c_y; break;
    case 2: c = &state_.c_z; break;
    case 3: c = &state_.c_psi; break;
    default: throw DimensionError("samples: axis must be 0..3");
    }
    return eval_curve(basis_, *c, order);
}

void Solver::initialize_state()
{
    const int n = basis_.n;
    const int k = basis_.degree + 1;
    const int m = static_cast<int>(spec_.obstacles.size());

    state_ = SolverState{};
    state_.lambda_x.setZero(k);
    state_.lambda_y.setZero(k);
    state_.lambda_z.setZero(k);
    state_.lambda_psi.setZero(k);
    state_.lambda_in.setZero(2 * n);
    state_.s_in.setZero(2 * n);

    // least-squares fit of the start->goal line subject to the boundary rows;
    // a tiny ridge keeps the fit well-posed when n < degree+1
    Eigen::MatrixXd kkt(k + 3, k + 3);
    kkt.setZero();
    kkt.topLeftCorner(k, k) =
        basis_.P.transpose() * basis_.P + 1e-10 * Eigen::MatrixXd::Identity(k, k);
    kkt.topRightCorner(k, 3) = cache_.A_eq.transpose();
    kkt.bottomLeftCorner(3, k) = cache_.A_eq;
    Eigen::PartialPivLU<Eigen::MatrixXd> fit_lu = factor_or_throw(kkt, "initialization");

    const Eigen::VectorXd ramp = Eigen::VectorXd::LinSpaced(n, 0.0, 1.0);
    for (int axis = 0; axis < 3; ++axis)
    {
        const double p0 = spec_.start.position(axis);
        const Eigen::VectorXd line = p0 + (spec_.goal(axis) - p0) * ramp.array();
        Eigen::VectorXd rhs(k + 3);
        rhs.head(k) = basis_.P.transpose() * line;
        rhs(k) = p0;
        rhs(k + 1) = spec_.start.velocity(axis);
        rhs(k + 2) = spec_.start.acceleration(axis);
        const Eigen::VectorXd sol = fit_lu.solve(rhs);
        (axis == 0 ? state_.c_x : axis == 1 ? state_.c_y : state_.c_z) = sol.head(k);
    }

    const double dx = spec_.goal.x() - spec_.start.position.x();
    const double dy = spec_.goal.y() - spec_.start.position.y();
    const double psi_init = std::hypot(dx, dy) > 1e-9 ? std::atan2(dy, dx) : psi0_;
    state_.c_psi = Eigen::VectorXd::Constant(k, psi_init);

    state_.gamma.setZero(n);
    const double dist = (spec_.goal - spec_.start.position).norm();
    const double v0 =
        std::clamp(dist / basis_.total_time, spec_.limits.v_min, spec_.limits.v_max);
    state_.v = Eigen::VectorXd::Constant(n, v0);

    state_.alpha.setZero(m, n);
    state_.beta.setZero(m, n);
    state_.d.setOnes(m, n);
    if (m > 0)
    {
        const Eigen::VectorXd x = samples(0), y = samples(1), z = samples(2);
        for (int i = 0; i < m; ++i)
        {
            const auto& ob = spec_.obstacles[static_cast<size_t>(i)];
            for (int t = 0; t < n; ++t)
            {
                const Eigen::Vector3d p(x(t), y(t), z(t));
                double a, b;
                polar_angles(p, ob, a, b);
                state_.alpha(i, t) = a;
                state_.beta(i, t) = b;
                state_.d(i, t) = std::max(1.0, polar_distance(p, ob));
            }
        }
    }
    theta_ = Eigen::VectorXd::Constant(n, psi_init);
}

Eigen::VectorXd Solver::collision_linear_target(int axis) const
{
    // sum over obstacles of (xi_axis + axes_axis * d(i,t) * trig_axis(i,t))
    const int n = basis_.n;
    const int m = static_cast<int>(spec_.obstacles.size());
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(n);
    for (int i = 0; i < m; ++i)
    {
        const auto& ob = spec_.obstacles[static_cast<size_t>(i)];
        const Eigen::ArrayXd di = state_.d.row(i).transpose().array();
        const Eigen::ArrayXd be = state_.beta.row(i).transpose().array();
        const Eigen::ArrayXd al = state_.alpha.row(i).transpose().array();
        if (axis == 0)
            acc.array() += ob.center.x() + ob.semi_axes.x() * di * be.sin() * al.cos();
        else if (axis == 1)
            acc.array() += ob.center.y() + ob.semi_axes.y() * di * be.sin() * al.sin();
        else
            acc.array() += ob.center.z() + ob.semi_axes.z() * di * be.cos();
    }
    return acc;
}

Eigen::VectorXd Solver::solve_position_kkt(int axis) const
{
    const int k = basis_.degree + 1;
    const Eigen::ArrayXd cp = samples(3).array().cos();
    const Eigen::ArrayXd sp = samples(3).array().sin();
    const Eigen::ArrayXd cg = state_.gamma.array().cos();
    const Eigen::ArrayXd sg = state_.gamma.array().sin();

    Eigen::VectorXd vel_target;
    if (axis == 0)
        vel_target = (state_.v.array() * cp * cg).matrix();
    else if (axis == 1)
        vel_target = (state_.v.array() * sp * cg).matrix();
    else
        vel_target = (-state_.v.array() * sg).matrix();

    const Eigen::RowVectorXd Pn = basis_.P.row(basis_.n - 1);
    const Eigen::VectorXd q = -spec_.weights.w_goal * spec_.goal(axis) * Pn.transpose();
    const Eigen::VectorXd b_nh = -rho_nh_ * basis_.Pdot.transpose() * vel_target;
    Eigen::VectorXd b_fc = Eigen::VectorXd::Zero(k);
    if (!spec_.obstacles.empty())
        b_fc = -rho_c_ * basis_.P.transpose() * collision_linear_target(axis);

    const Eigen::VectorXd& lambda =
        axis == 0 ? state_.lambda_x : axis == 1 ? state_.lambda_y : state_.lambda_z;

    Eigen::VectorXd rhs(k + 3);
    rhs.head(k) = -(q + b_fc + b_nh - lambda);
    rhs(k) = spec_.start.position(axis);
    rhs(k + 1) = spec_.start.velocity(axis);
    rhs(k + 2) = spec_.start.acceleration(axis);
    return cache_.pos_lu.solve(rhs).head(k);
}

void Solver::step_position_axis(int axis)
{
    if (axis < 0 || axis > 2)
        throw DimensionError("step_position_axis: axis must be 0, 1 or 2");
    const Eigen::VectorXd c = solve_position_kkt(axis);
    (axis == 0 ? state_.c_x : axis == 1 ? state_.c_y : state_.c_z) = c;
}

void Solver::step_heading()
{
    const Eigen::VectorXd xd = samples(0, 1), yd = samples(1, 1);
    Eigen::VectorXd raw(basis_.n);
    for (int t = 0; t < basis_.n; ++t)
        raw(t) = std::atan2(yd(t), xd(t));
    theta_ = unwrap_angles(psi0_, raw);

    if (config_.heading_variant == HeadingVariant::UnconstrainedAdmm)
        step_heading_admm();
    else
        step_heading_qp();
}

void Solver::step_heading_admm()
{
    const int k = basis_.degree + 1;
    const int n = basis_.n;
    const double cap_gain = spec_.limits.g * std::tan(spec_.limits.phi_max);
    const Eigen::VectorXd b_half = cap_gain * state_.v.cwiseInverse();
    Eigen::VectorXd b_in(2 * n);
    b_in << b_half, b_half;

    Eigen::VectorXd q = -rho_nh_ * basis_.P.transpose() * theta_ - state_.lambda_psi;
    if (rho_in_ > 0.0)
    {
        // A_in^T w with A_in = [Pdot; -Pdot]
        const Eigen::VectorXd w = state_.s_in - b_in + state_.lambda_in / rho_in_;
        q += rho_in_ * basis_.Pdot.transpose() * (w.head(n) - w.tail(n));
    }

    Eigen::VectorXd rhs(k + 2);
    rhs.head(k) = -q;
    rhs(k) = psi0_;
    rhs(k + 1) = spec_.start.heading_rate;
    state_.c_psi = cache_.psi_lu.solve(rhs).head(k);

    if (rho_in_ > 0.0)
    {
        const Eigen::VectorXd psid = basis_.Pdot * state_.c_psi;
        Eigen::VectorXd Ac(2 * n);
        Ac << psid, -psid;
        admm_rate_update(Ac, b_in, rho_in_, state_.s_in, state_.lambda_in);
    }
}

void Solver::step_heading_qp()
{
    // Solves the inequality-constrained heading QP exactly by iterating the
    // slack/multiplier updates to a fixed point. Same cached factorization.
    const int k = basis_.degree + 1;
    const int n = basis_.n;
    const double rho = rho_in_ > 0.0 ? rho_in_ : 1.0;
    const double cap_gain = spec_.limits.g * std::tan(spec_.limits.phi_max);
    const Eigen::VectorXd b_half = cap_gain * state_.v.cwiseInverse();
    Eigen::VectorXd b_in(2 * n);
    b_in << b_half, b_half;

    Eigen::VectorXd s = state_.s_in, lam = state_.lambda_in;
    const Eigen::VectorXd q0 = -rho_nh_ * basis_.P.transpose() * theta_ - state_.lambda_psi;
    Eigen::VectorXd c = state_.c_psi;
    constexpr int kMaxInner = 5000;
    for (int inner = 0; inner < kMaxInner; ++inner)
    {
        const Eigen::VectorXd w = s - b_in + lam / rho;
        Eigen::VectorXd rhs(k + 2);
        rhs.head(k) = -(q0 + rho * basis_.Pdot.transpose() * (w.head(n) - w.tail(n)));
        rhs(k) = psi0_;
        rhs(k + 1) = spec_.start.heading_rate;
        c = cache_.psi_lu.solve(rhs).head(k);

        const Eigen::VectorXd psid = basis_.Pdot * c;
        Eigen::VectorXd Ac(2 * n);
        Ac << psid, -psid;
        const Eigen::VectorXd s_prev = s;
        admm_rate_update(Ac, b_in, rho, s, lam);
        const Eigen::VectorXd primal = Ac - b_in + s;
        const double move = (s - s_prev).lpNorm<Eigen::Infinity>();
        if (primal.lpNorm<Eigen::Infinity>() < 1e-10 && move < 1e-10)
            break;
    }
    state_.c_psi = c;
    state_.s_in = s;
    state_.lambda_in = lam;
}

void Solver::step_flight_path()
{
    const Eigen::VectorXd raw =
        flight_path_raw(samples(0, 1), samples(1, 1), samples(2, 1), samples(3));
    state_.gamma =
        raw.cwiseMax(-spec_.limits.gamma_max).cwiseMin(spec_.limits.gamma_max);
}

void Solver::step_velocity()
{
    const Eigen::VectorXd xd = samples(0, 1), yd = samples(1, 1), zd = samples(2, 1);
    const Eigen::VectorXd psid = samples(3, 1);
    const double cap_gain = spec_.limits.g * std::tan(spec_.limits.phi_max);
    for (int t = 0; t < basis_.n; ++t)
    {
        const double raw = std::sqrt(xd(t) * xd(t) + yd(t) * yd(t) + zd(t) * zd(t));
        double hi = spec_.limits.v_max;
        if (std::abs(psid(t)) > 0.0)
            hi = std::min(hi, cap_gain / std::abs(psid(t)));
        hi = std::max(hi, spec_.limits.v_min);  // stall bound wins when the cap dips below
        state_.v(t) = std::clamp(raw, spec_.limits.v_min, hi);
    }
}

void Solver::step_obstacle_angles()
{
    const int m = static_cast<int>(spec_.obstacles.size());
    if (m == 0)
        return;
    const Eigen::VectorXd x = samples(0), y = samples(1), z = samples(2);
    for (int i = 0; i < m; ++i)
    {
        const auto& ob = spec_.obstacles[static_cast<size_t>(i)];
        for (int t = 0; t < basis_.n; ++t)
        {
            double a, b;
            polar_angles(Eigen::Vector3d(x(t), y(t), z(t)), ob, a, b);
            state_.alpha(i, t) = a;
            state_.beta(i, t) = b;
        }
    }
}

void Solver::step_obstacle_distance()
{
    const int m = static_cast<int>(spec_.obstacles.size());
    if (m == 0)
        return;
    const Eigen::VectorXd x = samples(0), y = samples(1), z = samples(2);
    for (int i = 0; i < m; ++i)
    {
        const auto& ob = spec_.obstacles[static_cast<size_t>(i)];
        for (int t = 0; t < basis_.n; ++t)
        {
            const double raw = distance_raw(Eigen::Vector3d(x(t), y(t), z(t)), ob,
                                            state_.alpha(i, t), state_.beta(i, t));
            state_.d(i, t) = std::max(1.0, raw);
        }
    }
}

void Solver::update_bregman_multipliers()
{
    const int n = basis_.n;
    const int m = static_cast<int>(spec_.obstacles.size());
    const Eigen::VectorXd r_nh = eval_kinematic_residual(samples(0, 1), samples(1, 1),
                                                         samples(2, 1), samples(3), state_.gamma,
                                                         state_.v);
    Eigen::VectorXd fc_x = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd fc_y = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd fc_z = Eigen::VectorXd::Zero(n);
    if (m > 0)
    {
        const Eigen::VectorXd r_fc =
            eval_collision_residual(samples(0), samples(1), samples(2), state_.alpha, state_.beta,
                                    state_.d, spec_.obstacles);
        for (int i = 0; i < m; ++i)  // A_fc^T r = P^T (sum of obstacle blocks)
        {
            fc_x += r_fc.segment(i * n, n);
            fc_y += r_fc.segment(m * n + i * n, n);
            fc_z += r_fc.segment(2 * m * n + i * n, n);
        }
    }
    state_.lambda_x -= rho_nh_ * basis_.Pdot.transpose() * r_nh.segment(0, n) +
                       rho_c_ * basis_.P.transpose() * fc_x;
    state_.lambda_y -= rho_nh_ * basis_.Pdot.transpose() * r_nh.segment(n, n) +
                       rho_c_ * basis_.P.transpose() * fc_y;
    state_.lambda_z -= rho_nh_ * basis_.Pdot.transpose() * r_nh.segment(2 * n, n) +
                       rho_c_ * basis_.P.transpose() * fc_z;
    // surrogate residual of the heading fit
    state_.lambda_psi -= rho_nh_ * basis_.P.transpose() * (basis_.P * state_.c_psi - theta_);
}

ResidualEntry Solver::compute_residuals() const
{
    const int n = basis_.n;
    const int m = static_cast<int>(spec_.obstacles.size());
    ResidualEntry e;

    const Eigen::VectorXd r_nh = eval_kinematic_residual(samples(0, 1), samples(1, 1),
                                                         samples(2, 1), samples(3), state_.gamma,
                                                         state_.v);
    double acc = 0.0;
    for (int t = 0; t < n; ++t)
        acc += Eigen::Vector3d(r_nh(t), r_nh(n + t), r_nh(2 * n + t)).norm();
    e.kinematic = acc / n;

    if (m > 0)
    {
        const Eigen::VectorXd r_fc =
            eval_collision_residual(samples(0), samples(1), samples(2), state_.alpha, state_.beta,
                                    state_.d, spec_.obstacles);
        acc = 0.0;
        for (int i = 0; i < m; ++i)
            for (int t = 0; t < n; ++t)
                acc += Eigen::Vector3d(r_fc(i * n + t), r_fc(m * n + i * n + t),
                                       r_fc(2 * m * n + i * n + t))
                           .norm();
        e.collision = acc / (m * n);
    }

    const Eigen::VectorXd psid = samples(3, 1);
    const double cap_gain = spec_.limits.g * std::tan(spec_.limits.phi_max);
    acc = 0.0;
    for (int t = 0; t < n; ++t)
        acc += std::max(0.0, std::abs(psid(t)) - cap_gain / state_.v(t));
    e.heading_rate = acc / n;
    return e;
}

void Solver::run_iteration()
{
    step_position_axis(0);
    step_position_axis(1);
    step_position_axis(2);
    step_heading();
    step_flight_path();
    step_velocity();
    step_obstacle_angles();
    step_obstacle_distance();
    update_bregman_multipliers();
}

void Solver::check_finite(int iteration) const
{
    const bool ok = state_.c_x.allFinite() && state_.c_y.allFinite() && state_.c_z.allFinite() &&
                    state_.c_psi.allFinite() && state_.v.allFinite() && state_.gamma.allFinite() &&
                    state_.alpha.allFinite() && state_.beta.allFinite() && state_.d.allFinite() &&
                    state_.lambda_x.allFinite() && state_.lambda_y.allFinite() &&
                    state_.lambda_z.allFinite() && state_.lambda_psi.allFinite() &&
                    state_.lambda_in.allFinite() && state_.s_in.allFinite();
    if (!ok)
        throw NonFiniteError("non-finite value encountered at iteration " +
                             std::to_string(iteration));
}

TrajectorySolution Solver::solve() { return solve(IterationCallback{}); }

TrajectorySolution Solver::solve(const IterationCallback& on_iteration)
{
    const auto t_start = std::chrono::steady_clock::now();
    initialize_state();

    TrajectorySolution sol;
    sol.status = SolveStatus::MaxIterReached;
    for (int k = 0; k < config_.max_iter; ++k)
    {
        run_iteration();
        check_finite(k);
        state_.iter = k + 1;
        const ResidualEntry e = compute_residuals();
        sol.residuals.push(e);
        if (on_iteration)
            on_iteration(state_, e);
        if (e.max() <= config_.residual_tol)
        {
            sol.status = SolveStatus::Converged;
            break;
        }
    }
    const auto t_end = std::chrono::steady_clock::now();
    const double wall = std::chrono::duration<double>(t_end - t_start).count();

    sol.iterations = static_cast<int>(sol.residuals.iterations());
    sol.total_time = basis_.total_time;
    sol.t = basis_.t_samples;
    sol.x = samples(0);
    sol.y = samples(1);
    sol.z = samples(2);
    sol.psi = samples(3);
    sol.gamma = state_.gamma;
    sol.v = state_.v;
    sol.c_x = state_.c_x;
    sol.c_y = state_.c_y;
    sol.c_z = state_.c_z;
    sol.c_psi = state_.c_psi;

    const double dt = basis_.total_time / (basis_.n - 1);
    sol.controls = recover_controls(sol.v, sol.gamma, samples(3, 1), dt, spec_.limits);
    sol.metrics = compute_metrics(sol.x, sol.y, sol.z, spec_.goal, sol.controls, wall,
                                  sol.iterations, sol.status == SolveStatus::Converged);
    return sol;
}

double estimate_traversal_time(const ProblemSpec& spec, const BasisSet& basis, int pre_iterations)
{
    ProblemSpec reduced = spec;
    reduced.weights.rho_nh = 0.0;
    reduced.horizon.n = basis.n;
    reduced.horizon.degree = basis.degree;
    reduced.horizon.total_time = basis.total_time;
    if (!reduced.start.heading)
        reduced.start.heading = 0.0;  // heading plays no role in the reduced loop

    SolverConfig cfg;
    cfg.rho_nh = 0.0;
    Solver pre(reduced, cfg);
    for (int k = 0; k < pre_iterations; ++k)
    {
        pre.step_position_axis(0);
        pre.step_position_axis(1);
        pre.step_position_axis(2);
        pre.step_obstacle_angles();
        pre.step_obstacle_distance();
        // no multiplier updates: the penalty-only pre-solve has a fixed point
    }
    const Eigen::VectorXd x = pre.samples(0), y = pre.samples(1), z = pre.samples(2);
    double arc = 0.0;
    for (int t = 0; t + 1 < basis.n; ++t)
        arc += Eigen::Vector3d(x(t + 1) - x(t), y(t + 1) - y(t), z(t + 1) - z(t)).norm();
    return std::max(arc / spec.limits.v_min, basis.n * 0.01);
}

}  // namespace fwtraj
