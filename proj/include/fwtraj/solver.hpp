#pragma once

#include <Eigen/Dense>
#include <functional>
#include <optional>
#include <vector>

#include "fwtraj/basis.hpp"
#include "fwtraj/model.hpp"
#include "fwtraj/postprocess.hpp"

namespace fwtraj {

enum class HeadingVariant { UnconstrainedAdmm, ConstrainedQp };

struct SolverConfig {
    int max_iter = 300;
    double residual_tol = 1e-3;
    // Penalty overrides; when unset the values from ProblemSpec.weights apply.
    std::optional<double> rho_nh;
    std::optional<double> rho_c;
    std::optional<double> rho_in;
    int pre_iterations = 30;  // traversal-time heuristic iterations
    HeadingVariant heading_variant = HeadingVariant::UnconstrainedAdmm;
};

/// All per-iteration unknowns of the alternating minimization.
struct SolverState {
    Eigen::VectorXd c_x, c_y, c_z, c_psi;  // degree+1 coefficients each
    Eigen::VectorXd v;                     // n, in [v_min, v_max]
    Eigen::VectorXd gamma;                 // n, in [-gamma_max, gamma_max]
    Eigen::MatrixXd alpha;                 // m x n, in [-pi, pi]
    Eigen::MatrixXd beta;                  // m x n, in [0, pi]
    Eigen::MatrixXd d;                     // m x n, >= 1
    Eigen::VectorXd lambda_x, lambda_y, lambda_z, lambda_psi;  // coefficient space
    Eigen::VectorXd lambda_in, s_in;       // 2n, ADMM duals/slacks, s_in >= 0
    int iter = 0;
};

/// Constant matrices and factorizations reused across iterations. The position
/// KKT is shared by the x, y and z solves; A_fc never materializes because
/// A_fc^T u = P^T (sum of the per-obstacle blocks of u) and
/// A_fc^T A_fc = m P^T P. A_in = [Pdot; -Pdot] is folded the same way.
struct KktCache {
    Eigen::MatrixXd Q_pos;       // w_smooth Pdd'Pdd + w_goal Pn'Pn
    Eigen::MatrixXd Q_psi;       // heading quadratic incl. the rho_in relaxation term
    Eigen::MatrixXd A_eq;        // 3 x (degree+1), position boundary rows
    Eigen::MatrixXd A_eq_psi;    // 2 x (degree+1), heading boundary rows
    Eigen::MatrixXd pos_kkt;     // assembled saddle-point matrix (kept for oracles)
    Eigen::MatrixXd psi_kkt;
    Eigen::PartialPivLU<Eigen::MatrixXd> pos_lu;
    Eigen::PartialPivLU<Eigen::MatrixXd> psi_lu;
    double rho_nh = 1.0, rho_c = 1.0, rho_in = 1.0;
    int obstacle_count = 0;
};

struct ResidualEntry {
    double kinematic = 0.0;     // m/s, mean over samples of |f_nh(t)|
    double collision = 0.0;     // m, mean over (obstacle, sample) of |f_c|
    double heading_rate = 0.0;  // rad/s, mean of max(0, |psid| - (g/v) tan phi_max)
    double max() const { return std::max(kinematic, std::max(collision, heading_rate)); }
};

struct ResidualReport {
    std::vector<double> mean_kinematic;
    std::vector<double> mean_collision;
    std::vector<double> mean_heading_rate;
    void push(const ResidualEntry& e);
    size_t iterations() const { return mean_kinematic.size(); }
};

enum class SolveStatus { Converged, MaxIterReached };

struct TrajectorySolution {
    Eigen::VectorXd t, x, y, z, psi, gamma, v;  // n samples each
    Eigen::VectorXd c_x, c_y, c_z, c_psi;
    ControlProfile controls;
    SolutionMetrics metrics;
    ResidualReport residuals;
    SolveStatus status = SolveStatus::MaxIterReached;
    int iterations = 0;
    double total_time = 0.0;
};

// --- closed-form step kernels (pre-clip values; the step_* methods clip) ---

/// Wrap to (-pi, pi].
double wrap_angle(double a);

/// Unwrap a sampled angle sequence to be continuous, anchored so the first
/// element lies within pi of `anchor`.
Eigen::VectorXd unwrap_angles(double anchor, const Eigen::VectorXd& raw);

/// gamma* = atan2(-zd, xd cos psi + yd sin psi), the unclipped flight-path step.
Eigen::VectorXd flight_path_raw(const Eigen::VectorXd& xdot, const Eigen::VectorXd& ydot,
                                const Eigen::VectorXd& zdot, const Eigen::VectorXd& psi);

/// Obstacle-normalized solid angles of point p seen from the ellipsoid:
/// alpha = atan2((py-cy)/b, (px-cx)/a), beta = atan2(hypot(...), (pz-cz)/c).
/// Coincident point maps to alpha = 0, beta = pi/2.
void polar_angles(const Eigen::Vector3d& p, const Ellipsoid& ob, double& alpha, double& beta);

/// Normalized radius |((p-c)/axes)|; >= 1 iff p is outside the ellipsoid.
double polar_distance(const Eigen::Vector3d& p, const Ellipsoid& ob);

/// Unclipped stationary point N/D of the scalar distance subproblem.
double distance_raw(const Eigen::Vector3d& p, const Ellipsoid& ob, double alpha, double beta);

/// ADMM slack/multiplier update for the relaxed inequality A c <= b:
///   s    = max(0, -Ac + b - lambda/rho)
///   lambda += rho (Ac - b + s)
/// When the unclipped slack is elementwise non-negative the updated lambda is
/// exactly zero.
void admm_rate_update(const Eigen::VectorXd& Ac, const Eigen::VectorXd& b_in, double rho_in,
                      Eigen::VectorXd& s_in, Eigen::VectorXd& lambda_in);

/// Assemble the cache for fixed basis, weights and obstacle count.
KktCache build_kkt_cache(const BasisSet& basis, const ProblemSpec& spec, double rho_nh,
                         double rho_c, double rho_in);

/// Initial heading the boundary rows enforce: the supplied start heading,
/// else the direction of the start velocity, else the bearing to the goal;
/// throws DegenerateSpecError when none exists.
double resolve_initial_heading(const ProblemSpec& spec);

class Solver {
public:
    explicit Solver(ProblemSpec spec, SolverConfig config = {});

    using IterationCallback = std::function<void(const SolverState&, const ResidualEntry&)>;

    TrajectorySolution solve();
    TrajectorySolution solve(const IterationCallback& on_iteration);

    // One block-coordinate pass, exposed for tests and custom loops.
    void initialize_state();
    void step_position_axis(int axis);  // 0=x, 1=y, 2=z
    void step_heading();
    void step_flight_path();
    void step_velocity();
    void step_obstacle_angles();
    void step_obstacle_distance();
    void update_bregman_multipliers();
    ResidualEntry compute_residuals() const;
    void run_iteration();  // all of the above in algorithm order

    const ProblemSpec& spec() const { return spec_; }
    const SolverConfig& config() const { return config_; }
    const BasisSet& basis() const { return basis_; }
    const KktCache& cache() const { return cache_; }
    SolverState& state() { return state_; }
    const SolverState& state() const { return state_; }
    double total_time() const { return basis_.total_time; }
    const Eigen::VectorXd& heading_target() const { return theta_; }

    Eigen::VectorXd samples(int axis, int order = 0) const;  // axis 0..2 position, 3 = psi

private:
    void step_heading_admm();
    void step_heading_qp();
    Eigen::VectorXd solve_position_kkt(int axis) const;
    Eigen::VectorXd collision_linear_target(int axis) const;  // sum_i (xi + axes d trig)
    void check_finite(int iteration) const;

    ProblemSpec spec_;
    SolverConfig config_;
    double rho_nh_, rho_c_, rho_in_;
    BasisSet basis_;
    KktCache cache_;
    SolverState state_;
    Eigen::VectorXd theta_;  // unwrapped heading target of the current iteration
    double psi0_;            // resolved initial heading
};

/// Smoothness+collision pre-solve (rho_nh = 0, no bounds, no multiplier
/// updates); returns max(arc_length / v_min, n * 0.01).
double estimate_traversal_time(const ProblemSpec& spec, const BasisSet& basis,
                               int pre_iterations = 30);

}  // namespace fwtraj
