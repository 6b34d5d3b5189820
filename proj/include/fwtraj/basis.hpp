#pragma once

#include <Eigen/Dense>

namespace fwtraj {

/// Sampled Bernstein basis matrix and its first two time derivatives for one
/// polynomial parameterization on a uniform grid over [0, T]. The basis lives
/// on normalized time tau = t/T; derivative matrices carry the 1/T and 1/T^2
/// chain-rule factors so that sampled curves have physical units.
struct BasisSet {
    int n = 0;       // number of time samples
    int degree = 0;  // polynomial degree
    double total_time = 0.0;
    Eigen::VectorXd t_samples;  // strictly increasing, t[0]=0, t[n-1]=T
    Eigen::MatrixXd P;          // n x (degree+1), rows sum to 1
    Eigen::MatrixXd Pdot;       // n x (degree+1), rows sum to 0, units 1/s
    Eigen::MatrixXd Pddot;      // n x (degree+1), rows sum to 0, units 1/s^2
};

/// Build the basis for n uniform samples of a degree-`degree` Bernstein
/// polynomial over [0, total_time]. Requires n >= 3, degree >= 4, T > 0.
BasisSet build_basis(int n, int degree, double total_time);

/// Sample P*c, Pdot*c or Pddot*c for order 0, 1, 2.
Eigen::VectorXd eval_curve(const BasisSet& basis, const Eigen::VectorXd& coeffs, int order);

}  // namespace fwtraj
