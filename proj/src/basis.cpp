#include "fwtraj/basis.hpp"

#include <cmath>

#include "fwtraj/errors.hpp"

namespace fwtraj {

namespace {

// Rows of the degree-d Bernstein basis evaluated at each tau in [0, 1].
Eigen::MatrixXd bernstein_rows(const Eigen::VectorXd& tau, int d)
{
    const int n = static_cast<int>(tau.size());
    Eigen::MatrixXd B(n, d + 1);
    Eigen::VectorXd binom(d + 1);
    binom(0) = 1.0;
    for (int j = 1; j <= d; ++j)
        binom(j) = binom(j - 1) * static_cast<double>(d - j + 1) / static_cast<double>(j);
    for (int i = 0; i < n; ++i)
    {
        const double t = tau(i);
        const double s = 1.0 - t;
        // powers accumulated outward to avoid pow() at the endpoints
        Eigen::VectorXd tp(d + 1), sp(d + 1);
        tp(0) = 1.0;
        sp(0) = 1.0;
        for (int j = 1; j <= d; ++j)
        {
            tp(j) = tp(j - 1) * t;
            sp(j) = sp(j - 1) * s;
        }
        for (int j = 0; j <= d; ++j)
            B(i, j) = binom(j) * tp(j) * sp(d - j);
    }
    return B;
}

}  // namespace

BasisSet build_basis(int n, int degree, double total_time)
{
    if (n < 3)
        throw DimensionError("build_basis: n must be >= 3, got " + std::to_string(n));
    if (degree < 4)
        throw DimensionError("build_basis: degree must be >= 4, got " + std::to_string(degree));
    if (!(total_time > 0.0) || !std::isfinite(total_time))
        throw DimensionError("build_basis: total_time must be positive and finite");

    BasisSet b;
    b.n = n;
    b.degree = degree;
    b.total_time = total_time;
    b.t_samples = Eigen::VectorXd::LinSpaced(n, 0.0, total_time);
    const Eigen::VectorXd tau = Eigen::VectorXd::LinSpaced(n, 0.0, 1.0);

    const int d = degree;
    b.P = bernstein_rows(tau, d);
    const Eigen::MatrixXd B1 = bernstein_rows(tau, d - 1);
    const Eigen::MatrixXd B2 = bernstein_rows(tau, d - 2);

    // d/dtau B_j^d = d * (B_{j-1}^{d-1} - B_j^{d-1}), then chain rule 1/T.
    b.Pdot.setZero(n, d + 1);
    for (int j = 0; j <= d; ++j)
    {
        if (j >= 1)
            b.Pdot.col(j) += B1.col(j - 1);
        if (j <= d - 1)
            b.Pdot.col(j) -= B1.col(j);
    }
    b.Pdot *= static_cast<double>(d) / total_time;

    // d^2/dtau^2 B_j^d = d(d-1) * (B_{j-2}^{d-2} - 2 B_{j-1}^{d-2} + B_j^{d-2}).
    b.Pddot.setZero(n, d + 1);
    for (int j = 0; j <= d; ++j)
    {
        if (j >= 2)
            b.Pddot.col(j) += B2.col(j - 2);
        if (j >= 1 && j - 1 <= d - 2)
            b.Pddot.col(j) -= 2.0 * B2.col(j - 1);
        if (j <= d - 2)
            b.Pddot.col(j) += B2.col(j);
    }
    b.Pddot *= static_cast<double>(d) * static_cast<double>(d - 1) / (total_time * total_time);

    return b;
}

Eigen::VectorXd eval_curve(const BasisSet& basis, const Eigen::VectorXd& coeffs, int order)
{
    if (coeffs.size() != basis.degree + 1)
        throw DimensionError("eval_curve: coeffs length " + std::to_string(coeffs.size()) +
                             " != degree+1 = " + std::to_string(basis.degree + 1));
    switch (order)
    {
    case 0:
        return basis.P * coeffs;
    case 1:
        return basis.Pdot * coeffs;
    case 2:
        return basis.Pddot * coeffs;
    default:
        throw DimensionError("eval_curve: order must be 0, 1 or 2");
    }
}

}  // namespace fwtraj
