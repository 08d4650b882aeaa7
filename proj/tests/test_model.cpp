#include <cmath>

#include <gtest/gtest.h>

#include "kinbridge/errors.hpp"
#include "kinbridge/model.hpp"

using namespace kinbridge;

namespace {

// KL(N(mu, s2) | N(0, 1/alpha)) in closed form.
double gaussian_kl_1d(double mu, double s2, double alpha) {
    return 0.5 * (alpha * s2 + alpha * mu * mu - 1.0 - std::log(alpha * s2));
}

} // namespace

TEST(Grid, NodesAndHash) {
    const PhaseGrid g = build_grid({-4, 4}, {-3, 3}, 9, 13);
    EXPECT_EQ(g.size(), 117);
    EXPECT_DOUBLE_EQ(g.hx, 1.0);
    EXPECT_DOUBLE_EQ(g.x_nodes(8), 4.0);
    EXPECT_TRUE(g.v_symmetric());
    EXPECT_EQ(g.hash(), build_grid({-4, 4}, {-3, 3}, 9, 13).hash());
    EXPECT_NE(g.hash(), build_grid({-4, 4}, {-3, 3}, 9, 15).hash());
    EXPECT_FALSE(build_grid({-4, 4}, {-3, 2}, 9, 13).v_symmetric());
}

TEST(Grid, RejectsBadInput) {
    EXPECT_THROW(build_grid({1, -1}, {-1, 1}, 9, 9), ConfigurationError);
    EXPECT_THROW(build_grid({-1, 1}, {-1, 1}, 1, 9), ConfigurationError);
}

TEST(Potential, QuadraticAndLogCosh) {
    const Potential q = Potential::quadratic(2.0, 1.0);
    EXPECT_DOUBLE_EQ(q.U(1.5), 2.25);
    EXPECT_DOUBLE_EQ(q.grad(1.5), 3.0);
    const Potential lc = Potential::log_cosh(0.5, 1.0);
    EXPECT_DOUBLE_EQ(lc.alpha(), 1.0);
    EXPECT_DOUBLE_EQ(lc.beta(), 1.5);
    EXPECT_NEAR(lc.U(0.7), 0.245 + 0.5 * std::log(std::cosh(0.7)), 1e-14);
    // gradient against a central difference of U
    const double h = 1e-5;
    EXPECT_NEAR(lc.grad(0.7), (lc.U(0.7 + h) - lc.U(0.7 - h)) / (2 * h), 1e-8);
    EXPECT_TRUE(lc.satisfies_h2());
    EXPECT_THROW(Potential::log_cosh(-1.5, 1.0), ConfigurationError);
}

TEST(Potential, TanhBandCoversInterval) {
    const Potential p = Potential::tanh_band(1.0, 4.0, 2.0);
    EXPECT_NEAR(p.hess(-20.0), 1.0, 1e-12);
    EXPECT_NEAR(p.hess(20.0), 4.0, 1e-12);
    const double h = 1e-4;
    EXPECT_NEAR(p.grad(0.9), (p.U(0.9 + h) - p.U(0.9 - h)) / (2 * h), 1e-7);
    EXPECT_NEAR(p.hess(0.9), (p.grad(0.9 + h) - p.grad(0.9 - h)) / (2 * h), 1e-7);
    p.check_hessian_bounds(build_grid({-8, 8}, {-6, 6}, 33, 9));
}

TEST(Potential, H2Violation) {
    const Potential p = Potential::tanh_band(1.0, 16.0, 2.0); // sqrt(16) - 1 = 3 > 2
    EXPECT_FALSE(p.satisfies_h2());
}

TEST(InvariantMeasure, QuadraticNormalisation) {
    const Potential pot = Potential::quadratic(2.0, 1.0);
    const PhaseGrid g = default_grid(pot, 61, 61);
    const InvariantMeasure m = invariant_measure(pot, g);
    EXPECT_NEAR(m.logZ, std::log(2.0 * M_PI / std::sqrt(2.0)), 1e-12);
    EXPECT_NEAR(m.omega.sum(), 1.0, 1e-13);
    EXPECT_NEAR(m.grid_mass, 1.0, 1e-7);
    EXPECT_NEAR((m.omega - (m.omega_x * m.omega_v.transpose()).array()).abs().maxCoeff(), 0.0, 1e-16);
}

TEST(InvariantMeasure, NumericalPartitionFunction) {
    const Potential pot = Potential::log_cosh(0.5, 1.0);
    const PhaseGrid g = default_grid(pot, 81, 41);
    const InvariantMeasure m = invariant_measure(pot, g);
    // independent fine Simpson rule over [-12, 12]
    const int n = 24000;
    const double h = 24.0 / n;
    double sx = 0.0;
    for (int k = 0; k <= n; ++k) {
        const double x = -12.0 + k * h;
        const double w = (k == 0 || k == n) ? 1.0 : (k % 2 ? 4.0 : 2.0);
        sx += w * std::exp(-pot.U(x));
    }
    sx *= h / 3.0;
    EXPECT_NEAR(m.logZ_x, std::log(sx), 1e-9);
}

TEST(InvariantMeasure, SmallBoxIsTruncation) {
    const Potential pot = Potential::quadratic(1.0, 1.0);
    EXPECT_THROW(invariant_measure(pot, build_grid({-2, 2}, {-6, 6}, 41, 41)), TruncationError);
}

TEST(Densities, StationaryHasZeroEntropy) {
    const Potential pot = Potential::quadratic(1.0, 1.0);
    const PhaseGrid g = default_grid(pot, 41, 41);
    const InvariantMeasure m = invariant_measure(pot, g);
    EXPECT_NEAR(relative_entropy(stationary_phase_density(g), m), 0.0, 1e-15);
    EXPECT_NEAR(fisher_information(stationary_phase_density(g), m, g), 0.0, 1e-20);
}

TEST(Densities, GaussianEntropyMatchesClosedForm) {
    const Potential pot = Potential::quadratic(1.0, 1.0);
    const PhaseGrid g = default_grid(pot, 81, 81);
    const InvariantMeasure m = invariant_measure(pot, g);
    const SpatialDensity q = gaussian_spatial_density(-1.0, 0.25, m, g);
    EXPECT_NEAR(mass(q, m), 1.0, 1e-13);
    EXPECT_NEAR(relative_entropy(q, m), gaussian_kl_1d(-1.0, 0.25, 1.0), 1e-8);
    // lifting leaves the entropy unchanged and marginalizing undoes the lift
    const PhaseDensity lifted = lift(q, g);
    EXPECT_NEAR(relative_entropy(lifted, m), relative_entropy(q, m), 1e-12);
    EXPECT_LT((marginalize_velocity(lifted, m).values - q.values).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Densities, FisherInformationOfGaussian) {
    const Potential pot = Potential::quadratic(1.0, 1.0);
    const PhaseGrid g = default_grid(pot, 121, 121);
    const InvariantMeasure m = invariant_measure(pot, g);
    Eigen::Vector2d mu(0.5, -0.3);
    Eigen::Matrix2d cov;
    cov << 0.6, 0.1, 0.1, 0.8;
    const PhaseDensity q = gaussian_phase_density(mu, cov, m, g);
    // E|grad log(q/m)|^2 = tr((D - S^-1) S (D - S^-1)) + |D mu|^2 with D the precision of m
    const Eigen::Matrix2d d = Eigen::Matrix2d::Identity();
    const Eigen::Matrix2d e = d - cov.inverse();
    const double exact = (e * cov * e.transpose()).trace() + (d * mu).squaredNorm();
    EXPECT_NEAR(fisher_information(q, m, g), exact, 2e-3 * exact);
    const Moments mo = phase_moments(q, m, g);
    EXPECT_LT((mo.mean - mu).cwiseAbs().maxCoeff(), 1e-8);
    EXPECT_LT((mo.cov - cov).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(Densities, UniformHasCompactSupport) {
    const Potential pot = Potential::quadratic(1.0, 1.0);
    const PhaseGrid g = default_grid(pot, 81, 21);
    const InvariantMeasure m = invariant_measure(pot, g);
    const SpatialDensity u = uniform_spatial_density(-1.0, 1.0, m, g);
    EXPECT_NEAR(mass(u, m), 1.0, 1e-13);
    EXPECT_EQ(u.values(0), 0.0);
    EXPECT_GT(u.values(40), 0.0);
}

TEST(FiniteDifference, ExactOnQuadratics) {
    const double h = 0.1;
    Vector f(11);
    for (int k = 0; k < 11; ++k) {
        const double x = k * h;
        f(k) = 3.0 * x * x - x + 2.0;
    }
    const Vector d = finite_difference_derivative(f, h);
    for (int k = 0; k < 11; ++k) EXPECT_NEAR(d(k), 6.0 * k * h - 1.0, 1e-11);
}
