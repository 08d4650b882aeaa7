#include <cmath>

#include <gtest/gtest.h>

#include "kinbridge/errors.hpp"
#include "kinbridge/gaussian.hpp"
#include "kinbridge/interpolation.hpp"

using namespace kinbridge;

namespace {

struct Bridge {
    Potential pot = Potential::quadratic(1, 1);
    PhaseGrid g = build_grid({-6, 6}, {-6, 6}, 41, 41);
    InvariantMeasure m = invariant_measure(pot, g);
    TwistedNorms tn = build_twisted_norms(pot, 1, true);
    SpatialDensity mu = gaussian_spatial_density(-1, 0.25, m, g);
    SpatialDensity nu = gaussian_spatial_density(1, 0.25, m, g);
    double T = 2.0;
    SolveResult sol;
    BridgeFlow flow;

    Bridge() {
        sol = sinkhorn(reduce_kernel(gaussian_kernel(1, 1, T, g, m), m), mu, nu);
        const GaussHermitePropagator prop(1, 1, g);
        flow = compute_flow(sol.potentials, prop, uniform_times(T, 33), m);
    }
};

const Bridge& bridge() {
    static const Bridge b;
    return b;
}

} // namespace

TEST(Flow, EndpointsMatchMarginals) {
    const Bridge& b = bridge();
    EXPECT_LE(b.flow.max_mass_drift, 2e-6);
    const SpatialDensity r0 = marginalize_velocity(b.flow.rho_t.front(), b.m);
    const SpatialDensity rT = marginalize_velocity(b.flow.rho_t.back(), b.m);
    EXPECT_LT(0.5 * (r0.values - b.mu.values).cwiseAbs().dot(b.m.omega_x), 1e-6);
    EXPECT_LT(0.5 * (rT.values - b.nu.values).cwiseAbs().dot(b.m.omega_x), 1e-6);
}

TEST(Flow, CostIdentityHoldsAlongTheBridge) {
    const Bridge& b = bridge();
    const Diagnostics d = diagnostics(b.flow, b.tn, b.m, b.g);
    const std::vector<double> res = cost_identity_residual(b.flow, d, b.sol.report.primal_cost);
    for (double r : res) EXPECT_LT(r, 5e-3 * b.sol.report.primal_cost);
}

TEST(Flow, CorrectorsBoundFisherInformation) {
    const Bridge& b = bridge();
    const Diagnostics d = diagnostics(b.flow, b.tn, b.m, b.g);
    for (const DiagnosticsRow& row : d.rows) {
        EXPECT_LE(row.I, d.c_eq * (row.phi + row.psi) * (1 + 1e-10)) << row.t;
        EXPECT_GE(row.gamma_f, 0.0);
        EXPECT_GE(row.gamma_b, 0.0);
    }
    const EntropyGap gap = marginal_entropy_gap(b.flow, b.mu, b.nu, b.m);
    EXPECT_GE(gap.gap0, -1e-8);
    EXPECT_GE(gap.gapT, -1e-8);
}

TEST(Flow, WassersteinColumnUsesGridMoments) {
    const Bridge& b = bridge();
    DiagnosticsOptions opts;
    opts.gaussian_alpha = 1.0;
    const Diagnostics d = diagnostics(b.flow, b.tn, b.m, b.g, opts);
    const Moments mo = phase_moments(b.flow.rho_t.front(), b.m, b.g);
    ASSERT_TRUE(d.rows.front().w2_to_m.has_value());
    EXPECT_NEAR(*d.rows.front().w2_to_m, gaussian_wasserstein(mo.mean, mo.cov, Vector::Zero(2), Matrix::Identity(2, 2)),
                1e-12);
    // the joint distance dominates the one between x-marginals N(-1, 1/4) and N(0, 1)
    EXPECT_GE(*d.rows.front().w2_to_m, std::sqrt(1.25) - 1e-6);
    EXPECT_NEAR(mo.mean(0), -1.0, 1e-6);
}

TEST(Flow, RejectsTimesOutsideHorizon) {
    const Bridge& b = bridge();
    const GaussHermitePropagator prop(1, 1, b.g);
    EXPECT_THROW(compute_flow(b.sol.potentials, prop, {0.0, 3.0}, b.m), ConfigurationError);
}

TEST(GaussianW2, ClosedForms) {
    Matrix c1(1, 1), c2(1, 1);
    c1(0, 0) = 4.0;
    c2(0, 0) = 0.25;
    Vector m1 = Vector::Constant(1, 1.0), m2 = Vector::Constant(1, -2.0);
    EXPECT_NEAR(gaussian_wasserstein(m1, c1, m2, c2), std::sqrt(9.0 + 1.5 * 1.5), 1e-12);
    // commuting 2x2 case reduces to coordinates
    Matrix a = Eigen::Vector2d(2.0, 0.5).asDiagonal(), bm = Eigen::Vector2d(0.5, 3.0).asDiagonal();
    const double s = std::pow(std::sqrt(2.0) - std::sqrt(0.5), 2) + std::pow(std::sqrt(0.5) - std::sqrt(3.0), 2);
    EXPECT_NEAR(gaussian_wasserstein(Vector::Zero(2), a, Vector::Zero(2), bm), std::sqrt(s), 1e-12);
    // the metric scales space by M^{1/2}
    Matrix metric = Eigen::Vector2d(4.0, 4.0).asDiagonal();
    EXPECT_NEAR(gaussian_wasserstein(Vector::Zero(2), a, Vector::Zero(2), bm, metric), 2.0 * std::sqrt(s), 1e-12);
    // symmetric under swap for non-commuting covariances
    Matrix c(2, 2);
    c << 1.0, 0.6, 0.6, 0.9;
    EXPECT_NEAR(gaussian_wasserstein(Vector::Zero(2), a, Vector::Ones(2), c),
                gaussian_wasserstein(Vector::Ones(2), c, Vector::Zero(2), a), 1e-12);
    EXPECT_NEAR(gaussian_wasserstein(Vector::Ones(2), c, Vector::Ones(2), c), 0.0, 1e-7);
}

TEST(GaussianW2, RejectsBadInput) {
    Matrix bad(2, 2);
    bad << 1.0, 2.0, 2.0, 1.0;
    EXPECT_THROW(gaussian_wasserstein(Vector::Zero(2), bad, Vector::Zero(2), Matrix::Identity(2, 2)), DomainError);
    EXPECT_THROW(gaussian_wasserstein(Vector::Zero(1), Matrix::Identity(1, 1), Vector::Zero(2), Matrix::Identity(2, 2)),
                 DomainError);
}

TEST(ControlledSde, DeterministicAndHitsTarget) {
    const Bridge& b = bridge();
    const std::vector<double> snaps{0.0, b.T};
    const SdeResult r1 = simulate_controlled_sde(b.flow, b.pot, b.m, b.g, 4000, 0.01, 11, snaps);
    const SdeResult r2 = simulate_controlled_sde(b.flow, b.pot, b.m, b.g, 4000, 0.01, 11, snaps);
    ASSERT_EQ(r1.snapshots.size(), 2u);
    EXPECT_EQ(r1.snapshots.back().mean, r2.snapshots.back().mean);
    EXPECT_EQ(r1.clamped, 0u);
    const SdeSnapshot& end = r1.snapshots.back();
    EXPECT_NEAR(end.mean(0), 1.0, 5.0 * end.mean_se(0) + 0.02);
    EXPECT_NEAR(end.cov(0, 0), 0.25, 5.0 * end.cov_se(0, 0) + 0.02);
    const SdeResult r3 = simulate_controlled_sde(b.flow, b.pot, b.m, b.g, 4000, 0.01, 12, snaps);
    EXPECT_NE(r1.snapshots.back().mean, r3.snapshots.back().mean);
}

TEST(ControlledSde, UncontrolledRelaxesTowardEquilibrium) {
    const Bridge& b = bridge();
    const SdeResult r = simulate_controlled_sde(b.flow, b.pot, b.m, b.g, 4000, 0.01, 3, {b.T}, false);
    // linear dynamics move the mean by the mean map whatever the shape of rho_0
    const Moments mo = phase_moments(b.flow.rho_t.front(), b.m, b.g);
    Gaussian2 q0{mo.mean, mo.cov};
    const Gaussian2 q = push_forward(q0, 1, 1, b.T);
    const SdeSnapshot& s = r.snapshots.front();
    EXPECT_NEAR(s.mean(0), q.mean(0), 5.0 * s.mean_se(0) + 0.01);
    EXPECT_NEAR(s.mean(1), q.mean(1), 5.0 * s.mean_se(1) + 0.01);
}

TEST(ControlledSde, RejectsCoarseSteps) {
    const Bridge& b = bridge();
    EXPECT_THROW(simulate_controlled_sde(b.flow, b.pot, b.m, b.g, 100, 0.1, 1, {b.T}), ConfigurationError);
    EXPECT_THROW(simulate_controlled_sde(b.flow, b.pot, b.m, b.g, 0, 0.01, 1, {b.T}), ConfigurationError);
}
