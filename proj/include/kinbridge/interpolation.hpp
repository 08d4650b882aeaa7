#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "kinbridge/common.hpp"
#include "kinbridge/model.hpp"
#include "kinbridge/propagator.hpp"
#include "kinbridge/solver.hpp"
#include "kinbridge/twisted.hpp"

namespace kinbridge {

struct BridgeFlow {
    double T = 0.0;
    Domain domain = Domain::Spatial;
    std::vector<double> times;
    std::vector<Field> log_f_t, log_g_t;
    std::vector<PhaseDensity> rho_t;
    double max_mass_drift = 0.0;
};

std::vector<double> uniform_times(double T, int count = 65);

// f_t = P*_t f, g_t = P_{T-t} g on the phase grid. Throws AccuracyError when
// some rho_t loses more than mass_tol.
BridgeFlow compute_flow(const SchrodingerPotentials& p, const Propagator& prop, const std::vector<double>& times,
                        const InvariantMeasure& m, double mass_tol = 2e-6);

struct DiagnosticsRow {
    double t = 0.0;
    double H = 0.0, I = 0.0;
    double hf = 0.0, hb = 0.0;
    double phi = 0.0, psi = 0.0;
    double gamma_f = 0.0, gamma_b = 0.0;
    std::optional<double> w2_to_m;
};

struct Diagnostics {
    std::vector<DiagnosticsRow> rows;
    double c_eq = 0.0; // I <= c_eq (phi + psi)
};

struct DiagnosticsOptions {
    double mask = 1e-12;
    // Set for quadratic U to fill w2_to_m from the grid moments.
    std::optional<double> gaussian_alpha;
};

Diagnostics diagnostics(const BridgeFlow& flow, const TwistedNorms& tn, const InvariantMeasure& m,
                        const PhaseGrid& grid, const DiagnosticsOptions& opts = {});

// |C - H_0 - H_T - int_0^t gamma_b - int_t^T gamma_f + H_t| with trapezoid time integrals.
std::vector<double> cost_identity_residual(const BridgeFlow& flow, const Diagnostics& diag, double cost);

struct EntropyGap {
    double gap0 = 0.0;
    double gapT = 0.0;
};
EntropyGap marginal_entropy_gap(const BridgeFlow& flow, const SpatialDensity& mu, const SpatialDensity& nu,
                                const InvariantMeasure& m);

// Bures W2 between N(L m1, L C1 L) and N(L m2, L C2 L) with L = M^{1/2} (M = I by default).
double gaussian_wasserstein(const Vector& mean1, const Matrix& cov1, const Vector& mean2, const Matrix& cov2,
                            const std::optional<Matrix>& metric = std::nullopt);

struct SdeSnapshot {
    double t = 0.0;
    Eigen::Vector2d mean, mean_se;
    Eigen::Matrix2d cov, cov_se;
    Field histogram; // empirical density relative to m on the grid cells
};

struct SdeResult {
    std::vector<SdeSnapshot> snapshots;
    std::size_t clamped = 0;
    double clamped_fraction = 0.0;
};

// Euler-Maruyama for the bridge SDE with drift (v, -U' - gamma v + 2 gamma d_v log g_t),
// started from samples of rho_0. Path p uses the RNG stream seeded by (seed, p).
// control = false drops the feedback term (plain Langevin).
SdeResult simulate_controlled_sde(const BridgeFlow& flow, const Potential& pot, const InvariantMeasure& m,
                                  const PhaseGrid& grid, std::size_t n_paths, double dt, std::uint64_t seed,
                                  const std::vector<double>& snapshot_times, bool control = true,
                                  Exec exec = Exec::Parallel);

} // namespace kinbridge
