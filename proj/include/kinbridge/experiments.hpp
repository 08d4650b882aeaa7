#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "kinbridge/config.hpp"
#include "kinbridge/interpolation.hpp"
#include "kinbridge/kernel.hpp"
#include "kinbridge/model.hpp"
#include "kinbridge/solver.hpp"
#include "kinbridge/twisted.hpp"

namespace kinbridge {

struct MarginalSpec {
    std::string family = "gaussian"; // stationary | gaussian | uniform
    double mean = 0.0, var = 1.0;     // position
    double mean_v = 0.0, var_v = 1.0; // velocity, phase problems only
    double lo = -1.0, hi = 1.0;       // uniform
};

struct ExperimentConfig {
    std::string potential_family = "quadratic"; // quadratic | log_cosh
    double alpha = 1.0, epsilon = 0.0, gamma = 1.0;
    Interval x_range{-6.0, 6.0}, v_range{-6.0, 6.0};
    long nx = 81, nv = 81;
    std::string problem = "ksp"; // ksp | kfsp
    MarginalSpec mu, nu;
    std::vector<double> T_list{3, 4, 5, 6, 7, 8, 9, 10};
    double delta = 0.25;
    double tol = 1e-10;
    long max_iter = 10000;
    std::string kernel_source = "exact"; // exact | mc
    long mc_nsamples = 10000;
    double mc_dt = 1e-3;
    double kernel_t = 1.0; // kernel-check
    std::uint64_t seed = 1;
    std::string output_dir = ".";
    long time_points = 65;
    double t_fixed = 1.0;
    bool optimize = true;
    bool dump = false;

    Potential potential() const;
    PhaseGrid grid() const;
};

// Reads and validates; unknown keys and violated invariants raise ConfigurationError.
ExperimentConfig load_config(const KeyValueConfig& kv);
ExperimentConfig load_config_file(const std::string& path);

struct RateFit {
    std::vector<double> xs, ys;
    double slope = 0.0, intercept = 0.0, r2 = 0.0;
    bool valid = false;
    std::string note;
};

// Least squares of log y against x over points with y above 100 machine epsilon.
RateFit fit_log_linear(const std::vector<double>& xs, const std::vector<double>& ys);

// Shared pieces of one configuration: potential, grid, measure, certified norms.
struct Context {
    ExperimentConfig cfg;
    Potential pot;
    PhaseGrid grid;
    InvariantMeasure m;
    TwistedNorms tn;
    std::unique_ptr<Propagator> prop;

    explicit Context(const ExperimentConfig& c);
    TransitionKernel kernel(double t) const;
};

struct BridgeSolve {
    double T = 0.0;
    SolveResult solve;
    BridgeFlow flow;
    SpatialDensity mu_x, nu_x; // position marginals (KSP inputs, or KFSP marginals reduced)
    PhaseDensity mu_phase, nu_phase;
};

BridgeSolve solve_bridge(const Context& ctx, double T, const std::vector<double>& times);

struct SweepRow {
    double T = 0.0;
    bool converged = false;
    int iterations = 0;
    double residual = 0.0, primal = 0.0, dual = 0.0, gap = 0.0;
    bool flagged = false; // gap > 10 tol, excluded from fits
    double H_mid = 0.0, I_mid = 0.0;
    double gap0 = 0.0, gapT = 0.0;
    double S = 0.0; // H(mu) + H(nu)
    double cost_minus_S = 0.0, ratio = 0.0;
    bool lower_bound_ok = true;
    std::optional<double> w2_window;
};

struct SweepData {
    ExperimentConfig cfg;
    double kappa = 0.0;
    double S = 0.0;
    bool stationary = false;
    std::vector<SweepRow> rows;
};

// Solves every T of the sweep; throws AccuracyError naming the T of a non-converged solve.
SweepData run_sweep(const ExperimentConfig& cfg);

struct Check {
    std::string name;
    bool passed = false;
    std::string detail;
};

struct SweepSummary {
    std::string kind;
    SweepData data;
    std::vector<RateFit> fits;
    std::vector<Check> checks;
    bool passed() const;
};

SweepSummary summarize_turnpike(const SweepData& d);
SweepSummary summarize_cost(const SweepData& d);
SweepSummary summarize_window(const SweepData& d);

SweepSummary run_turnpike_sweep(const ExperimentConfig& cfg);
SweepSummary run_cost_sweep(const ExperimentConfig& cfg);
SweepSummary run_fixed_window(const ExperimentConfig& cfg, double t_fixed);

struct ContractionRow {
    int pair = 0;
    double t = 0.0;
    bool adjoint = false;
    double ratio = 0.0, bound = 0.0;
    bool passed = true;
};

struct ContractionResult {
    double kappa = 0.0;
    std::vector<ContractionRow> rows;
    bool passed = true;
};

struct GaussianPair {
    Gaussian2 q1, q2;
};
std::vector<GaussianPair> builtin_gaussian_pairs();

ContractionResult run_contraction_check(const ExperimentConfig& cfg,
                                        const std::vector<double>& times = {0.0, 0.5, 1.0, 2.0, 4.0});

// CSV / JSON emission, deterministic for a fixed config and seed.
std::string sweep_csv(const SweepSummary& s);
std::string summary_json(const SweepSummary& s);
std::string contraction_json(const ContractionResult& r);
std::string diagnostics_csv(const Diagnostics& d, const std::vector<double>& residual);

int run_cli(int argc, char** argv);

} // namespace kinbridge
