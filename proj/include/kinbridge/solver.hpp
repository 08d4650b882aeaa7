#pragma once

#include <string>
#include <vector>

#include "kinbridge/common.hpp"
#include "kinbridge/kernel.hpp"
#include "kinbridge/model.hpp"

namespace kinbridge {

enum class Domain { Spatial, Phase };

struct SinkhornOptions {
    double tol = 1e-10;
    int max_iter = 10000;
    Exec exec = Exec::Parallel;
};

struct SchrodingerPotentials {
    Domain domain = Domain::Spatial;
    Vector log_f, log_g; // -inf on nodes where the marginal vanishes
    double T = 0.0;
    std::string kernel_ref;
    double gauge = 0.0; // common value of int log f dmu and int log g dnu
};

struct SolveReport {
    int iterations = 0;
    double marginal_residual_l1 = 0.0; // max total-variation violation of the two marginals
    double primal_cost = 0.0;
    double dual_value = 0.0;
    double gap = 0.0;
    bool converged = false;
    std::vector<double> residual_history;
};

struct SolveResult {
    SchrodingerPotentials potentials;
    SolveReport report;
};

// Kernel density against w_src (x) w_tgt, marginal densities against w_src and w_tgt.
struct DiscreteProblem {
    const RowMatrix* kernel = nullptr;
    Vector w_src, w_tgt;
    Vector mu, nu;
    double T = 0.0;
    std::string kernel_ref;
};

SolveResult sinkhorn(const DiscreteProblem& problem, const SinkhornOptions& opts = {});
SolveResult sinkhorn(const ReducedKernel& k, const SpatialDensity& mu, const SpatialDensity& nu,
                     const SinkhornOptions& opts = {});
SolveResult sinkhorn(const TransitionKernel& k, const PhaseDensity& mu, const PhaseDensity& nu,
                     const SinkhornOptions& opts = {});

struct CostPair {
    double primal = 0.0;
    double dual = 0.0;
};

CostPair entropic_cost(const SchrodingerPotentials& p, const DiscreteProblem& problem);
CostPair entropic_cost(const SchrodingerPotentials& p, const ReducedKernel& k, const SpatialDensity& mu,
                       const SpatialDensity& nu);
CostPair entropic_cost(const SchrodingerPotentials& p, const TransitionKernel& k, const PhaseDensity& mu,
                       const PhaseDensity& nu);

struct StaticCoupling {
    Domain domain = Domain::Spatial;
    RowMatrix values;          // d pi / d R = f (x) g
    RowMatrix density;         // d pi / d(w (x) w) = f g K
    double marginal_error = 0.0; // max TV violation of the two marginals
};

StaticCoupling static_coupling(const SchrodingerPotentials& p, const DiscreteProblem& problem);
StaticCoupling static_coupling(const SchrodingerPotentials& p, const ReducedKernel& k, const SpatialDensity& mu,
                               const SpatialDensity& nu);
StaticCoupling static_coupling(const SchrodingerPotentials& p, const TransitionKernel& k, const PhaseDensity& mu,
                               const PhaseDensity& nu);

DiscreteProblem make_problem(const ReducedKernel& k, const SpatialDensity& mu, const SpatialDensity& nu);
DiscreteProblem make_problem(const TransitionKernel& k, const PhaseDensity& mu, const PhaseDensity& nu);

// Stabilized sweeps over log K: rows(x) = LSE_y(lk(x,y) + b(y)), cols(y) = LSE_x(lk(x,y) + a(x)).
Vector lse_rows(const RowMatrix& log_k, const Vector& b, Exec exec = Exec::Parallel);
Vector lse_cols(const RowMatrix& log_k, const Vector& a, Exec exec = Exec::Parallel);

namespace reference {
Vector lse_rows(const RowMatrix& log_k, const Vector& b);
Vector lse_cols(const RowMatrix& log_k, const Vector& a);
} // namespace reference

} // namespace kinbridge
