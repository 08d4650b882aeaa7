#pragma once

#include <functional>
#include <string>
#include <vector>

#include "kinbridge/common.hpp"

namespace kinbridge {

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
};

struct PhaseGrid {
    Vector x_nodes, v_nodes;
    Vector x_weights, v_weights;
    double hx = 0.0, hv = 0.0;
    Interval x_range, v_range;

    Eigen::Index nx() const { return x_nodes.size(); }
    Eigen::Index nv() const { return v_nodes.size(); }
    Eigen::Index size() const { return nx() * nv(); }
    Eigen::Index index(Eigen::Index i, Eigen::Index j) const { return i * nv() + j; }
    // True when v_nodes[j] == -v_nodes[nv-1-j] for all j.
    bool v_symmetric() const;
    // Stable fingerprint of bounds and counts, used to tag exported kernels.
    std::string hash() const;
};

PhaseGrid build_grid(Interval x_range, Interval v_range, Eigen::Index nx, Eigen::Index nv);

// Positions are scalar: grids are fixed to d = 1.
class Potential {
public:
    enum class Kind { Quadratic, Custom };
    using ScalarFn = std::function<double(double)>;

    static Potential quadratic(double alpha, double gamma);
    // U(x) = x^2/2 + eps log cosh(x); Hessian 1 + eps sech^2(x).
    static Potential log_cosh(double epsilon, double gamma);
    // Hessian (alpha+beta)/2 + (beta-alpha)/2 tanh(x), sweeping (alpha, beta).
    static Potential tanh_band(double alpha, double beta, double gamma);
    static Potential custom(ScalarFn u, ScalarFn grad, ScalarFn hess, double alpha, double beta,
                            double gamma, std::string name = "custom");

    double U(double x) const { return u_(x); }
    double grad(double x) const { return grad_(x); }
    double hess(double x) const { return hess_(x); }

    Kind kind() const { return kind_; }
    double alpha() const { return alpha_; }
    double beta() const { return beta_; }
    double gamma() const { return gamma_; }
    const std::string& name() const { return name_; }

    // sqrt(beta) - sqrt(alpha) <= gamma.
    bool satisfies_h2() const;
    // Hessian at every x node within [alpha(1-1e-9), beta(1+1e-9)], else DomainError.
    void check_hessian_bounds(const PhaseGrid& grid) const;

private:
    Kind kind_ = Kind::Quadratic;
    ScalarFn u_, grad_, hess_;
    double alpha_ = 1.0, beta_ = 1.0, gamma_ = 1.0;
    std::string name_;
};

// [-6/sqrt(alpha), 6/sqrt(alpha)] x [-6, 6].
PhaseGrid default_grid(const Potential& pot, Eigen::Index nx, Eigen::Index nv);

struct InvariantMeasure {
    double logZ = 0.0;
    double logZ_x = 0.0;
    Field log_density;          // log of e^{-U-v^2/2}/Z at the nodes
    Vector spatial_log_density;
    Vector velocity_log_density;
    double grid_mass = 1.0;     // trapezoid mass of the box before renormalization
    // Discrete measure used by every quadrature: trapezoid weight times density,
    // renormalized to total mass one. omega = omega_x (outer) omega_v exactly.
    Field omega;
    Vector omega_x, omega_v;
    std::vector<std::string> warnings;
};

InvariantMeasure invariant_measure(const Potential& pot, const PhaseGrid& grid);

struct PhaseDensity {
    Field values;
    bool normalized = false;
};

struct SpatialDensity {
    Vector values;
    bool normalized = false;
};

double mass(const PhaseDensity& q, const InvariantMeasure& m);
double mass(const SpatialDensity& q, const InvariantMeasure& m);
void normalize(PhaseDensity& q, const InvariantMeasure& m);
void normalize(SpatialDensity& q, const InvariantMeasure& m);

double relative_entropy(const PhaseDensity& q, const InvariantMeasure& m);
double relative_entropy(const SpatialDensity& q, const InvariantMeasure& m);
double fisher_information(const PhaseDensity& q, const InvariantMeasure& m, const PhaseGrid& grid);
SpatialDensity marginalize_velocity(const PhaseDensity& q, const InvariantMeasure& m);

PhaseDensity stationary_phase_density(const PhaseGrid& grid);
SpatialDensity stationary_spatial_density(const PhaseGrid& grid);
// Relative densities of Gaussians, renormalized on the grid.
PhaseDensity gaussian_phase_density(const Eigen::Vector2d& mean, const Eigen::Matrix2d& cov,
                                    const InvariantMeasure& m, const PhaseGrid& grid);
SpatialDensity gaussian_spatial_density(double mean, double var, const InvariantMeasure& m,
                                        const PhaseGrid& grid);
// Uniform law on [lo, hi]; zero outside, so log-potentials get masked.
SpatialDensity uniform_spatial_density(double lo, double hi, const InvariantMeasure& m,
                                       const PhaseGrid& grid);
// mu (x) m_V
PhaseDensity lift(const SpatialDensity& q, const PhaseGrid& grid);

struct Gradient {
    Field dx, dv;
};

// Central differences inside, second-order one-sided at the box faces.
Gradient finite_difference_gradient(const Field& f, const PhaseGrid& grid);
Vector finite_difference_derivative(const Vector& f, double h);

// Grid moments of q as a law on R^2 (against omega).
struct Moments {
    Eigen::Vector2d mean;
    Eigen::Matrix2d cov;
};
Moments phase_moments(const PhaseDensity& q, const InvariantMeasure& m, const PhaseGrid& grid);

} // namespace kinbridge
