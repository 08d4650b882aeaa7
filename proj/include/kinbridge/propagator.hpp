#pragma once

#include <functional>
#include <memory>

#include "kinbridge/common.hpp"
#include "kinbridge/kernel.hpp"
#include "kinbridge/model.hpp"

namespace kinbridge {

// Semigroup action on log grid functions: backward gives log(P_t e^h),
// forward gives log(P*_t e^h). Functions of x only enter as spatial vectors.
class Propagator {
public:
    virtual ~Propagator() = default;
    virtual Field backward(double t, const Field& log_h) const = 0;
    virtual Field forward(double t, const Field& log_h) const;
    virtual Field backward_spatial(double t, const Vector& log_h) const;
    virtual Field forward_spatial(double t, const Vector& log_h) const;
    const PhaseGrid& grid() const { return grid_; }

protected:
    explicit Propagator(PhaseGrid grid) : grid_(std::move(grid)) {}
    PhaseGrid grid_;
};

// Holds for reversible kernels: P* = S P S with S the velocity flip.
Field flip_velocity(const Field& f);

// Exact Gaussian transition law (quadratic U) applied to the interpolated grid
// function by Gauss-Hermite quadrature. Resolves small t where a grid kernel
// would not.
class GaussHermitePropagator final : public Propagator {
public:
    GaussHermitePropagator(double alpha, double gamma, PhaseGrid grid, int nodes_2d = 24, int nodes_1d = 64);
    Field backward(double t, const Field& log_h) const override;
    Field backward_spatial(double t, const Vector& log_h) const override;

private:
    double alpha_, gamma_;
    Vector xi2_, w2_, xi1_, w1_;
};

// Grid kernel at each requested t (built independently), applied in the log domain.
class KernelPropagator final : public Propagator {
public:
    using Factory = std::function<TransitionKernel(double t)>;
    KernelPropagator(Factory factory, PhaseGrid grid);
    Field backward(double t, const Field& log_h) const override;
    Field forward(double t, const Field& log_h) const override;

private:
    Factory factory_;
};

// Probabilists' Gauss-Hermite rule: sum w_k h(xi_k) ~ E h(N(0,1)).
void gauss_hermite(int n, Vector& nodes, Vector& weights);

// Local cubic (Catmull-Rom) interpolation with quadratic extrapolation past the
// ends; reproduces quadratics exactly.
class GridInterpolator {
public:
    GridInterpolator(const Vector& x_nodes, const Vector& v_nodes);
    double eval(const Field& f, double x, double v) const;
    double eval_x(const Vector& f, double x) const;

    struct Stencil {
        Eigen::Index idx[4];
        double w[4];
    };
    static Stencil stencil(double u, Eigen::Index n);

private:
    double x0_, hx_, v0_, hv_;
    Eigen::Index nx_, nv_;
};

} // namespace kinbridge
