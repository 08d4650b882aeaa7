#pragma once

#include <cstdint>
#include <string>

#include "kinbridge/common.hpp"
#include "kinbridge/gaussian.hpp"
#include "kinbridge/model.hpp"

namespace kinbridge {

struct KernelOrigin {
    enum class Kind { ExactGaussian, MonteCarlo } kind = Kind::ExactGaussian;
    std::size_t nsamples = 0;
    double dt = 0.0;
    std::uint64_t seed = 0;
};

// p_t(z, z') relative to m (x) m, rows are sources. omega holds the discrete
// measure the quadratures run against, so the kernel is self-contained.
struct TransitionKernel {
    double t = 0.0;
    RowMatrix values;
    Vector omega;
    KernelOrigin origin;
    std::string grid_hash;
    bool balanced = false;
    // Before balancing: max |row sum - 1| and its omega-weighted mean.
    double raw_row_defect = 0.0;
    double raw_row_defect_weighted = 0.0;
    // Monte Carlo: omega-weighted fraction of endpoints that left the box.
    double escaped_fraction = 0.0;

    Eigen::Index size() const { return values.rows(); }
};

struct KernelOptions {
    // Rescale symmetrically so that rows and columns integrate to one on the box.
    bool balance = true;
    Exec exec = Exec::Parallel;
};

TransitionKernel gaussian_kernel(double alpha, double gamma, double t, const PhaseGrid& grid,
                                 const InvariantMeasure& m, KernelOptions opts = {});

// Euler-Maruyama kernel; row r uses an RNG stream seeded by (seed, r).
TransitionKernel mc_kernel(const Potential& pot, double t, const PhaseGrid& grid, const InvariantMeasure& m,
                           std::size_t nsamples, double dt, std::uint64_t seed, Exec exec = Exec::Parallel);

struct ReducedKernel {
    double t = 0.0;
    RowMatrix values; // r(x, y) relative to m_X (x) m_X
    Vector omega;     // omega_x
    std::string grid_hash;
};

ReducedKernel reduce_kernel(const TransitionKernel& k, const InvariantMeasure& m);

struct StochasticityReport {
    double max_row_defect = 0.0;
    double max_col_defect = 0.0;
};
StochasticityReport stochasticity(const TransitionKernel& k);
StochasticityReport stochasticity(const ReducedKernel& k);

// max over pairs of |p(z,z') - p(Sz',Sz)| / max(1, |p(z,z')|), S flipping velocity.
double check_reversibility(const TransitionKernel& k, const PhaseGrid& grid);

struct RowDistance {
    Vector tv;   // per source row: (1/2) sum_z' |p - q|(z, z') omega(z')
    double max_tv = 0.0;
    Eigen::Index worst_row = 0;
};
// Kernels must share a grid; each is read against its own omega.
RowDistance row_total_variation(const TransitionKernel& p, const TransitionKernel& q);

// (P g)(z) = sum_z' p(z,z') g(z') omega(z')
Vector propagate_backward(const TransitionKernel& k, const Vector& g, Exec exec = Exec::Parallel);
// (P* f)(z') = sum_z p(z,z') f(z) omega(z)
Vector propagate_forward(const TransitionKernel& k, const Vector& f, Exec exec = Exec::Parallel);

// Plain loops kept to validate the OpenMP paths.
namespace reference {
RowMatrix gaussian_kernel_values(double alpha, double gamma, double t, const PhaseGrid& grid,
                                 const InvariantMeasure& m);
Vector propagate_backward(const TransitionKernel& k, const Vector& g);
Vector propagate_forward(const TransitionKernel& k, const Vector& f);
} // namespace reference

enum class MatrixFormat { Binary, Csv };

// Writes <stem>.bin or <stem>.csv plus the sidecar <stem>.json.
void export_kernel(const TransitionKernel& k, const std::string& stem, MatrixFormat format = MatrixFormat::Binary);
// Reads the sidecar <stem>.json and its matrix; checks the grid hash when a grid is given.
TransitionKernel import_kernel(const std::string& stem, const PhaseGrid* grid = nullptr);

} // namespace kinbridge
