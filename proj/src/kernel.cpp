#include "kinbridge/kernel.hpp"

#include <cmath>
#include <sstream>

#include "kinbridge/errors.hpp"

namespace kinbridge {

namespace {

struct GaussianDensity {
    Eigen::Matrix2d mean_map;
    double p00, p01, p11; // precision entries
    double log_norm;
};

GaussianDensity make_density(const GaussianKernelParams& p) {
    const Eigen::Matrix2d prec = p.cov.inverse();
    return {p.mean_map, prec(0, 0), prec(0, 1), prec(1, 1),
            -std::log(2.0 * M_PI) - 0.5 * std::log(p.cov.determinant())};
}

// Row sums r(z) = sum_z' K(z,z') b(z') omega(z').
void weighted_row_sums(const RowMatrix& k, const Vector& b, const Vector& omega, Vector& out, Exec exec) {
    const Vector bw = b.cwiseProduct(omega);
    const auto n = k.rows();
#pragma omp parallel for schedule(static) if (exec == Exec::Parallel)
    for (Eigen::Index i = 0; i < n; ++i) out(i) = k.row(i).dot(bw);
}

// Find a > 0 with a(z) sum_z' K(z,z') a(Sz') omega(z') = 1 and rescale
// K(z,z') -> a(z) K(z,z') a(Sz'). The factor pattern keeps physical
// reversibility, so column sums follow from row sums.
void balance(TransitionKernel& k, const PhaseGrid& grid, Exec exec) {
    const auto n = k.size();
    const auto nv = grid.nv();
    auto flip = [nv](Eigen::Index idx) { return (idx / nv) * nv + (nv - 1 - idx % nv); };

    Vector a = Vector::Ones(n), af(n), r(n);
    for (int it = 0; it < 2000; ++it) {
        for (Eigen::Index z = 0; z < n; ++z) af(z) = a(flip(z));
        weighted_row_sums(k.values, af, k.omega, r, exec);
        double defect = 0.0;
        for (Eigen::Index z = 0; z < n; ++z) defect = std::max(defect, std::abs(a(z) * r(z) - 1.0));
        if (it == 0) {
            k.raw_row_defect = defect;
            k.raw_row_defect_weighted = (r.array() - 1.0).abs().matrix().dot(k.omega);
        }
        if (defect < 1e-14) break;
        for (Eigen::Index z = 0; z < n; ++z) a(z) = std::sqrt(a(z) / r(z));
    }
    for (Eigen::Index z = 0; z < n; ++z) af(z) = a(flip(z));
#pragma omp parallel for schedule(static) if (exec == Exec::Parallel)
    for (Eigen::Index z = 0; z < n; ++z) k.values.row(z) = a(z) * k.values.row(z).cwiseProduct(af.transpose());
    k.balanced = true;
}

} // namespace

TransitionKernel gaussian_kernel(double alpha, double gamma, double t, const PhaseGrid& grid,
                                 const InvariantMeasure& m, KernelOptions opts) {
    if (!(t > 0.0)) throw DomainError("kernel time must be positive");
    const GaussianDensity g = make_density(gaussian_params(alpha, gamma, t));
    const auto nx = grid.nx();
    const auto nv = grid.nv();
    const auto n = grid.size();
    TransitionKernel k;
    k.t = t;
    k.values.resize(n, n);
    k.omega = flat(m.omega);
    k.grid_hash = grid.hash();
    const Vector& xs = grid.x_nodes;
    const Vector& vs = grid.v_nodes;
    const Field& logm = m.log_density;

#pragma omp parallel for schedule(static) if (opts.exec == Exec::Parallel)
    for (Eigen::Index src = 0; src < n; ++src) {
        const double x = xs(src / nv);
        const double v = vs(src % nv);
        const double mx = g.mean_map(0, 0) * x + g.mean_map(0, 1) * v;
        const double mv = g.mean_map(1, 0) * x + g.mean_map(1, 1) * v;
        double* row = k.values.row(src).data();
        for (Eigen::Index i = 0; i < nx; ++i) {
            const double dx = xs(i) - mx;
            const double base = g.log_norm - 0.5 * g.p00 * dx * dx;
            const double cross = g.p01 * dx;
            for (Eigen::Index j = 0; j < nv; ++j) {
                const double dv = vs(j) - mv;
                row[i * nv + j] = std::exp(base - cross * dv - 0.5 * g.p11 * dv * dv - logm(i, j));
            }
        }
    }
    if (opts.balance) {
        balance(k, grid, opts.exec);
    } else {
        const Vector r = k.values * k.omega;
        k.raw_row_defect = (r.array() - 1.0).abs().maxCoeff();
        k.raw_row_defect_weighted = (r.array() - 1.0).abs().matrix().dot(k.omega);
    }
    return k;
}

ReducedKernel reduce_kernel(const TransitionKernel& k, const InvariantMeasure& m) {
    const auto nx = m.omega_x.size();
    const auto nv = m.omega_v.size();
    const Vector wv = m.omega_v / m.omega_v.sum();
    ReducedKernel r;
    r.t = k.t;
    r.omega = m.omega_x;
    r.grid_hash = k.grid_hash;
    r.values = RowMatrix::Zero(nx, nx);
#pragma omp parallel for schedule(static)
    for (Eigen::Index i = 0; i < nx; ++i) {
        for (Eigen::Index j = 0; j < nv; ++j) {
            const double* row = k.values.row(i * nv + j).data();
            for (Eigen::Index y = 0; y < nx; ++y) {
                double s = 0.0;
                for (Eigen::Index w = 0; w < nv; ++w) s += row[y * nv + w] * wv(w);
                r.values(i, y) += wv(j) * s;
            }
        }
    }
    return r;
}

namespace {

StochasticityReport defects(const RowMatrix& values, const Vector& omega) {
    StochasticityReport rep;
    const Vector rows = values * omega;
    const Vector cols = values.transpose() * omega;
    rep.max_row_defect = (rows.array() - 1.0).abs().maxCoeff();
    rep.max_col_defect = (cols.array() - 1.0).abs().maxCoeff();
    return rep;
}

} // namespace

StochasticityReport stochasticity(const TransitionKernel& k) { return defects(k.values, k.omega); }

StochasticityReport stochasticity(const ReducedKernel& k) { return defects(k.values, k.omega); }

double check_reversibility(const TransitionKernel& k, const PhaseGrid& grid) {
    if (!grid.v_symmetric()) throw ConfigurationError("velocity grid is not closed under negation");
    const auto n = k.size();
    const auto nv = grid.nv();
    auto flip = [nv](Eigen::Index idx) { return (idx / nv) * nv + (nv - 1 - idx % nv); };
    double worst = 0.0;
#pragma omp parallel for reduction(max : worst) schedule(static)
    for (Eigen::Index z = 0; z < n; ++z) {
        const Eigen::Index fz = flip(z);
        for (Eigen::Index zp = 0; zp < n; ++zp) {
            const double p = k.values(z, zp);
            const double q = k.values(flip(zp), fz);
            worst = std::max(worst, std::abs(p - q) / std::max(1.0, std::abs(p)));
        }
    }
    return worst;
}

RowDistance row_total_variation(const TransitionKernel& p, const TransitionKernel& q) {
    if (p.grid_hash != q.grid_hash || p.size() != q.size()) throw ConfigurationError("kernels live on different grids");
    RowDistance d;
    const Eigen::Index n = p.size();
    d.tv.resize(n);
#pragma omp parallel for schedule(static)
    for (Eigen::Index r = 0; r < n; ++r) {
        double s = 0.0;
        for (Eigen::Index c = 0; c < n; ++c) s += std::abs(p.values(r, c) * p.omega(c) - q.values(r, c) * q.omega(c));
        d.tv(r) = 0.5 * s;
    }
    d.max_tv = d.tv.maxCoeff(&d.worst_row);
    return d;
}

Vector propagate_backward(const TransitionKernel& k, const Vector& g, Exec exec) {
    if (g.size() != k.size()) throw ConfigurationError("vector and kernel live on different grids");
    const Vector gw = g.cwiseProduct(k.omega);
    Vector out(k.size());
#pragma omp parallel for schedule(static) if (exec == Exec::Parallel)
    for (Eigen::Index z = 0; z < k.size(); ++z) out(z) = k.values.row(z).dot(gw);
    return out;
}

Vector propagate_forward(const TransitionKernel& k, const Vector& f, Exec exec) {
    if (f.size() != k.size()) throw ConfigurationError("vector and kernel live on different grids");
    const Vector fw = f.cwiseProduct(k.omega);
    const auto n = k.size();
    Vector out = Vector::Zero(n);
    // column blocks keep the row-major traversal while each thread owns its outputs
    const Eigen::Index block = 256;
    const Eigen::Index nblocks = (n + block - 1) / block;
#pragma omp parallel for schedule(static) if (exec == Exec::Parallel)
    for (Eigen::Index b = 0; b < nblocks; ++b) {
        const Eigen::Index lo = b * block;
        const Eigen::Index len = std::min(block, n - lo);
        for (Eigen::Index z = 0; z < n; ++z) out.segment(lo, len) += fw(z) * k.values.row(z).segment(lo, len).transpose();
    }
    return out;
}

namespace reference {

RowMatrix gaussian_kernel_values(double alpha, double gamma, double t, const PhaseGrid& grid,
                                 const InvariantMeasure& m) {
    const GaussianKernelParams p = gaussian_params(alpha, gamma, t);
    const Eigen::Matrix2d prec = p.cov.inverse();
    const double norm = 1.0 / (2.0 * M_PI * std::sqrt(p.cov.determinant()));
    const auto nv = grid.nv();
    const auto n = grid.size();
    RowMatrix out(n, n);
    for (Eigen::Index s = 0; s < n; ++s) {
        const Eigen::Vector2d z(grid.x_nodes(s / nv), grid.v_nodes(s % nv));
        const Eigen::Vector2d mean = p.mean_map * z;
        for (Eigen::Index e = 0; e < n; ++e) {
            const Eigen::Vector2d d = Eigen::Vector2d(grid.x_nodes(e / nv), grid.v_nodes(e % nv)) - mean;
            out(s, e) = norm * std::exp(-0.5 * d.dot(prec * d)) / std::exp(m.log_density(e / nv, e % nv));
        }
    }
    return out;
}

Vector propagate_backward(const TransitionKernel& k, const Vector& g) {
    Vector out = Vector::Zero(k.size());
    for (Eigen::Index z = 0; z < k.size(); ++z)
        for (Eigen::Index zp = 0; zp < k.size(); ++zp) out(z) += k.values(z, zp) * g(zp) * k.omega(zp);
    return out;
}

Vector propagate_forward(const TransitionKernel& k, const Vector& f) {
    Vector out = Vector::Zero(k.size());
    for (Eigen::Index zp = 0; zp < k.size(); ++zp)
        for (Eigen::Index z = 0; z < k.size(); ++z) out(zp) += k.values(z, zp) * f(z) * k.omega(z);
    return out;
}

} // namespace reference

} // namespace kinbridge
