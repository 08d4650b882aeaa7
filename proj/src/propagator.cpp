#include "kinbridge/propagator.hpp"

#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Eigenvalues>

#include "kinbridge/errors.hpp"

namespace kinbridge {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

bool all_finite(const double* p, Eigen::Index n) {
    for (Eigen::Index k = 0; k < n; ++k)
        if (!std::isfinite(p[k])) return false;
    return true;
}

Field lift_log(const Vector& log_h, Eigen::Index nv) {
    Field f(log_h.size(), nv);
    for (Eigen::Index j = 0; j < nv; ++j) f.col(j) = log_h.array();
    return f;
}

} // namespace

Field flip_velocity(const Field& f) { return f.rowwise().reverse(); }

Field Propagator::forward(double t, const Field& log_h) const {
    return flip_velocity(backward(t, flip_velocity(log_h)));
}

Field Propagator::backward_spatial(double t, const Vector& log_h) const {
    return backward(t, lift_log(log_h, grid_.nv()));
}

Field Propagator::forward_spatial(double t, const Vector& log_h) const {
    return flip_velocity(backward_spatial(t, log_h));
}

void gauss_hermite(int n, Vector& nodes, Vector& weights) {
    Matrix jac = Matrix::Zero(n, n);
    for (int k = 1; k < n; ++k) jac(k, k - 1) = jac(k - 1, k) = std::sqrt(static_cast<double>(k));
    Eigen::SelfAdjointEigenSolver<Matrix> es(jac);
    nodes = es.eigenvalues();
    weights = es.eigenvectors().row(0).transpose().array().square();
}

GridInterpolator::GridInterpolator(const Vector& x_nodes, const Vector& v_nodes)
    : x0_(x_nodes(0)),
      hx_(x_nodes(1) - x_nodes(0)),
      v0_(v_nodes(0)),
      hv_(v_nodes(1) - v_nodes(0)),
      nx_(x_nodes.size()),
      nv_(v_nodes.size()) {}

GridInterpolator::Stencil GridInterpolator::stencil(double u, Eigen::Index n) {
    Stencil s;
    const Eigen::Index base = (u < 1.0) ? 0 : std::min<Eigen::Index>(static_cast<Eigen::Index>(u) - 1, n - 4);
    for (int k = 0; k < 4; ++k) {
        s.idx[k] = base + k;
        s.w[k] = 0.0;
    }
    auto add = [&](Eigen::Index node, double w) { s.w[node - base] += w; };
    if (u < 0.0) {
        add(0, 0.5 * (u - 1.0) * (u - 2.0));
        add(1, -u * (u - 2.0));
        add(2, 0.5 * u * (u - 1.0));
        return s;
    }
    if (u > static_cast<double>(n - 1)) {
        const double r = u - static_cast<double>(n - 3);
        add(n - 3, 0.5 * (r - 1.0) * (r - 2.0));
        add(n - 2, -r * (r - 2.0));
        add(n - 1, 0.5 * r * (r - 1.0));
        return s;
    }
    const Eigen::Index i = std::min<Eigen::Index>(static_cast<Eigen::Index>(u), n - 2);
    const double f = u - static_cast<double>(i);
    const double f2 = f * f, f3 = f2 * f;
    const double w[4] = {0.5 * (-f + 2.0 * f2 - f3), 0.5 * (2.0 - 5.0 * f2 + 3.0 * f3),
                         0.5 * (f + 4.0 * f2 - 3.0 * f3), 0.5 * (f3 - f2)};
    if (i == 0) {
        // ghost node -1 from the quadratic through nodes 0, 1, 2
        add(0, 3.0 * w[0]);
        add(1, -3.0 * w[0]);
        add(2, w[0]);
    } else {
        add(i - 1, w[0]);
    }
    add(i, w[1]);
    add(i + 1, w[2]);
    if (i + 2 > n - 1) {
        add(n - 1, 3.0 * w[3]);
        add(n - 2, -3.0 * w[3]);
        add(n - 3, w[3]);
    } else {
        add(i + 2, w[3]);
    }
    return s;
}

double GridInterpolator::eval(const Field& f, double x, double v) const {
    const Stencil sx = stencil((x - x0_) / hx_, nx_);
    const Stencil sv = stencil((v - v0_) / hv_, nv_);
    double out = 0.0;
    for (int a = 0; a < 4; ++a) {
        if (sx.w[a] == 0.0) continue;
        const double* row = f.row(sx.idx[a]).data();
        double r = 0.0;
        for (int b = 0; b < 4; ++b) r += sv.w[b] * row[sv.idx[b]];
        out += sx.w[a] * r;
    }
    return out;
}

double GridInterpolator::eval_x(const Vector& f, double x) const {
    const Stencil sx = stencil((x - x0_) / hx_, nx_);
    double out = 0.0;
    for (int a = 0; a < 4; ++a) out += sx.w[a] * f(sx.idx[a]);
    return out;
}

GaussHermitePropagator::GaussHermitePropagator(double alpha, double gamma, PhaseGrid grid, int nodes_2d,
                                               int nodes_1d)
    : Propagator(std::move(grid)), alpha_(alpha), gamma_(gamma) {
    gauss_hermite(nodes_2d, xi2_, w2_);
    gauss_hermite(nodes_1d, xi1_, w1_);
}

Field GaussHermitePropagator::backward(double t, const Field& log_h) const {
    if (t == 0.0) return log_h;
    const GaussianKernelParams p = gaussian_params(alpha_, gamma_, t);
    const Eigen::Matrix2d l = p.cov.llt().matrixL();
    const GridInterpolator interp(grid_.x_nodes, grid_.v_nodes);
    const auto nx = grid_.nx();
    const auto nv = grid_.nv();
    const auto q = xi2_.size();
    const bool log_mode = all_finite(log_h.data(), log_h.size());
    const double shift = log_mode ? 0.0 : log_h.maxCoeff();
    const Field lin = log_mode ? Field() : Field((log_h - shift).exp());
    Field out(nx, nv);
#pragma omp parallel for schedule(static)
    for (Eigen::Index i = 0; i < nx; ++i) {
        std::vector<double> buf(static_cast<std::size_t>(q * q));
        for (Eigen::Index j = 0; j < nv; ++j) {
            const double x = grid_.x_nodes(i), v = grid_.v_nodes(j);
            const double mx = p.mean_map(0, 0) * x + p.mean_map(0, 1) * v;
            const double mv = p.mean_map(1, 0) * x + p.mean_map(1, 1) * v;
            if (log_mode) {
                std::size_t k = 0;
                for (Eigen::Index a = 0; a < q; ++a) {
                    const double xa = mx + l(0, 0) * xi2_(a);
                    const double va = mv + l(1, 0) * xi2_(a);
                    for (Eigen::Index b = 0; b < q; ++b)
                        buf[k++] = std::log(w2_(a) * w2_(b)) + interp.eval(log_h, xa, va + l(1, 1) * xi2_(b));
                }
                out(i, j) = log_sum_exp(buf.data(), static_cast<std::ptrdiff_t>(buf.size()));
            } else {
                double s = 0.0;
                for (Eigen::Index a = 0; a < q; ++a) {
                    const double xa = mx + l(0, 0) * xi2_(a);
                    const double va = mv + l(1, 0) * xi2_(a);
                    for (Eigen::Index b = 0; b < q; ++b)
                        s += w2_(a) * w2_(b) * std::max(0.0, interp.eval(lin, xa, va + l(1, 1) * xi2_(b)));
                }
                out(i, j) = (s > 0.0) ? std::log(s) + shift : kNegInf;
            }
        }
    }
    return out;
}

Field GaussHermitePropagator::backward_spatial(double t, const Vector& log_h) const {
    if (t == 0.0) return lift_log(log_h, grid_.nv());
    const GaussianKernelParams p = gaussian_params(alpha_, gamma_, t);
    const double sd = std::sqrt(p.cov(0, 0));
    const GridInterpolator interp(grid_.x_nodes, grid_.v_nodes);
    const auto nx = grid_.nx();
    const auto nv = grid_.nv();
    const auto q = xi1_.size();
    const bool log_mode = all_finite(log_h.data(), log_h.size());
    const double shift = log_mode ? 0.0 : log_h.maxCoeff();
    const Vector lin = log_mode ? Vector() : Vector((log_h.array() - shift).exp());
    Field out(nx, nv);
#pragma omp parallel for schedule(static)
    for (Eigen::Index i = 0; i < nx; ++i) {
        std::vector<double> buf(static_cast<std::size_t>(q));
        for (Eigen::Index j = 0; j < nv; ++j) {
            const double mx = p.mean_map(0, 0) * grid_.x_nodes(i) + p.mean_map(0, 1) * grid_.v_nodes(j);
            if (log_mode) {
                for (Eigen::Index a = 0; a < q; ++a)
                    buf[static_cast<std::size_t>(a)] = std::log(w1_(a)) + interp.eval_x(log_h, mx + sd * xi1_(a));
                out(i, j) = log_sum_exp(buf.data(), static_cast<std::ptrdiff_t>(q));
            } else {
                double s = 0.0;
                for (Eigen::Index a = 0; a < q; ++a) s += w1_(a) * std::max(0.0, interp.eval_x(lin, mx + sd * xi1_(a)));
                out(i, j) = (s > 0.0) ? std::log(s) + shift : kNegInf;
            }
        }
    }
    return out;
}

KernelPropagator::KernelPropagator(Factory factory, PhaseGrid grid)
    : Propagator(std::move(grid)), factory_(std::move(factory)) {}

Field KernelPropagator::backward(double t, const Field& log_h) const {
    if (t == 0.0) return log_h;
    const TransitionKernel k = factory_(t);
    const auto n = k.size();
    const Vector lw = flat(log_h).array() + k.omega.array().log();
    Field out(grid_.nx(), grid_.nv());
#pragma omp parallel for schedule(static)
    for (Eigen::Index z = 0; z < n; ++z) {
        std::vector<double> buf(static_cast<std::size_t>(n));
        for (Eigen::Index zp = 0; zp < n; ++zp) {
            const double kv = k.values(z, zp);
            buf[static_cast<std::size_t>(zp)] = (kv > 0.0) ? std::log(kv) + lw(zp) : kNegInf;
        }
        out.data()[z] = log_sum_exp(buf.data(), static_cast<std::ptrdiff_t>(n));
    }
    return out;
}

Field KernelPropagator::forward(double t, const Field& log_h) const {
    if (t == 0.0) return log_h;
    const TransitionKernel k = factory_(t);
    const auto n = k.size();
    const Vector lw = flat(log_h).array() + k.omega.array().log();
    // column-wise log-sum-exp in two passes over the row-major matrix
    Vector mx = Vector::Constant(n, kNegInf);
    for (Eigen::Index z = 0; z < n; ++z) {
        if (!std::isfinite(lw(z))) continue;
        for (Eigen::Index zp = 0; zp < n; ++zp) {
            const double kv = k.values(z, zp);
            if (kv > 0.0) mx(zp) = std::max(mx(zp), std::log(kv) + lw(z));
        }
    }
    Vector acc = Vector::Zero(n);
    for (Eigen::Index z = 0; z < n; ++z) {
        if (!std::isfinite(lw(z))) continue;
        for (Eigen::Index zp = 0; zp < n; ++zp) {
            const double kv = k.values(z, zp);
            if (kv > 0.0) acc(zp) += std::exp(std::log(kv) + lw(z) - mx(zp));
        }
    }
    Field out(grid_.nx(), grid_.nv());
    for (Eigen::Index zp = 0; zp < n; ++zp)
        out.data()[zp] = std::isfinite(mx(zp)) ? mx(zp) + std::log(acc(zp)) : kNegInf;
    return out;
}

} // namespace kinbridge
