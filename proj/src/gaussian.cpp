#include "kinbridge/gaussian.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include "kinbridge/errors.hpp"

namespace kinbridge {

Eigen::Matrix2d drift_matrix(double alpha, double gamma) {
    Eigen::Matrix2d a;
    a << 0.0, 1.0, -alpha, -gamma;
    return a;
}

Eigen::Matrix2d stationary_covariance(double alpha) {
    Eigen::Matrix2d s = Eigen::Matrix2d::Zero();
    s(0, 0) = 1.0 / alpha;
    s(1, 1) = 1.0;
    return s;
}

GaussianKernelParams gaussian_params(double alpha, double gamma, double t) {
    if (!(alpha > 0.0) || !(gamma > 0.0)) throw DomainError("gaussian kernel needs alpha, gamma > 0");
    if (!(t >= 1e-6)) throw DomainError("near-degenerate kernel: t below 1e-6");
    GaussianKernelParams p;
    p.t = t;
    p.A = drift_matrix(alpha, gamma);
    // Van Loan: exp([[-A, G], [0, A^T]] t) = [[*, F12], [0, F22]],
    // e^{At} = F22^T and Sigma_t = F22^T F12 with G = 2 gamma E_vv.
    Eigen::Matrix4d c = Eigen::Matrix4d::Zero();
    c.topLeftCorner<2, 2>() = -p.A;
    c(1, 3) = 2.0 * gamma;
    c.bottomRightCorner<2, 2>() = p.A.transpose();
    const Eigen::Matrix4d f = (c * t).exp();
    p.mean_map = f.bottomRightCorner<2, 2>().transpose();
    const Eigen::Matrix2d s = p.mean_map * f.topRightCorner<2, 2>();
    p.cov = 0.5 * (s + s.transpose());
    return p;
}

Gaussian2 push_forward(const Gaussian2& q, double alpha, double gamma, double t, bool adjoint) {
    if (t == 0.0) return q;
    GaussianKernelParams p = gaussian_params(alpha, gamma, t);
    if (adjoint) {
        const Eigen::Matrix2d f = Eigen::Vector2d(1.0, -1.0).asDiagonal();
        p.mean_map = f * p.mean_map * f;
        p.cov = f * p.cov * f;
    }
    Gaussian2 out;
    out.mean = p.mean_map * q.mean;
    out.cov = p.mean_map * q.cov * p.mean_map.transpose() + p.cov;
    return out;
}

} // namespace kinbridge
