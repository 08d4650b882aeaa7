#pragma once

#include <Eigen/Dense>

namespace kinbridge {

// Transition law of the linear Langevin SDE with U = alpha x^2 / 2:
// Z_t | Z_0 = z ~ N(mean_map z, cov).
struct GaussianKernelParams {
    double t = 0.0;
    Eigen::Matrix2d A;
    Eigen::Matrix2d mean_map;
    Eigen::Matrix2d cov;
};

// Throws DomainError for t < 1e-6 (position variance is O(t^3) and the density degenerates).
GaussianKernelParams gaussian_params(double alpha, double gamma, double t);

Eigen::Matrix2d drift_matrix(double alpha, double gamma);
Eigen::Matrix2d stationary_covariance(double alpha);

// Law of Z_t for Z_0 ~ N(mean, cov); adjoint = true uses the time-reversed
// (velocity-flipped) dynamics generating P*.
struct Gaussian2 {
    Eigen::Vector2d mean;
    Eigen::Matrix2d cov;
};
Gaussian2 push_forward(const Gaussian2& q, double alpha, double gamma, double t, bool adjoint = false);

} // namespace kinbridge
