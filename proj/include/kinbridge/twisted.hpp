#pragma once

#include <string>
#include <vector>

#include "kinbridge/common.hpp"
#include "kinbridge/model.hpp"

namespace kinbridge {

struct RootPair {
    double b = 0.0;
    double c = 0.0;
};

// Positive roots of b^2 - gamma b + (sqrt(beta)-sqrt(alpha))^2/4 = 0 with
// c = b^2 + (sqrt(beta)+sqrt(alpha))^2/4. Throws InfeasibilityError when H2 fails.
std::vector<RootPair> closed_form_parameters(double alpha, double beta, double gamma);

// Q = [[I, -b I], [-b I, c I]] in dimension 2d.
Matrix twisted_q(double b, double c, int d);
// Linear drift Jacobian [[0, I], [-l I, -gamma I]].
Matrix drift_jacobian(double hessian, double gamma, int d);

// Smallest lambda with det(T - lambda Q) = 0 for symmetric T and Q > 0.
double min_generalized_eigenvalue(const Matrix& T, const Matrix& Q);
double min_generalized_eigenvalue_2x2(const Eigen::Matrix2d& T, const Eigen::Matrix2d& Q);

// Pencil rate of one Hessian value: min eig of (-sym(J(l) Q), Q).
double pencil_rate(const Eigen::Matrix2d& q, double hessian, double gamma);
// min over a sweep of [alpha, beta] (samples points, endpoints included), clamped at 0.
double contraction_rate(const Eigen::Matrix2d& q, double alpha, double beta, double gamma,
                        int samples = 1001);
double contraction_rate(double b, double c, double alpha, double beta, double gamma, int d = 1);

struct CertificatePoint {
    double hessian = 0.0;
    double margin = 0.0; // pencil rate minus kappa; >= 0 means certified
};

struct TwistedNorms {
    int d = 1;
    double a = 1.0, b = 0.0, c = 0.0;
    Matrix Q, M, N;
    double kappa = 0.0;
    bool optimized = false;
    bool degenerate = false;
    std::string warning;
    std::vector<CertificatePoint> certificate;
    double gamma = 1.0;

    Eigen::Vector2d q_eigenvalues() const;
    // Rigorous constant c with |a+b|^2 <= c (|a|^2_{N^-1} + |b|^2_{Q}): 2 lambda_max(M).
    double norm_equivalence() const;
};

TwistedNorms build_twisted_norms(const Potential& pot, int d, bool optimize);
TwistedNorms twisted_norms_from(double b, double c, double alpha, double beta, double gamma, int d);

struct DriftReport {
    Vector positions;
    Vector margins;
    double min_margin = 0.0;
    double worst_position = 0.0;
};

// Throws CertificateFailure when some margin falls below -1e-10.
DriftReport check_drift_condition(const TwistedNorms& tn, const Potential& pot, const Vector& positions);

} // namespace kinbridge
