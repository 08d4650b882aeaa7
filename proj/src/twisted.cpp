#include "kinbridge/twisted.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "kinbridge/errors.hpp"

namespace kinbridge {

std::vector<RootPair> closed_form_parameters(double alpha, double beta, double gamma) {
    const double diff = std::sqrt(beta) - std::sqrt(alpha);
    const double sum = std::sqrt(beta) + std::sqrt(alpha);
    const double deficit = gamma * gamma - diff * diff;
    if (deficit < 0.0 || diff > gamma) {
        std::ostringstream os;
        os << "(sqrt(beta) - sqrt(alpha))^2 exceeds gamma^2; deficit " << deficit;
        throw InfeasibilityError(os.str(), deficit);
    }
    const double disc = std::sqrt(deficit);
    std::vector<RootPair> roots;
    for (double b : {0.5 * (gamma + disc), 0.5 * (gamma - disc)}) {
        if (b > 0.0) roots.push_back({b, b * b + 0.25 * sum * sum});
    }
    if (roots.size() == 2 && roots[0].b == roots[1].b) roots.pop_back();
    return roots;
}

Matrix twisted_q(double b, double c, int d) {
    Matrix q = Matrix::Zero(2 * d, 2 * d);
    for (int k = 0; k < d; ++k) {
        q(k, k) = 1.0;
        q(k, d + k) = q(d + k, k) = -b;
        q(d + k, d + k) = c;
    }
    return q;
}

Matrix drift_jacobian(double hessian, double gamma, int d) {
    Matrix j = Matrix::Zero(2 * d, 2 * d);
    for (int k = 0; k < d; ++k) {
        j(k, d + k) = 1.0;
        j(d + k, k) = -hessian;
        j(d + k, d + k) = -gamma;
    }
    return j;
}

double min_generalized_eigenvalue(const Matrix& T, const Matrix& Q) {
    Eigen::LLT<Matrix> llt(Q);
    if (llt.info() != Eigen::Success) throw DomainError("Q is not positive definite");
    Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> es(T, Q, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

double min_generalized_eigenvalue_2x2(const Eigen::Matrix2d& T, const Eigen::Matrix2d& Q) {
    const double dq = Q.determinant();
    if (!(Q(0, 0) > 0.0) || !(dq > 0.0)) throw DomainError("Q is not positive definite");
    // det(T - l Q) = dq l^2 - B l + det(T)
    const double B = Q(0, 0) * T(1, 1) + Q(1, 1) * T(0, 0) - 2.0 * Q(0, 1) * T(0, 1);
    const double disc = std::max(0.0, B * B - 4.0 * dq * T.determinant());
    const double root = std::sqrt(disc);
    // larger root without cancellation, smaller one from the product of roots
    const double big = (B >= 0.0) ? (B + root) / (2.0 * dq) : (B - root) / (2.0 * dq);
    const double other = (big != 0.0) ? T.determinant() / (dq * big) : 0.0;
    return std::min(big, other);
}

double pencil_rate(const Eigen::Matrix2d& q, double hessian, double gamma) {
    Eigen::Matrix2d j;
    j << 0.0, 1.0, -hessian, -gamma;
    const Eigen::Matrix2d jq = j * q;
    const Eigen::Matrix2d t = -0.5 * (jq + jq.transpose());
    return min_generalized_eigenvalue_2x2(t, q);
}

double contraction_rate(const Eigen::Matrix2d& q, double alpha, double beta, double gamma, int samples) {
    double kappa = std::numeric_limits<double>::infinity();
    const int n = (beta > alpha) ? std::max(samples, 2) : 1;
    for (int k = 0; k < n; ++k) {
        const double l = (n == 1) ? alpha : alpha + (beta - alpha) * k / static_cast<double>(n - 1);
        kappa = std::min(kappa, pencil_rate(q, l, gamma));
    }
    return std::max(kappa, 0.0);
}

double contraction_rate(double b, double c, double alpha, double beta, double gamma, int d) {
    if (!(b > 0.0) || !(c > b * b)) throw DomainError("twisted parameters need b > 0 and c > b^2");
    (void)d; // Q = blocks (x) I_d, the pencil reduces to the 2x2 block
    Eigen::Matrix2d q;
    q << 1.0, -b, -b, c;
    return contraction_rate(q, alpha, beta, gamma);
}

Eigen::Vector2d TwistedNorms::q_eigenvalues() const {
    Eigen::Matrix2d q;
    q << a, -b, -b, c;
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(q);
    return es.eigenvalues();
}

double TwistedNorms::norm_equivalence() const {
    // M and N share their spectrum; lambda_max(M) = 1 / lambda_min(Q)
    return 2.0 / q_eigenvalues().minCoeff();
}

TwistedNorms twisted_norms_from(double b, double c, double alpha, double beta, double gamma, int d) {
    TwistedNorms tn;
    tn.d = d;
    tn.b = b;
    tn.c = c;
    tn.gamma = gamma;
    tn.kappa = contraction_rate(b, c, alpha, beta, gamma, d);
    tn.Q = twisted_q(b, c, d);
    tn.M = tn.Q.inverse();
    Matrix f = Matrix::Identity(2 * d, 2 * d);
    f.bottomRightCorner(d, d) *= -1.0;
    tn.N = f * tn.M * f;

    Eigen::Matrix2d q;
    q << 1.0, -b, -b, c;
    const int n = (beta > alpha) ? 1001 : 1;
    tn.certificate.reserve(n);
    for (int k = 0; k < n; ++k) {
        const double l = (n == 1) ? alpha : alpha + (beta - alpha) * k / static_cast<double>(n - 1);
        tn.certificate.push_back({l, pencil_rate(q, l, gamma) - tn.kappa});
    }
    if (tn.kappa <= 1e-12) {
        tn.degenerate = true;
        tn.warning = "kappa = 0: turnpike rates are not verifiable with this certificate";
    }
    return tn;
}

TwistedNorms build_twisted_norms(const Potential& pot, int d, bool optimize) {
    const double alpha = pot.alpha();
    const double beta = pot.beta();
    const double gamma = pot.gamma();
    if (!pot.satisfies_h2()) {
        const double diff = std::sqrt(beta) - std::sqrt(alpha);
        throw InfeasibilityError("H2 fails: sqrt(beta) - sqrt(alpha) > gamma", gamma * gamma - diff * diff);
    }
    const double s = std::sqrt(beta) + std::sqrt(alpha);
    auto c_of = [s](double b) { return b * b + 0.25 * s * s; };

    if (!optimize) {
        TwistedNorms best;
        bool first = true;
        for (const RootPair& r : closed_form_parameters(alpha, beta, gamma)) {
            TwistedNorms tn = twisted_norms_from(r.b, r.c, alpha, beta, gamma, d);
            if (first || tn.kappa > best.kappa) best = tn;
            first = false;
        }
        return best;
    }

    auto rate = [&](double b) { return contraction_rate(b, c_of(b), alpha, beta, gamma, d); };
    // coarse scan brackets the maximizer, golden section refines it
    const int scan = 200;
    int best_k = 1;
    double best_rate = -1.0;
    for (int k = 1; k < scan; ++k) {
        const double r = rate(gamma * k / scan);
        if (r > best_rate) {
            best_rate = r;
            best_k = k;
        }
    }
    double lo = gamma * (best_k - 1) / scan;
    double hi = gamma * (best_k + 1) / scan;
    const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
    double x1 = hi - phi * (hi - lo);
    double x2 = lo + phi * (hi - lo);
    double f1 = rate(std::max(x1, 1e-12));
    double f2 = rate(x2);
    while (hi - lo > 1e-10) {
        if (f1 < f2) {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + phi * (hi - lo);
            f2 = rate(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - phi * (hi - lo);
            f1 = rate(std::max(x1, 1e-12));
        }
    }
    double b = 0.5 * (lo + hi);
    if (rate(b) < best_rate) b = gamma * best_k / scan;
    TwistedNorms tn = twisted_norms_from(b, c_of(b), alpha, beta, gamma, d);
    tn.optimized = true;
    return tn;
}

DriftReport check_drift_condition(const TwistedNorms& tn, const Potential& pot, const Vector& positions) {
    DriftReport rep;
    rep.positions = positions;
    rep.margins.resize(positions.size());
    rep.min_margin = std::numeric_limits<double>::infinity();
    for (Eigen::Index k = 0; k < positions.size(); ++k) {
        const Matrix j = drift_jacobian(pot.hess(positions(k)), pot.gamma(), tn.d);
        const Matrix jq = j * tn.Q;
        const Matrix t = -0.5 * (jq + jq.transpose());
        rep.margins(k) = min_generalized_eigenvalue(t, tn.Q) - tn.kappa;
        if (rep.margins(k) < rep.min_margin) {
            rep.min_margin = rep.margins(k);
            rep.worst_position = positions(k);
        }
    }
    if (rep.min_margin < -1e-10) {
        std::ostringstream os;
        os << "drift certificate fails at x = " << rep.worst_position << " with margin " << rep.min_margin;
        throw CertificateFailure(os.str(), rep.worst_position, rep.min_margin);
    }
    return rep;
}

} // namespace kinbridge
