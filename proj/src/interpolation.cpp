#include "kinbridge/interpolation.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "kinbridge/errors.hpp"

namespace kinbridge {

namespace {

Field as_field(const Vector& v, Eigen::Index nx, Eigen::Index nv) {
    Field f(nx, nv);
    flat(f) = v;
    return f;
}

Matrix sqrt_psd(const Matrix& a, const char* what) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (a + a.transpose()));
    const double scale = std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
    if (es.eigenvalues().minCoeff() < -1e-10 * scale) throw DomainError(std::string(what) + " is not PSD");
    const Vector s = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return es.eigenvectors() * s.asDiagonal() * es.eigenvectors().transpose();
}

} // namespace

std::vector<double> uniform_times(double T, int count) {
    std::vector<double> t(static_cast<std::size_t>(count));
    for (int k = 0; k < count; ++k) t[static_cast<std::size_t>(k)] = T * k / static_cast<double>(count - 1);
    t.back() = T;
    return t;
}

BridgeFlow compute_flow(const SchrodingerPotentials& p, const Propagator& prop, const std::vector<double>& times,
                        const InvariantMeasure& m, double mass_tol) {
    const PhaseGrid& grid = prop.grid();
    const auto nx = grid.nx();
    const auto nv = grid.nv();
    BridgeFlow flow;
    flow.T = p.T;
    flow.domain = p.domain;
    flow.times = times;
    const std::size_t nt = times.size();
    flow.log_f_t.resize(nt);
    flow.log_g_t.resize(nt);
    flow.rho_t.resize(nt);
    Field lf0, lg0;
    if (p.domain == Domain::Phase) {
        lf0 = as_field(p.log_f, nx, nv);
        lg0 = as_field(p.log_g, nx, nv);
    }
    for (std::size_t k = 0; k < nt; ++k) {
        const double t = times[k];
        if (t < 0.0 || t > p.T * (1.0 + 1e-12)) throw ConfigurationError("flow time outside [0, T]");
        const double s = std::max(0.0, p.T - t);
        if (p.domain == Domain::Spatial) {
            flow.log_f_t[k] = prop.forward_spatial(t, p.log_f);
            flow.log_g_t[k] = prop.backward_spatial(s, p.log_g);
        } else {
            flow.log_f_t[k] = prop.forward(t, lf0);
            flow.log_g_t[k] = prop.backward(s, lg0);
        }
        Field lr = flow.log_f_t[k] + flow.log_g_t[k];
        PhaseDensity rho{Field(nx, nv), true};
        for (Eigen::Index z = 0; z < lr.size(); ++z)
            rho.values.data()[z] = std::isfinite(lr.data()[z]) ? std::exp(lr.data()[z]) : 0.0;
        const double drift = std::abs(mass(rho, m) - 1.0);
        flow.max_mass_drift = std::max(flow.max_mass_drift, drift);
        if (drift > mass_tol) {
            std::ostringstream os;
            os << "bridge marginal at t = " << t << " has mass error " << drift << "; refine the grid";
            throw AccuracyError(os.str());
        }
        flow.rho_t[k] = std::move(rho);
    }
    return flow;
}

Diagnostics diagnostics(const BridgeFlow& flow, const TwistedNorms& tn, const InvariantMeasure& m,
                        const PhaseGrid& grid, const DiagnosticsOptions& opts) {
    Diagnostics d;
    d.c_eq = tn.norm_equivalence();
    const std::size_t nt = flow.times.size();
    d.rows.resize(nt);
    const double b = tn.b, c = tn.c, gamma = tn.gamma;
    const auto n = grid.size();
#pragma omp parallel for schedule(dynamic)
    for (std::size_t k = 0; k < nt; ++k) {
        DiagnosticsRow& row = d.rows[k];
        row.t = flow.times[k];
        const Field& lf = flow.log_f_t[k];
        const Field& lg = flow.log_g_t[k];
        const Field& rho = flow.rho_t[k].values;
        const Gradient gf = finite_difference_gradient(lf, grid);
        const Gradient gg = finite_difference_gradient(lg, grid);
        for (Eigen::Index z = 0; z < n; ++z) {
            const double r = rho.data()[z];
            if (!(r > 0.0)) continue;
            const double w = m.omega.data()[z] * r;
            row.hf += w * lf.data()[z];
            row.hb += w * lg.data()[z];
            if (r < opts.mask) continue;
            const double fx = gf.dx.data()[z], fv = gf.dv.data()[z];
            const double gx = gg.dx.data()[z], gv = gg.dv.data()[z];
            if (!std::isfinite(fx + fv + gx + gv)) continue;
            // N^{-1} = F Q F = [[1, b], [b, c]], Q = [[1, -b], [-b, c]]
            row.phi += w * (fx * fx + 2.0 * b * fx * fv + c * fv * fv);
            row.psi += w * (gx * gx - 2.0 * b * gx * gv + c * gv * gv);
            row.gamma_f += w * gamma * fv * fv;
            row.gamma_b += w * gamma * gv * gv;
            const double sx = fx + gx, sv = fv + gv;
            row.I += w * (sx * sx + sv * sv);
        }
        row.H = row.hf + row.hb;
        if (opts.gaussian_alpha) {
            const Moments mo = phase_moments(flow.rho_t[k], m, grid);
            Matrix sm = Matrix::Zero(2, 2);
            sm(0, 0) = 1.0 / *opts.gaussian_alpha;
            sm(1, 1) = 1.0;
            row.w2_to_m = gaussian_wasserstein(mo.mean, mo.cov, Vector::Zero(2), sm);
        }
    }
    return d;
}

std::vector<double> cost_identity_residual(const BridgeFlow& flow, const Diagnostics& diag, double cost) {
    const std::size_t nt = flow.times.size();
    std::vector<double> cum_b(nt, 0.0), cum_f(nt, 0.0);
    for (std::size_t k = 1; k < nt; ++k) {
        const double h = flow.times[k] - flow.times[k - 1];
        cum_b[k] = cum_b[k - 1] + 0.5 * h * (diag.rows[k].gamma_b + diag.rows[k - 1].gamma_b);
        cum_f[k] = cum_f[k - 1] + 0.5 * h * (diag.rows[k].gamma_f + diag.rows[k - 1].gamma_f);
    }
    const double h0 = diag.rows.front().H, hT = diag.rows.back().H;
    std::vector<double> res(nt);
    for (std::size_t k = 0; k < nt; ++k) {
        const double f_tail = cum_f.back() - cum_f[k];
        res[k] = std::abs(cost - h0 - hT - cum_b[k] - f_tail + diag.rows[k].H);
    }
    return res;
}

EntropyGap marginal_entropy_gap(const BridgeFlow& flow, const SpatialDensity& mu, const SpatialDensity& nu,
                                const InvariantMeasure& m) {
    auto entropy = [&](std::size_t k) {
        const Field lr = flow.log_f_t[k] + flow.log_g_t[k];
        double h = 0.0;
        for (Eigen::Index z = 0; z < lr.size(); ++z) {
            const double r = flow.rho_t[k].values.data()[z];
            if (r > 0.0) h += m.omega.data()[z] * r * lr.data()[z];
        }
        return h;
    };
    EntropyGap g;
    g.gap0 = entropy(0) - relative_entropy(mu, m);
    g.gapT = entropy(flow.times.size() - 1) - relative_entropy(nu, m);
    return g;
}

double gaussian_wasserstein(const Vector& mean1, const Matrix& cov1, const Vector& mean2, const Matrix& cov2,
                            const std::optional<Matrix>& metric) {
    const auto d = mean1.size();
    if (mean2.size() != d || cov1.rows() != d || cov2.rows() != d) throw DomainError("dimension mismatch");
    Matrix l = Matrix::Identity(d, d);
    if (metric) {
        Eigen::LLT<Matrix> llt(*metric);
        if (llt.info() != Eigen::Success) throw DomainError("metric is not positive definite");
        l = sqrt_psd(*metric, "metric");
    }
    const Matrix c1 = l * cov1 * l.transpose();
    const Matrix c2 = l * cov2 * l.transpose();
    const Vector dm = l * (mean1 - mean2);
    const Matrix r2 = sqrt_psd(c2, "covariance");
    sqrt_psd(c1, "covariance");
    const Matrix cross = sqrt_psd(r2 * c1 * r2, "covariance product");
    const double tr = (c1 + c2 - 2.0 * cross).trace();
    return std::sqrt(std::max(0.0, dm.squaredNorm() + tr));
}

} // namespace kinbridge
