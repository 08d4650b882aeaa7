#include "kinbridge/solver.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "kinbridge/errors.hpp"

namespace kinbridge {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

Vector safe_log(const Vector& v) {
    Vector out(v.size());
    for (Eigen::Index k = 0; k < v.size(); ++k) out(k) = (v(k) > 0.0) ? std::log(v(k)) : kNegInf;
    return out;
}

RowMatrix log_kernel(const RowMatrix& k, Exec exec) {
    RowMatrix lk(k.rows(), k.cols());
#pragma omp parallel for schedule(static) if (exec == Exec::Parallel)
    for (Eigen::Index i = 0; i < k.rows(); ++i)
        for (Eigen::Index j = 0; j < k.cols(); ++j) lk(i, j) = (k(i, j) > 0.0) ? std::log(k(i, j)) : kNegInf;
    return lk;
}

// Integral of log-potential against a marginal with 0 log 0 = 0.
double integrate_log(const Vector& logp, const Vector& density, const Vector& w) {
    double s = 0.0;
    for (Eigen::Index k = 0; k < logp.size(); ++k) {
        if (density(k) <= 0.0) continue;
        if (!std::isfinite(logp(k)))
            throw AccuracyError("marginal carries mass where the Schrodinger potential is -inf");
        s += w(k) * density(k) * logp(k);
    }
    return s;
}

double total_variation(const Vector& lf, const Vector& lse, const Vector& target, const Vector& w) {
    double tv = 0.0;
    for (Eigen::Index k = 0; k < lf.size(); ++k) {
        const double got = std::isfinite(lf(k)) ? std::exp(lf(k) + lse(k)) : 0.0;
        tv += w(k) * std::abs(got - target(k));
    }
    return 0.5 * tv;
}

void check_problem(const DiscreteProblem& p) {
    if (!p.kernel) throw ConfigurationError("problem without kernel");
    if (p.kernel->rows() != p.w_src.size() || p.kernel->cols() != p.w_tgt.size() || p.mu.size() != p.w_src.size() ||
        p.nu.size() != p.w_tgt.size())
        throw ConfigurationError("kernel, weights and marginals have inconsistent sizes");
    if ((p.mu.array() < 0.0).any() || (p.nu.array() < 0.0).any()) throw DomainError("negative marginal density");
}

} // namespace

Vector lse_rows(const RowMatrix& log_k, const Vector& b, Exec exec) {
    const auto n = log_k.rows();
    const auto m = log_k.cols();
    Vector out(n);
#pragma omp parallel for schedule(static) if (exec == Exec::Parallel)
    for (Eigen::Index i = 0; i < n; ++i) {
        const double* row = log_k.row(i).data();
        double mx = kNegInf;
        for (Eigen::Index j = 0; j < m; ++j) mx = std::max(mx, row[j] + b(j));
        if (!std::isfinite(mx)) {
            out(i) = mx;
            continue;
        }
        double s = 0.0;
        for (Eigen::Index j = 0; j < m; ++j) s += std::exp(row[j] + b(j) - mx);
        out(i) = mx + std::log(s);
    }
    return out;
}

Vector lse_cols(const RowMatrix& log_k, const Vector& a, Exec exec) {
    const auto n = log_k.rows();
    const auto m = log_k.cols();
    Vector mx = Vector::Constant(m, kNegInf);
    Vector acc = Vector::Zero(m);
    const Eigen::Index block = 512;
    const Eigen::Index nblocks = (m + block - 1) / block;
#pragma omp parallel for schedule(static) if (exec == Exec::Parallel)
    for (Eigen::Index bk = 0; bk < nblocks; ++bk) {
        const Eigen::Index lo = bk * block;
        const Eigen::Index hi = std::min(m, lo + block);
        for (Eigen::Index i = 0; i < n; ++i) {
            if (!std::isfinite(a(i))) continue;
            const double* row = log_k.row(i).data();
            for (Eigen::Index j = lo; j < hi; ++j) mx(j) = std::max(mx(j), row[j] + a(i));
        }
        for (Eigen::Index i = 0; i < n; ++i) {
            if (!std::isfinite(a(i))) continue;
            const double* row = log_k.row(i).data();
            for (Eigen::Index j = lo; j < hi; ++j)
                if (std::isfinite(mx(j))) acc(j) += std::exp(row[j] + a(i) - mx(j));
        }
    }
    Vector out(m);
    for (Eigen::Index j = 0; j < m; ++j) out(j) = std::isfinite(mx(j)) ? mx(j) + std::log(acc(j)) : kNegInf;
    return out;
}

namespace reference {

Vector lse_rows(const RowMatrix& log_k, const Vector& b) {
    Vector out(log_k.rows());
    Vector buf(log_k.cols());
    for (Eigen::Index i = 0; i < log_k.rows(); ++i) {
        for (Eigen::Index j = 0; j < log_k.cols(); ++j) buf(j) = log_k(i, j) + b(j);
        out(i) = log_sum_exp(buf);
    }
    return out;
}

Vector lse_cols(const RowMatrix& log_k, const Vector& a) {
    Vector out(log_k.cols());
    Vector buf(log_k.rows());
    for (Eigen::Index j = 0; j < log_k.cols(); ++j) {
        for (Eigen::Index i = 0; i < log_k.rows(); ++i) buf(i) = log_k(i, j) + a(i);
        out(j) = log_sum_exp(buf);
    }
    return out;
}

} // namespace reference

SolveResult sinkhorn(const DiscreteProblem& problem, const SinkhornOptions& opts) {
    check_problem(problem);
    const RowMatrix lk = log_kernel(*problem.kernel, opts.exec);
    const Vector lws = problem.w_src.array().log();
    const Vector lwt = problem.w_tgt.array().log();
    const Vector lmu = safe_log(problem.mu);
    const Vector lnu = safe_log(problem.nu);

    SolveResult res;
    SchrodingerPotentials& pot = res.potentials;
    SolveReport& rep = res.report;
    pot.T = problem.T;
    pot.kernel_ref = problem.kernel_ref;

    Vector lg(lnu.size());
    for (Eigen::Index k = 0; k < lg.size(); ++k) lg(k) = std::isfinite(lnu(k)) ? 0.0 : kNegInf;
    Vector lf = Vector::Constant(lmu.size(), kNegInf);
    Vector lse_r;

    auto infeasible = [](const Vector& lse, const Vector& target_log) {
        for (Eigen::Index k = 0; k < lse.size(); ++k)
            if (std::isfinite(target_log(k)) && !std::isfinite(lse(k))) return true;
        return false;
    };

    for (int it = 1;; ++it) {
        lse_r = lse_rows(lk, lg + lwt, opts.exec);
        if (it > 1) {
            const double res_row = total_variation(lf, lse_r, problem.mu, problem.w_src);
            rep.residual_history.push_back(res_row);
            rep.iterations = it - 1;
            if (res_row <= opts.tol) {
                rep.converged = true;
                break;
            }
            if (it - 1 >= opts.max_iter) break;
        }
        if (it == 1 && infeasible(lse_r, lmu))
            throw InfeasibilityError("kernel vanishes on the product of the marginal supports", 0.0);
        for (Eigen::Index k = 0; k < lf.size(); ++k) lf(k) = std::isfinite(lmu(k)) ? lmu(k) - lse_r(k) : kNegInf;
        const Vector lse_c = lse_cols(lk, lf + lws, opts.exec);
        if (it == 1 && infeasible(lse_c, lnu))
            throw InfeasibilityError("kernel vanishes on the product of the marginal supports", 0.0);
        for (Eigen::Index k = 0; k < lg.size(); ++k) lg(k) = std::isfinite(lnu(k)) ? lnu(k) - lse_c(k) : kNegInf;
    }

    const Vector lse_c = lse_cols(lk, lf + lws, opts.exec);
    const double res_col = total_variation(lg, lse_c, problem.nu, problem.w_tgt);
    const double res_row = total_variation(lf, lse_r, problem.mu, problem.w_src);
    rep.marginal_residual_l1 = std::max(res_row, res_col);

    const double c = 0.5 * (integrate_log(lf, problem.mu, problem.w_src) - integrate_log(lg, problem.nu, problem.w_tgt));
    lf.array() -= c;
    lg.array() += c;
    pot.log_f = lf;
    pot.log_g = lg;
    pot.gauge = integrate_log(lf, problem.mu, problem.w_src);

    const CostPair cost = entropic_cost(pot, problem);
    rep.primal_cost = cost.primal;
    rep.dual_value = cost.dual;
    rep.gap = cost.primal - cost.dual;
    return res;
}

DiscreteProblem make_problem(const ReducedKernel& k, const SpatialDensity& mu, const SpatialDensity& nu) {
    DiscreteProblem p;
    p.kernel = &k.values;
    p.w_src = p.w_tgt = k.omega;
    p.mu = mu.values;
    p.nu = nu.values;
    p.T = k.t;
    p.kernel_ref = "reduced:" + k.grid_hash;
    return p;
}

DiscreteProblem make_problem(const TransitionKernel& k, const PhaseDensity& mu, const PhaseDensity& nu) {
    DiscreteProblem p;
    p.kernel = &k.values;
    p.w_src = p.w_tgt = k.omega;
    p.mu = flat(mu.values);
    p.nu = flat(nu.values);
    p.T = k.t;
    p.kernel_ref = "phase:" + k.grid_hash;
    return p;
}

SolveResult sinkhorn(const ReducedKernel& k, const SpatialDensity& mu, const SpatialDensity& nu,
                     const SinkhornOptions& opts) {
    SolveResult r = sinkhorn(make_problem(k, mu, nu), opts);
    r.potentials.domain = Domain::Spatial;
    return r;
}

SolveResult sinkhorn(const TransitionKernel& k, const PhaseDensity& mu, const PhaseDensity& nu,
                     const SinkhornOptions& opts) {
    SolveResult r = sinkhorn(make_problem(k, mu, nu), opts);
    r.potentials.domain = Domain::Phase;
    return r;
}

CostPair entropic_cost(const SchrodingerPotentials& p, const DiscreteProblem& problem) {
    check_problem(problem);
    CostPair c;
    c.primal = integrate_log(p.log_f, problem.mu, problem.w_src) + integrate_log(p.log_g, problem.nu, problem.w_tgt);
    // log of the total mass of f g R
    const auto n = problem.kernel->rows();
    const auto m = problem.kernel->cols();
    Vector terms(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        if (!std::isfinite(p.log_f(i))) {
            terms(i) = kNegInf;
            continue;
        }
        double s = 0.0, mx = kNegInf;
        for (Eigen::Index j = 0; j < m; ++j) {
            const double kv = (*problem.kernel)(i, j);
            if (kv > 0.0 && std::isfinite(p.log_g(j))) mx = std::max(mx, p.log_g(j));
        }
        if (!std::isfinite(mx)) {
            terms(i) = kNegInf;
            continue;
        }
        for (Eigen::Index j = 0; j < m; ++j) {
            const double kv = (*problem.kernel)(i, j);
            if (kv > 0.0 && std::isfinite(p.log_g(j))) s += kv * problem.w_tgt(j) * std::exp(p.log_g(j) - mx);
        }
        terms(i) = std::log(problem.w_src(i)) + p.log_f(i) + mx + std::log(s);
    }
    c.dual = c.primal - log_sum_exp(terms);
    return c;
}

CostPair entropic_cost(const SchrodingerPotentials& p, const ReducedKernel& k, const SpatialDensity& mu,
                       const SpatialDensity& nu) {
    return entropic_cost(p, make_problem(k, mu, nu));
}

CostPair entropic_cost(const SchrodingerPotentials& p, const TransitionKernel& k, const PhaseDensity& mu,
                       const PhaseDensity& nu) {
    return entropic_cost(p, make_problem(k, mu, nu));
}

StaticCoupling static_coupling(const SchrodingerPotentials& p, const DiscreteProblem& problem) {
    check_problem(problem);
    StaticCoupling sc;
    sc.domain = p.domain;
    const auto n = problem.kernel->rows();
    const auto m = problem.kernel->cols();
    sc.values.resize(n, m);
    sc.density.resize(n, m);
    const Vector f = p.log_f.array().exp();
    const Vector g = p.log_g.array().exp();
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < m; ++j) {
            sc.values(i, j) = f(i) * g(j);
            sc.density(i, j) = sc.values(i, j) * (*problem.kernel)(i, j);
        }
    const Vector rows = sc.density * problem.w_tgt;
    const Vector cols = sc.density.transpose() * problem.w_src;
    const double tv_r = 0.5 * (rows - problem.mu).cwiseAbs().dot(problem.w_src);
    const double tv_c = 0.5 * (cols - problem.nu).cwiseAbs().dot(problem.w_tgt);
    sc.marginal_error = std::max(tv_r, tv_c);
    return sc;
}

StaticCoupling static_coupling(const SchrodingerPotentials& p, const ReducedKernel& k, const SpatialDensity& mu,
                               const SpatialDensity& nu) {
    return static_coupling(p, make_problem(k, mu, nu));
}

StaticCoupling static_coupling(const SchrodingerPotentials& p, const TransitionKernel& k, const PhaseDensity& mu,
                               const PhaseDensity& nu) {
    return static_coupling(p, make_problem(k, mu, nu));
}

} // namespace kinbridge
