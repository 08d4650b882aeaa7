#include "kinbridge/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <sstream>

#include <boost/math/quadrature/gauss.hpp>

#include "kinbridge/errors.hpp"

namespace kinbridge {

namespace {

constexpr double kLogFloor = 1e-300;

Vector trapezoid_weights(Eigen::Index n, double h) {
    Vector w = Vector::Constant(n, h);
    w(0) = w(n - 1) = 0.5 * h;
    return w;
}

double log_trapezoid_mass(const Vector& weights, const Vector& log_density) {
    Vector terms = weights.array().log() + log_density.array();
    return log_sum_exp(terms);
}

// Log normalizer of e^{-U} by trapezoid on an extended, four times denser grid.
double log_partition_x(const Potential& pot, const PhaseGrid& grid) {
    if (pot.kind() == Potential::Kind::Quadratic)
        return 0.5 * std::log(2.0 * M_PI / pot.alpha());
    const double reach = 14.0 / std::sqrt(pot.alpha());
    const double lo = std::min(grid.x_range.lo, -reach) - reach;
    const double hi = std::max(grid.x_range.hi, reach) + reach;
    const double h = 0.25 * grid.hx;
    const auto n = static_cast<Eigen::Index>(std::ceil((hi - lo) / h)) + 1;
    const double step = (hi - lo) / static_cast<double>(n - 1);
    Vector terms(n);
    for (Eigen::Index k = 0; k < n; ++k) {
        const double x = lo + step * static_cast<double>(k);
        const double w = (k == 0 || k == n - 1) ? 0.5 * step : step;
        terms(k) = std::log(w) - pot.U(x);
    }
    return log_sum_exp(terms);
}

} // namespace

double log_sum_exp(const double* values, std::ptrdiff_t n) {
    double mx = -std::numeric_limits<double>::infinity();
    for (std::ptrdiff_t k = 0; k < n; ++k) mx = std::max(mx, values[k]);
    if (!std::isfinite(mx)) return mx;
    double s = 0.0;
    for (std::ptrdiff_t k = 0; k < n; ++k) s += std::exp(values[k] - mx);
    return mx + std::log(s);
}

bool PhaseGrid::v_symmetric() const {
    const auto n = nv();
    const double tol = 1e-12 * std::max(1.0, v_nodes.cwiseAbs().maxCoeff());
    for (Eigen::Index j = 0; j < n; ++j)
        if (std::abs(v_nodes(j) + v_nodes(n - 1 - j)) > tol) return false;
    return true;
}

std::string PhaseGrid::hash() const {
    std::ostringstream os;
    os.precision(17);
    os << x_range.lo << ',' << x_range.hi << ',' << nx() << ',' << v_range.lo << ',' << v_range.hi
       << ',' << nv();
    // FNV-1a, 64 bit
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char ch : os.str()) {
        h ^= ch;
        h *= 1099511628211ULL;
    }
    std::ostringstream hex;
    hex << std::hex << h;
    return hex.str();
}

PhaseGrid build_grid(Interval x_range, Interval v_range, Eigen::Index nx, Eigen::Index nv) {
    if (nx < 8 || nv < 8) throw ConfigurationError("grid needs at least 8 nodes per axis");
    if (!(x_range.hi > x_range.lo) || !(v_range.hi > v_range.lo))
        throw ConfigurationError("degenerate grid range");
    PhaseGrid g;
    g.x_range = x_range;
    g.v_range = v_range;
    g.x_nodes = Vector::LinSpaced(nx, x_range.lo, x_range.hi);
    g.v_nodes = Vector::LinSpaced(nv, v_range.lo, v_range.hi);
    g.hx = (x_range.hi - x_range.lo) / static_cast<double>(nx - 1);
    g.hv = (v_range.hi - v_range.lo) / static_cast<double>(nv - 1);
    g.x_weights = trapezoid_weights(nx, g.hx);
    g.v_weights = trapezoid_weights(nv, g.hv);
    return g;
}

Potential Potential::quadratic(double alpha, double gamma) {
    if (!(alpha > 0.0) || !(gamma > 0.0))
        throw ConfigurationError("quadratic potential needs alpha > 0 and gamma > 0");
    Potential p;
    p.kind_ = Kind::Quadratic;
    p.u_ = [alpha](double x) { return 0.5 * alpha * x * x; };
    p.grad_ = [alpha](double x) { return alpha * x; };
    p.hess_ = [alpha](double) { return alpha; };
    p.alpha_ = p.beta_ = alpha;
    p.gamma_ = gamma;
    p.name_ = "quadratic";
    return p;
}

Potential Potential::log_cosh(double epsilon, double gamma) {
    if (!(epsilon > -1.0)) throw ConfigurationError("log_cosh potential needs epsilon > -1");
    auto u = [epsilon](double x) {
        // log cosh(x) = |x| + log1p(e^{-2|x|}) - log 2, stable for large |x|
        const double ax = std::abs(x);
        return 0.5 * x * x + epsilon * (ax + std::log1p(std::exp(-2.0 * ax)) - std::log(2.0));
    };
    auto grad = [epsilon](double x) { return x + epsilon * std::tanh(x); };
    auto hess = [epsilon](double x) {
        const double s = 1.0 / std::cosh(x);
        return 1.0 + epsilon * s * s;
    };
    return custom(u, grad, hess, std::min(1.0, 1.0 + epsilon), std::max(1.0, 1.0 + epsilon), gamma,
                  "log_cosh");
}

Potential Potential::tanh_band(double alpha, double beta, double gamma) {
    const double mid = 0.5 * (alpha + beta), half = 0.5 * (beta - alpha);
    auto log_cosh = [](double x) {
        const double ax = std::abs(x);
        return ax + std::log1p(std::exp(-2.0 * ax)) - std::log(2.0);
    };
    auto u = [mid, half, log_cosh](double x) {
        const double integral = boost::math::quadrature::gauss<double, 30>::integrate(log_cosh, 0.0, x);
        return 0.5 * mid * x * x + half * integral;
    };
    auto grad = [mid, half, log_cosh](double x) { return mid * x + half * log_cosh(x); };
    auto hess = [mid, half](double x) { return mid + half * std::tanh(x); };
    return custom(u, grad, hess, alpha, beta, gamma, "tanh_band");
}

Potential Potential::custom(ScalarFn u, ScalarFn grad, ScalarFn hess, double alpha, double beta,
                            double gamma, std::string name) {
    if (!(alpha > 0.0) || !(beta >= alpha) || !(gamma > 0.0))
        throw ConfigurationError("custom potential needs 0 < alpha <= beta and gamma > 0");
    Potential p;
    p.kind_ = Kind::Custom;
    p.u_ = std::move(u);
    p.grad_ = std::move(grad);
    p.hess_ = std::move(hess);
    p.alpha_ = alpha;
    p.beta_ = beta;
    p.gamma_ = gamma;
    p.name_ = std::move(name);
    return p;
}

bool Potential::satisfies_h2() const { return std::sqrt(beta_) - std::sqrt(alpha_) <= gamma_; }

void Potential::check_hessian_bounds(const PhaseGrid& grid) const {
    for (Eigen::Index i = 0; i < grid.nx(); ++i) {
        const double x = grid.x_nodes(i);
        const double h = hess(x);
        if (h < alpha_ * (1.0 - 1e-9) || h > beta_ * (1.0 + 1e-9)) {
            std::ostringstream os;
            os << "Hessian " << h << " at x = " << x << " outside [" << alpha_ << ", " << beta_ << "]";
            throw DomainError(os.str());
        }
    }
}

PhaseGrid default_grid(const Potential& pot, Eigen::Index nx, Eigen::Index nv) {
    const double sx = 1.0 / std::sqrt(pot.alpha());
    return build_grid({-6.0 * sx, 6.0 * sx}, {-6.0, 6.0}, nx, nv);
}

InvariantMeasure invariant_measure(const Potential& pot, const PhaseGrid& grid) {
    if (pot.kind() == Potential::Kind::Custom) pot.check_hessian_bounds(grid);
    InvariantMeasure m;
    const auto nx = grid.nx();
    const auto nv = grid.nv();

    m.logZ_x = log_partition_x(pot, grid);
    const double logZ_v = 0.5 * std::log(2.0 * M_PI);
    m.logZ = m.logZ_x + logZ_v;

    m.spatial_log_density.resize(nx);
    for (Eigen::Index i = 0; i < nx; ++i) m.spatial_log_density(i) = -pot.U(grid.x_nodes(i)) - m.logZ_x;
    m.velocity_log_density = -0.5 * grid.v_nodes.array().square() - logZ_v;

    m.log_density.resize(nx, nv);
    for (Eigen::Index i = 0; i < nx; ++i)
        for (Eigen::Index j = 0; j < nv; ++j)
            m.log_density(i, j) = m.spatial_log_density(i) + m.velocity_log_density(j);

    const double log_mx = log_trapezoid_mass(grid.x_weights, m.spatial_log_density);
    const double log_mv = log_trapezoid_mass(grid.v_weights, m.velocity_log_density);
    m.grid_mass = std::exp(log_mx + log_mv);
    if (std::abs(m.grid_mass - 1.0) > 1e-4) {
        std::ostringstream os;
        os << "grid box holds mass " << m.grid_mass << " of the invariant measure; enlarge the box";
        throw TruncationError(os.str());
    }
    const double sx = 1.0 / std::sqrt(pot.alpha());
    if (grid.x_range.lo > -6.0 * sx || grid.x_range.hi < 6.0 * sx)
        m.warnings.push_back("position box covers less than 6 standard deviations");
    if (grid.v_range.lo > -6.0 || grid.v_range.hi < 6.0)
        m.warnings.push_back("velocity box covers less than 6 standard deviations");

    m.omega_x = (grid.x_weights.array().log() + m.spatial_log_density.array() - log_mx).exp();
    m.omega_v = (grid.v_weights.array().log() + m.velocity_log_density.array() - log_mv).exp();
    m.omega.resize(nx, nv);
    for (Eigen::Index i = 0; i < nx; ++i)
        for (Eigen::Index j = 0; j < nv; ++j) m.omega(i, j) = m.omega_x(i) * m.omega_v(j);
    return m;
}

double mass(const PhaseDensity& q, const InvariantMeasure& m) { return (q.values * m.omega).sum(); }

double mass(const SpatialDensity& q, const InvariantMeasure& m) { return q.values.dot(m.omega_x); }

void normalize(PhaseDensity& q, const InvariantMeasure& m) {
    const double z = mass(q, m);
    if (!(z > 0.0) || !std::isfinite(z)) throw DomainError("density has no mass on the grid");
    q.values /= z;
    q.normalized = true;
}

void normalize(SpatialDensity& q, const InvariantMeasure& m) {
    const double z = mass(q, m);
    if (!(z > 0.0) || !std::isfinite(z)) throw DomainError("density has no mass on the grid");
    q.values /= z;
    q.normalized = true;
}

namespace {

double entropy_sum(const double* rho, const double* w, Eigen::Index n) {
    double h = 0.0;
    for (Eigen::Index k = 0; k < n; ++k) {
        if (rho[k] < 0.0) throw DomainError("negative density value");
        if (rho[k] > kLogFloor) h += w[k] * rho[k] * std::log(rho[k]);
    }
    return h;
}

} // namespace

double relative_entropy(const PhaseDensity& q, const InvariantMeasure& m) {
    return entropy_sum(q.values.data(), m.omega.data(), q.values.size());
}

double relative_entropy(const SpatialDensity& q, const InvariantMeasure& m) {
    return entropy_sum(q.values.data(), m.omega_x.data(), q.values.size());
}

Vector finite_difference_derivative(const Vector& f, double h) {
    const auto n = f.size();
    Vector d(n);
    for (Eigen::Index k = 1; k + 1 < n; ++k) d(k) = (f(k + 1) - f(k - 1)) / (2.0 * h);
    d(0) = (-3.0 * f(0) + 4.0 * f(1) - f(2)) / (2.0 * h);
    d(n - 1) = (3.0 * f(n - 1) - 4.0 * f(n - 2) + f(n - 3)) / (2.0 * h);
    return d;
}

Gradient finite_difference_gradient(const Field& f, const PhaseGrid& grid) {
    const auto nx = f.rows();
    const auto nv = f.cols();
    Gradient g{Field(nx, nv), Field(nx, nv)};
    for (Eigen::Index j = 0; j < nv; ++j) {
        g.dx.col(j) = finite_difference_derivative(f.col(j).matrix(), grid.hx).array();
    }
    for (Eigen::Index i = 0; i < nx; ++i) {
        g.dv.row(i) = finite_difference_derivative(f.row(i).transpose().matrix(), grid.hv).transpose().array();
    }
    return g;
}

double fisher_information(const PhaseDensity& q, const InvariantMeasure& m, const PhaseGrid& grid) {
    const Field& rho = q.values;
    Field logr = rho.max(kLogFloor).log();
    Gradient g = finite_difference_gradient(logr, grid);
    const auto nx = rho.rows();
    const auto nv = rho.cols();
    double total = 0.0;
    for (Eigen::Index i = 0; i < nx; ++i) {
        for (Eigen::Index j = 0; j < nv; ++j) {
            // skip nodes whose stencil touches the excluded support
            bool ok = rho(i, j) > kLogFloor;
            for (int di = -1; di <= 1 && ok; ++di) {
                const auto ii = std::clamp<Eigen::Index>(i + di, 0, nx - 1);
                ok = rho(ii, j) > kLogFloor;
            }
            for (int dj = -1; dj <= 1 && ok; ++dj) {
                const auto jj = std::clamp<Eigen::Index>(j + dj, 0, nv - 1);
                ok = rho(i, jj) > kLogFloor;
            }
            if (!ok) continue;
            total += m.omega(i, j) * rho(i, j) * (g.dx(i, j) * g.dx(i, j) + g.dv(i, j) * g.dv(i, j));
        }
    }
    return total;
}

SpatialDensity marginalize_velocity(const PhaseDensity& q, const InvariantMeasure& m) {
    SpatialDensity s;
    s.values = (q.values.matrix() * m.omega_v) / m.omega_v.sum();
    normalize(s, m);
    return s;
}

PhaseDensity stationary_phase_density(const PhaseGrid& grid) {
    return {Field::Ones(grid.nx(), grid.nv()), true};
}

SpatialDensity stationary_spatial_density(const PhaseGrid& grid) {
    return {Vector::Ones(grid.nx()), true};
}

PhaseDensity gaussian_phase_density(const Eigen::Vector2d& mean, const Eigen::Matrix2d& cov,
                                    const InvariantMeasure& m, const PhaseGrid& grid) {
    Eigen::LLT<Eigen::Matrix2d> llt(cov);
    if (llt.info() != Eigen::Success) throw DomainError("Gaussian covariance not positive definite");
    const Eigen::Matrix2d prec = cov.inverse();
    const double log_norm = -std::log(2.0 * M_PI) - 0.5 * std::log(cov.determinant());
    PhaseDensity q{Field(grid.nx(), grid.nv()), false};
    for (Eigen::Index i = 0; i < grid.nx(); ++i) {
        for (Eigen::Index j = 0; j < grid.nv(); ++j) {
            const Eigen::Vector2d d(grid.x_nodes(i) - mean(0), grid.v_nodes(j) - mean(1));
            q.values(i, j) = std::exp(log_norm - 0.5 * d.dot(prec * d) - m.log_density(i, j));
        }
    }
    normalize(q, m);
    return q;
}

SpatialDensity gaussian_spatial_density(double mean, double var, const InvariantMeasure& m,
                                        const PhaseGrid& grid) {
    if (!(var > 0.0)) throw DomainError("Gaussian variance must be positive");
    SpatialDensity q{Vector(grid.nx()), false};
    for (Eigen::Index i = 0; i < grid.nx(); ++i) {
        const double d = grid.x_nodes(i) - mean;
        q.values(i) = std::exp(-0.5 * d * d / var - 0.5 * std::log(2.0 * M_PI * var) -
                               m.spatial_log_density(i));
    }
    normalize(q, m);
    return q;
}

SpatialDensity uniform_spatial_density(double lo, double hi, const InvariantMeasure& m,
                                       const PhaseGrid& grid) {
    if (!(hi > lo)) throw DomainError("uniform law needs lo < hi");
    SpatialDensity q{Vector::Zero(grid.nx()), false};
    for (Eigen::Index i = 0; i < grid.nx(); ++i) {
        const double x = grid.x_nodes(i);
        if (x >= lo && x <= hi) q.values(i) = std::exp(-m.spatial_log_density(i));
    }
    normalize(q, m);
    return q;
}

PhaseDensity lift(const SpatialDensity& q, const PhaseGrid& grid) {
    PhaseDensity p{Field(grid.nx(), grid.nv()), q.normalized};
    for (Eigen::Index j = 0; j < grid.nv(); ++j) p.values.col(j) = q.values.array();
    return p;
}

Moments phase_moments(const PhaseDensity& q, const InvariantMeasure& m, const PhaseGrid& grid) {
    Moments out;
    const Field w = q.values * m.omega;
    const double z = w.sum();
    const auto nx = grid.nx();
    const auto nv = grid.nv();
    double mx = 0.0, mv = 0.0;
    for (Eigen::Index i = 0; i < nx; ++i)
        for (Eigen::Index j = 0; j < nv; ++j) {
            mx += w(i, j) * grid.x_nodes(i);
            mv += w(i, j) * grid.v_nodes(j);
        }
    mx /= z;
    mv /= z;
    double cxx = 0.0, cxv = 0.0, cvv = 0.0;
    for (Eigen::Index i = 0; i < nx; ++i)
        for (Eigen::Index j = 0; j < nv; ++j) {
            const double dx = grid.x_nodes(i) - mx;
            const double dv = grid.v_nodes(j) - mv;
            cxx += w(i, j) * dx * dx;
            cxv += w(i, j) * dx * dv;
            cvv += w(i, j) * dv * dv;
        }
    out.mean << mx, mv;
    out.cov << cxx / z, cxv / z, cxv / z, cvv / z;
    return out;
}

} // namespace kinbridge
