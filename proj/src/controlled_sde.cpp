#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include <boost/random/mersenne_twister.hpp>
#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_01.hpp>

#include "kinbridge/errors.hpp"
#include "kinbridge/interpolation.hpp"

namespace kinbridge {

namespace {

// Bilinear interpolation, clamped to the box.
double bilinear(const Field& f, const PhaseGrid& g, double x, double v) {
    const double u = std::clamp((x - g.x_range.lo) / g.hx, 0.0, static_cast<double>(g.nx() - 1));
    const double w = std::clamp((v - g.v_range.lo) / g.hv, 0.0, static_cast<double>(g.nv() - 1));
    const auto i = std::min<Eigen::Index>(static_cast<Eigen::Index>(u), g.nx() - 2);
    const auto j = std::min<Eigen::Index>(static_cast<Eigen::Index>(w), g.nv() - 2);
    const double a = u - static_cast<double>(i), b = w - static_cast<double>(j);
    return (1 - a) * (1 - b) * f(i, j) + a * (1 - b) * f(i + 1, j) + (1 - a) * b * f(i, j + 1) + a * b * f(i + 1, j + 1);
}

struct PathState {
    double x, v;
};

} // namespace

SdeResult simulate_controlled_sde(const BridgeFlow& flow, const Potential& pot, const InvariantMeasure& m,
                                  const PhaseGrid& grid, std::size_t n_paths, double dt, std::uint64_t seed,
                                  const std::vector<double>& snapshot_times, bool control, Exec exec) {
    if (n_paths == 0 || !(dt > 0.0)) throw ConfigurationError("controlled SDE needs paths and a positive step");
    const std::size_t nt = flow.times.size();
    if (control) {
        double spacing = flow.T;
        for (std::size_t k = 1; k < nt; ++k) spacing = std::min(spacing, flow.times[k] - flow.times[k - 1]);
        if (nt < 2 || dt > spacing / 4.0 * (1.0 + 1e-12))
            throw ConfigurationError("controlled SDE needs dt <= flow time spacing / 4");
    }
    std::vector<Field> drift_v;
    if (control) {
        drift_v.reserve(nt);
        for (std::size_t k = 0; k < nt; ++k) drift_v.push_back(finite_difference_gradient(flow.log_g_t[k], grid).dv);
    }

    // initial law: rho_0 omega on the nodes, sampled by inverse CDF
    const Field w0 = flow.rho_t.front().values * m.omega;
    std::vector<double> cdf(static_cast<std::size_t>(w0.size()));
    double acc = 0.0;
    for (Eigen::Index z = 0; z < w0.size(); ++z) cdf[static_cast<std::size_t>(z)] = (acc += w0.data()[z]);
    for (double& c : cdf) c /= acc;

    std::vector<double> snaps = snapshot_times;
    std::sort(snaps.begin(), snaps.end());
    const auto steps = static_cast<long>(std::llround(flow.T / dt));
    const double h = flow.T / static_cast<double>(steps);
    std::vector<long> snap_step(snaps.size());
    for (std::size_t s = 0; s < snaps.size(); ++s) snap_step[s] = std::lround(snaps[s] / h);

    std::vector<std::vector<PathState>> at(snaps.size(), std::vector<PathState>(n_paths));
    std::vector<unsigned char> clamped(n_paths, 0);
    const double gamma = pot.gamma();
    const double noise = std::sqrt(2.0 * gamma * h);
    const auto nv = grid.nv();

#pragma omp parallel for schedule(dynamic, 64) if (exec == Exec::Parallel)
    for (std::size_t p = 0; p < n_paths; ++p) {
        std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                          static_cast<std::uint32_t>(p), static_cast<std::uint32_t>(p >> 32)};
        boost::random::mt19937_64 rng(seq);
        boost::random::normal_distribution<double> normal;
        boost::random::uniform_01<double> unif;
        const double u = unif(rng);
        const auto node = static_cast<Eigen::Index>(std::lower_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
        const auto z = std::min<Eigen::Index>(node, w0.size() - 1);
        double x = grid.x_nodes(z / nv), v = grid.v_nodes(z % nv);
        std::size_t next = 0;
        for (long k = 0; k <= steps; ++k) {
            while (next < snaps.size() && snap_step[next] == k) at[next++][p] = {x, v};
            if (k == steps) break;
            double drift = -pot.grad(x) - gamma * v;
            if (control) {
                const double t = h * static_cast<double>(k);
                const auto it = std::upper_bound(flow.times.begin(), flow.times.end(), t);
                std::size_t hi = static_cast<std::size_t>(it - flow.times.begin());
                hi = std::clamp<std::size_t>(hi, 1, nt - 1);
                const std::size_t lo = hi - 1;
                const double lam = (t - flow.times[lo]) / (flow.times[hi] - flow.times[lo]);
                const double c = (1.0 - lam) * bilinear(drift_v[lo], grid, x, v) + lam * bilinear(drift_v[hi], grid, x, v);
                drift += 2.0 * gamma * c;
            }
            const double xn = x + v * h;
            v += drift * h + noise * normal(rng);
            x = xn;
            if (x < grid.x_range.lo || x > grid.x_range.hi || v < grid.v_range.lo || v > grid.v_range.hi) {
                clamped[p] = 1;
                x = std::clamp(x, grid.x_range.lo, grid.x_range.hi);
                v = std::clamp(v, grid.v_range.lo, grid.v_range.hi);
            }
        }
    }

    SdeResult res;
    for (unsigned char c : clamped) res.clamped += c;
    res.clamped_fraction = static_cast<double>(res.clamped) / static_cast<double>(n_paths);
    if (res.clamped_fraction > 0.01) {
        std::ostringstream os;
        os << "controlled SDE clamped " << res.clamped_fraction * 100.0 << "% of paths at the box";
        throw AccuracyError(os.str());
    }
    const double n = static_cast<double>(n_paths);
    for (std::size_t s = 0; s < snaps.size(); ++s) {
        SdeSnapshot sn;
        sn.t = snaps[s];
        Eigen::Vector2d mean = Eigen::Vector2d::Zero();
        for (const PathState& ps : at[s]) mean += Eigen::Vector2d(ps.x, ps.v);
        mean /= n;
        Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
        for (const PathState& ps : at[s]) {
            const Eigen::Vector2d d(ps.x - mean(0), ps.v - mean(1));
            cov += d * d.transpose();
        }
        cov /= (n - 1.0);
        Eigen::Matrix2d var_prod = Eigen::Matrix2d::Zero();
        for (const PathState& ps : at[s]) {
            const Eigen::Vector2d d(ps.x - mean(0), ps.v - mean(1));
            const Eigen::Matrix2d e = d * d.transpose() - cov;
            var_prod += e.cwiseProduct(e);
        }
        sn.mean = mean;
        sn.mean_se = cov.diagonal().cwiseSqrt() / std::sqrt(n);
        sn.cov = cov;
        sn.cov_se = (var_prod / (n - 1.0)).cwiseSqrt() / std::sqrt(n);
        sn.histogram = Field::Zero(grid.nx(), grid.nv());
        for (const PathState& ps : at[s]) {
            const auto i = static_cast<Eigen::Index>(std::lround((ps.x - grid.x_range.lo) / grid.hx));
            const auto j = static_cast<Eigen::Index>(std::lround((ps.v - grid.v_range.lo) / grid.hv));
            sn.histogram(i, j) += 1.0;
        }
        sn.histogram /= (n * m.omega);
        res.snapshots.push_back(std::move(sn));
    }
    return res;
}

} // namespace kinbridge
