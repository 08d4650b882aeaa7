#include <algorithm>
#include <array>
#include <cmath>
#include <random>
#include <sstream>

#include <boost/random/mersenne_twister.hpp>
#include <boost/random/normal_distribution.hpp>

#include "kinbridge/errors.hpp"
#include "kinbridge/kernel.hpp"

namespace kinbridge {

namespace {

struct RowCounts {
    std::vector<std::uint32_t> counts;
    std::size_t escaped = 0;
};

template <class Force>
void simulate_row(Force force, double x0, double v0, double gamma, double t, double dt, std::size_t nsamples,
                  boost::random::mt19937_64& rng, const PhaseGrid& grid, RowCounts& out) {
    boost::random::normal_distribution<double> normal;
    const auto steps = static_cast<long>(std::llround(t / dt));
    const double h = t / static_cast<double>(steps);
    const double noise = std::sqrt(2.0 * gamma * h);
    const double xlo = grid.x_range.lo, xhi = grid.x_range.hi;
    const double vlo = grid.v_range.lo, vhi = grid.v_range.hi;
    const auto nv = grid.nv();
    // Paths advance in lockstep batches so the arithmetic vectorizes.
    constexpr std::size_t batch = 32;
    std::array<double, batch> xs, vs, z{};
    for (std::size_t s0 = 0; s0 < nsamples; s0 += batch) {
        const std::size_t nb = std::min(batch, nsamples - s0);
        xs.fill(x0);
        vs.fill(v0);
        for (long k = 0; k < steps; ++k) {
            for (std::size_t b = 0; b < nb; ++b) z[b] = normal(rng);
            for (std::size_t b = 0; b < batch; ++b) {
                const double x = xs[b], v = vs[b];
                xs[b] = x + v * h;
                vs[b] = v + (force(x) - gamma * v) * h + noise * z[b];
            }
        }
        for (std::size_t b = 0; b < nb; ++b) {
            const double x = xs[b], v = vs[b];
            if (x < xlo || x > xhi || v < vlo || v > vhi) {
                ++out.escaped;
                continue;
            }
            // nearest node: cell [x_i - h/2, x_i + h/2] clipped to the box
            const auto i = static_cast<Eigen::Index>(std::lround((x - xlo) / grid.hx));
            const auto j = static_cast<Eigen::Index>(std::lround((v - vlo) / grid.hv));
            ++out.counts[static_cast<std::size_t>(i * nv + j)];
        }
    }
}

} // namespace

TransitionKernel mc_kernel(const Potential& pot, double t, const PhaseGrid& grid, const InvariantMeasure& m,
                           std::size_t nsamples, double dt, std::uint64_t seed, Exec exec) {
    if (nsamples < 1000) throw ConfigurationError("mc_kernel needs at least 1000 samples per source node");
    if (!(t > 0.0) || !(dt > 0.0) || dt > t / 100.0 * (1.0 + 1e-12))
        throw ConfigurationError("mc_kernel needs 0 < dt <= t/100");
    const auto n = grid.size();
    const auto nv = grid.nv();
    TransitionKernel k;
    k.t = t;
    k.values = RowMatrix::Zero(n, n);
    k.omega = flat(m.omega);
    k.grid_hash = grid.hash();
    k.origin = {KernelOrigin::Kind::MonteCarlo, nsamples, dt, seed};
    std::vector<std::size_t> escaped(static_cast<std::size_t>(n), 0);
    const bool quadratic = pot.kind() == Potential::Kind::Quadratic;
    const double alpha = pot.alpha();

#pragma omp parallel for schedule(dynamic, 4) if (exec == Exec::Parallel)
    for (Eigen::Index r = 0; r < n; ++r) {
        std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                          static_cast<std::uint32_t>(r), static_cast<std::uint32_t>(r >> 32)};
        boost::random::mt19937_64 rng(seq);
        RowCounts rc{std::vector<std::uint32_t>(static_cast<std::size_t>(n), 0), 0};
        const double x0 = grid.x_nodes(r / nv);
        const double v0 = grid.v_nodes(r % nv);
        if (quadratic)
            simulate_row([alpha](double x) { return -alpha * x; }, x0, v0, pot.gamma(), t, dt, nsamples, rng, grid, rc);
        else
            simulate_row([&pot](double x) { return -pot.grad(x); }, x0, v0, pot.gamma(), t, dt, nsamples, rng, grid, rc);
        const double inv = 1.0 / static_cast<double>(nsamples);
        for (Eigen::Index c = 0; c < n; ++c)
            if (rc.counts[static_cast<std::size_t>(c)] > 0)
                k.values(r, c) = rc.counts[static_cast<std::size_t>(c)] * inv / k.omega(c);
        escaped[static_cast<std::size_t>(r)] = rc.escaped;
    }
    double frac = 0.0;
    for (Eigen::Index r = 0; r < n; ++r)
        frac += k.omega(r) * static_cast<double>(escaped[static_cast<std::size_t>(r)]) / static_cast<double>(nsamples);
    k.escaped_fraction = frac;
    if (frac > 0.01) {
        std::ostringstream os;
        os << "Monte Carlo endpoints leave the grid box at rate " << frac << " (> 1%); enlarge the box";
        throw TruncationError(os.str());
    }
    const Vector rows = k.values * k.omega;
    k.raw_row_defect = (rows.array() - 1.0).abs().maxCoeff();
    k.raw_row_defect_weighted = (rows.array() - 1.0).abs().matrix().dot(k.omega);
    return k;
}

} // namespace kinbridge
