#include "cobf/implicit_rate.hpp"

#include <cassert>
#include <cmath>

#include "cobf/error.hpp"

namespace cobf {

double phi(double xi, std::span<const double> interference, double noise, double rho)
{
    double v = std::log(rho) + noise * xi;
    for (double ik : interference) {
        v += std::log1p(ik * xi);
    }
    return v;
}

double phi_slope(double xi, std::span<const double> interference, double noise)
{
    double s = noise;
    for (double ik : interference) {
        s += ik / (1.0 + ik * xi);
    }
    return s;
}

double solve_xi(std::span<const double> interference, double noise, double rho, double tol)
{
    if (!(tol > 0)) {
        throw InvalidArgument("solve_xi: tolerance must be positive");
    }
    double lo = 0.0;
    double hi = -std::log(rho) / noise;
    const double target_width = tol * hi;
    int iter = 0;
    while (hi - lo > target_width) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) {
            break;
        }
        if (phi(mid, interference, noise, rho) < 0) {
            lo = mid;
        } else {
            hi = mid;
        }
        ++iter;
        // width halves every step, so 200 steps cannot be reached in double precision
        assert(iter < 200);
    }
    double xi = 0.5 * (lo + hi);
    double res = phi(xi, interference, noise, rho);
    for (int n = 0; n < 3 && res != 0.0; ++n) {
        const double next = xi - res / phi_slope(xi, interference, noise);
        if (!(next >= lo && next <= hi)) {
            break;
        }
        const double next_res = phi(next, interference, noise, rho);
        if (std::abs(next_res) >= std::abs(res)) {
            break;
        }
        xi = next;
        res = next_res;
    }
    return xi;
}

CertifiedRates certified_rate(const CrossPowers& powers, const NetworkConfig& cfg)
{
    const int kk = cfg.num_users;
    if (powers.num_users() != kk) {
        throw DimensionMismatch("certified_rate: cross powers do not match K");
    }
    CertifiedRates out{{}, {}, powers};
    out.xi.resize(static_cast<std::size_t>(kk));
    out.rate.resize(static_cast<std::size_t>(kk));
    for (int i = 0; i < kk; ++i) {
        const auto interf = powers.interference_at(i);
        const double xi = solve_xi(interf, cfg.noise(i), cfg.rho(i));
        out.xi[static_cast<std::size_t>(i)] = xi;
        out.rate[static_cast<std::size_t>(i)] = log2_1p(xi * powers(i, i));
    }
    return out;
}

CertifiedRates certified_rate(const BeamformerSet& beams, const ChannelStats& stats,
                              const NetworkConfig& cfg)
{
    return certified_rate(cross_powers(beams, stats), cfg);
}

double rate_partial_derivative(const CrossPowers& powers, double xi_j, const NetworkConfig& cfg,
                               int j, int i)
{
    const int kk = cfg.num_users;
    if (j < 0 || j >= kk || i < 0 || i >= kk || i == j) {
        throw InvalidArgument("rate_partial_derivative: need distinct valid users");
    }
    const double signal = powers(j, j);
    if (!(signal > 0)) {
        throw DegenerateBeamformer(j, "rate_partial_derivative: user has zero signal power");
    }
    double slope = cfg.noise(j);
    for (int l = 0; l < kk; ++l) {
        if (l != j) {
            slope += powers(l, j) / (1.0 + powers(l, j) * xi_j);
        }
    }
    const double lead = -signal * xi_j / (std::log(2.0) * (1.0 + xi_j * signal));
    return lead / ((1.0 + powers(i, j) * xi_j) * slope);
}

double rate_partial_derivative(const BeamformerSet& beams, const ChannelStats& stats,
                               const NetworkConfig& cfg, int j, int i)
{
    const CrossPowers cp = cross_powers(beams, stats);
    const double xi = solve_xi(cp.interference_at(j), cfg.noise(j), cfg.rho(j));
    return rate_partial_derivative(cp, xi, cfg, j, i);
}

} // namespace cobf
