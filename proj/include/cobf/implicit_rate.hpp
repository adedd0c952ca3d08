#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "cobf/model.hpp"

namespace cobf {

/// log2(1 + x), accurate for small x.
inline double log2_1p(double x)
{
    return std::log1p(x) / 0.69314718055994530942;
}

/// ln(rho) + sigma^2 xi + sum_k ln(1 + I_k xi). Strictly increasing in xi.
double phi(double xi, std::span<const double> interference, double noise, double rho);

/// d phi / d xi = sigma^2 + sum_k I_k / (1 + I_k xi).
double phi_slope(double xi, std::span<const double> interference, double noise);

/// Unique positive root of phi by bisection on [0, ln(1/rho)/sigma^2].
///
/// `tol` is the stopping bracket width relative to the initial width. The
/// bisection result is then polished by safeguarded Newton steps that stay
/// inside the final bracket.
double solve_xi(std::span<const double> interference, double noise, double rho,
                double tol = 1e-12);

/// Per-user implicit level xi_i and the rate it certifies, R_i = log2(1 + xi_i I_ii).
struct CertifiedRates {
    std::vector<double> xi;
    std::vector<double> rate;
    CrossPowers powers;
};

CertifiedRates certified_rate(const BeamformerSet& beams, const ChannelStats& stats,
                              const NetworkConfig& cfg);

/// Same as above from already-exchanged cross powers.
CertifiedRates certified_rate(const CrossPowers& powers, const NetworkConfig& cfg);

/// dR_j / d(w_i^H Q_ij w_i) by the implicit function theorem, for user j
/// with implicit level xi and cross powers at receiver j. Always <= 0.
/// Throws DegenerateBeamformer when I_jj = 0.
double rate_partial_derivative(const CrossPowers& powers, double xi_j, const NetworkConfig& cfg,
                               int j, int i);

double rate_partial_derivative(const BeamformerSet& beams, const ChannelStats& stats,
                               const NetworkConfig& cfg, int j, int i);

} // namespace cobf
