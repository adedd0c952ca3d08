#pragma once

#include <vector>

#include "cobf/implicit_rate.hpp"
#include "cobf/model.hpp"
#include "cobf/trace.hpp"

namespace cobf {

/// Per-user quantities of the separable WMMSE lower bound at a base point w̄.
struct WmmseState {
    std::vector<double> xi;          // xi_i(w̄)
    std::vector<double> gamma;       // gamma_i > 0
    RMat cross_scale;                // (j, i) -> 1 / (1 + Ī_ji xi_i), diagonal unused
    std::vector<CMat> q_bar_sqrt;    // (gamma_i Q_ii)^{1/2}
    std::vector<CVec> y;             // receive filters ȳ_i
    std::vector<double> base_mse;    // ē_i, MSE at the base point
    std::vector<double> eta;         // alpha_i / (ln 2 ē_i)
    RMat theta;                      // (i, j) -> eta_j ||ȳ_j||^2 / (1 + Ī_ij xi_j)
    CrossPowers base_powers;
};

/// Throws DegenerateBeamformer if some user has zero signal power at `base`.
WmmseState compute_state(const BeamformerSet& base, const ChannelStats& stats,
                         const NetworkConfig& cfg, const std::vector<double>& weights);

/// zeta_i(w | w̄) = gamma_i / (sigma_i^2 + sum_{j != i} w_j^H Q̄_ji w_j).
double zeta(const WmmseState& s, const BeamformerSet& beams, const ChannelStats& stats,
            const NetworkConfig& cfg, int i);

/// sum_i alpha_i log2(1 + zeta_i(w | w̄) w_i^H Q_ii w_i), the middle of the bound chain.
double wsr_zeta_bound(const WmmseState& s, const BeamformerSet& beams, const ChannelStats& stats,
                      const NetworkConfig& cfg, const std::vector<double>& weights);

/// e_i(w) = |1 - ȳ_i^H Q̄_ii^{1/2} w_i|^2 + (sigma_i^2 + sum_{j != i} w_j^H Q̄_ji w_j) ||ȳ_i||^2.
double user_mse(const WmmseState& s, const BeamformerSet& beams, const ChannelStats& stats,
                const NetworkConfig& cfg, int i);

/// Per-user term of the separable lower bound; summing over i gives Ū_wsr.
double wsr_lower_bound_term(const WmmseState& s, const BeamformerSet& beams,
                            const ChannelStats& stats, const NetworkConfig& cfg,
                            const std::vector<double>& weights, int i);

double wsr_lower_bound(const WmmseState& s, const BeamformerSet& beams, const ChannelStats& stats,
                       const NetworkConfig& cfg, const std::vector<double>& weights);

struct SubproblemSolution {
    CVec w;
    double mu = 0.0; // multiplier of ||w||^2 <= P
};

/// min_w w^H A w - 2 Re(b^H w) s.t. ||w||^2 <= P, A Hermitian PSD, by bisection
/// on the multiplier over an eigendecomposition of A.
SubproblemSolution solve_ball_quadratic(const CMat& a, const CVec& b, double power_budget,
                                        double tol = 1e-10);

/// Quadratic data (A, b) of user i's subproblem, built from the exchanged theta_ij.
void user_quadratic(const WmmseState& s, const ChannelStats& stats, int i, CMat& a, CVec& b);

SubproblemSolution solve_user_subproblem(const WmmseState& s, const ChannelStats& stats, int i,
                                         double power_budget, double tol = 1e-10);

struct DwmmseOptions {
    double rel_tol = 1e-3;       // stop when |U[n] - U[n-1]| < rel_tol |U[n-1]|
    int max_iterations = 1000;
    int parallel_width = 1;      // threads solving the K subproblems
    std::vector<int> schedule;   // order the subproblems are dispatched in; empty = 0..K-1
    double dual_tol = 1e-10;
};

struct DwmmseResult {
    BeamformerSet beams;
    std::vector<double> rates;
    double utility = 0.0;
    std::vector<TraceEntry> trace; // entry 0 is the initial point
    long initial_messages = 0;
    long messages = 0;
    int iterations = 0;
    bool converged = false;
};

/// Jacobi weighted-MMSE iteration for weighted sum rate.
DwmmseResult run_dwmmse(const ChannelStats& stats, const NetworkConfig& cfg,
                        const std::vector<double>& weights, const BeamformerSet& init,
                        const DwmmseOptions& opts = {});

} // namespace cobf
