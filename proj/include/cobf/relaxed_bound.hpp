#pragma once

#include <vector>

#include "cobf/model.hpp"
#include "cobf/polyblock.hpp"
#include "cobf/sdp.hpp"
#include "cobf/utility.hpp"

namespace cobf {

/// Instance data for the semidefinite relaxation of the certified-rate region.
struct RelaxedInstance {
    ChannelStats stats;
    NetworkConfig cfg;
    std::vector<double> ratio; // (1 - rho_i) / rho_i
    Vertex initial;            // single-user maximal certified rates
};

/// v_i = log2(1 + ln(1/rho_i) P_i lambda_max(Q_ii) / sigma_i^2).
Vertex initial_vertex(const ChannelStats& stats, const NetworkConfig& cfg);

RelaxedInstance make_relaxed_instance(const ChannelStats& stats, const NetworkConfig& cfg);

/// Max-slack SDP whose optimum is >= 0 iff beta v lies in the relaxed region.
/// Users with v_i = 0 (threshold 2^{beta v_i} - 1 = 0) impose no row.
BlockSdpProblem beta_problem(const RelaxedInstance& inst, const Vertex& v, double beta);

enum class Sign { Feasible, Infeasible, Unknown };

/// Feasibility of beta v, decided by a sign-only SDP solve.
Sign relaxed_sign(const RelaxedInstance& inst, const Vertex& v, double beta);

struct BetaResult {
    double beta = 0.0;    // largest multiplier confirmed feasible
    double beta_hi = 0.0; // smallest multiplier confirmed infeasible, or the cap
    int sdp_solves = 0;
    int abstentions = 0;
    bool bracket_closed = true; // false when abstentions stopped the bisection early
};

/// sup{ beta in [0, cap] : beta v in the relaxed region } by bisection to
/// relative tolerance `tol`. cap <= 0 selects min_i initial_i / v_i. The
/// bracket only moves on a decided sign; when a midpoint and two perturbed
/// retries all abstain, the current bracket is returned as is.
BetaResult solve_beta(const RelaxedInstance& inst, const Vertex& v, double tol = 1e-6,
                      double cap = 0.0);

struct BoundOptions {
    double delta = 1e-3;
    int max_iterations = 200;
    double beta_tol = 1e-6;
};

struct BoundResult {
    double bound = 0.0; // upper bound on the utility optimum
    double lower = 0.0; // utility at the best relaxed-region point found
    PoaResult poa;      // empty trace for the single-shot max-min case
    BetaResult single;  // max-min case only
    int sdp_solves = 0;
};

/// Upper bound on max U over the certified-rate region. For mmf-lse this is
/// the relaxed max-min rate from one beta solve along the weight direction;
/// otherwise polyblock outer approximation on the relaxed region.
BoundResult upper_bound(const RelaxedInstance& inst, const UtilitySpec& u,
                        const BoundOptions& opts = {});

} // namespace cobf
