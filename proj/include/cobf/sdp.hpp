#pragma once

#include <vector>

#include "cobf/linalg.hpp"

namespace cobf {

/// maximize t  s.t.  sum_k tr(A_ik W_k) + b_i >= t   (rows i)
///                   tr(W_k) <= P_k,  W_k Hermitian PSD  (blocks k)
struct BlockSdpProblem {
    int num_blocks = 0;
    int block_size = 0;
    std::vector<std::vector<CMat>> a; // a[i][k], Hermitian
    std::vector<double> b;
    std::vector<double> trace_cap;

    int num_rows() const { return static_cast<int>(b.size()); }
    void validate() const;
};

enum class SdpStatus { Optimal, SignDecided, MaxIterations };

struct SdpOptions {
    double tol = 1e-8;       // relative duality gap target, gap <= tol (1 + |t|)
    double newton_tol = 1e-10;
    int max_newton_steps = 200;
    double mu_factor = 0.2;
    /// Stop as soon as the sign of the optimum is certain: a primal point
    /// with t > 0, or a dual bound < 0.
    bool sign_only = false;
};

struct SdpSolution {
    std::vector<CMat> w;
    double t = 0.0;
    double upper = 0.0;          // dual bound on the optimum
    double gap = 0.0;            // upper - t
    std::vector<double> lambda;  // row multipliers, sum 1
    SdpStatus status = SdpStatus::MaxIterations;
    int newton_steps = 0;
};

/// Barrier path-following solve. Rows may be empty, in which case t is +inf.
SdpSolution solve_max_slack(const BlockSdpProblem& p, const SdpOptions& opts = {});

/// Row values sum_k tr(A_ik W_k) + b_i.
std::vector<double> row_values(const BlockSdpProblem& p, const std::vector<CMat>& w);

/// Upper bound on the optimum from row multipliers lambda >= 0, sum 1.
double dual_bound(const BlockSdpProblem& p, const std::vector<double>& lambda);

/// Primal feasibility, reconstructed dual feasibility, complementarity and gap,
/// each within tol (1 + |t|).
bool verify_kkt(const BlockSdpProblem& p, const SdpSolution& sol, double tol);

} // namespace cobf
