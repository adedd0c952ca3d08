#pragma once

#include <vector>

#include "cobf/error.hpp"
#include "cobf/implicit_rate.hpp"
#include "cobf/model.hpp"
#include "cobf/trace.hpp"
#include "cobf/utility.hpp"

namespace cobf {

/// Projected gradient ascent with Armijo backtracking along the projection arc.
struct InnerSolverOptions {
    int max_steps = 500;
    double initial_step = 1.0;
    double shrink = 0.5;
    double slope = 1e-4;
    double grad_tol = 1e-7;
    /// Start each line search after the first from the Barzilai-Borwein step
    /// instead of `initial_step`; backtracking is unchanged.
    bool spectral_step = true;
};

struct DbsumOptions {
    /// Proximal weight c of the surrogate; <= 0 selects default_penalty().
    double penalty = 0.0;
    /// Cap on block updates n; <= 0 means 200 K.
    int max_block_updates = 0;
    /// Stop when |U[n] - U[n-K]| < rel_tol |U[n-K]|.
    double rel_tol = 1e-3;
    InnerSolverOptions inner;
};

/// Scale-free default for c: 1e-2 times the largest single-user rate
/// curvature scale a_i / (1 + a_i P_i), a_i = ln(1/rho_i) lambda_max(Q_ii) / sigma_i^2.
double default_penalty(const ChannelStats& stats, const NetworkConfig& cfg);

/// What transmitter j sends to the updating transmitter i.
struct RateReport {
    int from = 0;
    double rate = 0.0;       // R_j at the base point
    double derivative = 0.0; // dR_j / d(w_i^H Q_ij w_i), <= 0
};

/// Everything transmitter i knows when it updates its beamformer.
struct LocalView {
    int user = 0;
    CVec beam;                       // current w_i
    CMat q_direct;                   // Q_ii
    std::vector<CMat> q_out;         // Q_ij, indexed by j (entry i unused)
    std::vector<double> incoming;    // I_ki received from k != i (entry i unused)
    double noise = 1.0;
    double rho = 0.9;
};

LocalView local_view(int i, const BeamformerSet& beams, const ChannelStats& stats,
                     const NetworkConfig& cfg, const CrossPowers& powers);

/// Locally tight concave lower bound of U in w_i around the base point.
struct SurrogateModel {
    int block = 0;
    CVec base_beam;                 // w̄_i
    CMat q_direct;                  // Q_ii
    CVec q_direct_base;             // Q_ii w̄_i
    std::vector<CMat> q_out;        // Q_ij
    double xi = 0.0;                // xi_i at the base point
    double base_signal = 0.0;       // w̄_i^H Q_ii w̄_i
    std::vector<double> base_rate;  // R_j at the base point, all j
    std::vector<double> derivative; // d_j, zero at j = i
    std::vector<double> base_cross; // w̄_i^H Q_ij w̄_i, zero at j = i
    double penalty = 0.0;
};

/// Builds the block-i surrogate from user i's local data and the reports it received.
SurrogateModel build_surrogate(const LocalView& view, const std::vector<RateReport>& reports,
                               double penalty);

/// Full-information convenience wrapper. Throws DegenerateBeamformer if any
/// user has zero signal power at the base point.
SurrogateModel build_surrogate(int i, const BeamformerSet& base, const ChannelStats& stats,
                               const NetworkConfig& cfg, double penalty);

/// The report transmitter j sends to transmitter i.
RateReport make_report(int j, int i, const CrossPowers& powers, const NetworkConfig& cfg);

/// Surrogate rates R̄_j(w_i). Returns false if w_i leaves the surrogate's
/// domain (linearized signal argument 1 + xi L <= 0).
bool surrogate_rates(const SurrogateModel& m, const CVec& w, std::vector<double>& rates);

/// Surrogate utility minus the proximal term; -inf outside the domain.
double surrogate_value(const SurrogateModel& m, const CVec& w, const UtilitySpec& u);

/// Real gradient of surrogate_value, packed as a complex vector (Re/Im parts).
CVec surrogate_gradient(const SurrogateModel& m, const CVec& w, const UtilitySpec& u);

struct BlockSolveResult {
    CVec beam;
    int steps = 0;
    double projected_gradient_norm = 0.0;
};

BlockSolveResult solve_block_subproblem(const SurrogateModel& m, const UtilitySpec& u,
                                        double power_budget, const InnerSolverOptions& opts);

/// Euclidean projection onto { ||w||^2 <= P }.
CVec project_ball(const CVec& w, double power_budget);

struct DbsumResult {
    BeamformerSet beams;
    std::vector<double> rates;
    double utility = 0.0;
    std::vector<TraceEntry> trace; // entry 0 is the initial point
    long initial_messages = 0;
    long messages = 0;             // total including the initial exchange
    int block_updates = 0;
    bool converged = false;
    int max_inner_steps = 0;
};

/// Iterate that hit a zero-signal user mid-run.
class DegenerateIterate : public DegenerateBeamformer {
public:
    DegenerateIterate(int user, BeamformerSet beams)
        : DegenerateBeamformer(user, "iterate has a user with zero signal power"),
          beams_(std::move(beams)) {}
    const BeamformerSet& beams() const { return beams_; }

private:
    BeamformerSet beams_;
};

/// Replace beamformers with zero signal power by sqrt(P_i) times the
/// principal eigenvector of Q_ii. Returns the number of users changed.
int repair_degenerate(BeamformerSet& beams, const ChannelStats& stats, const NetworkConfig& cfg);

/// Gauss-Seidel block successive lower-bound maximization.
DbsumResult run_dbsum(const ChannelStats& stats, const NetworkConfig& cfg, const UtilitySpec& u,
                      const BeamformerSet& init, const DbsumOptions& opts = {});

/// Projected-gradient norm of the true objective U(R(w)) w.r.t. each block,
/// maximized over blocks (unit step).
double stationarity_residual(const BeamformerSet& beams, const ChannelStats& stats,
                             const NetworkConfig& cfg, const UtilitySpec& u);

} // namespace cobf
