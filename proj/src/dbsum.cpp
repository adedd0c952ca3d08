#include "cobf/dbsum.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

namespace cobf {

namespace {

constexpr double kLn2 = 0.69314718055994530942;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0)
{
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

} // namespace

double default_penalty(const ChannelStats& stats, const NetworkConfig& cfg)
{
    double scale = 0.0;
    for (int i = 0; i < cfg.num_users; ++i) {
        const double a = -std::log(cfg.rho(i)) * lambda_max(stats(i, i)) / cfg.noise(i);
        scale = std::max(scale, a / (1.0 + a * cfg.power(i)));
    }
    return 1e-2 * scale;
}

LocalView local_view(int i, const BeamformerSet& beams, const ChannelStats& stats,
                     const NetworkConfig& cfg, const CrossPowers& powers)
{
    const int kk = cfg.num_users;
    LocalView v;
    v.user = i;
    v.beam = beams[i];
    v.q_direct = stats(i, i);
    v.q_out.resize(static_cast<std::size_t>(kk));
    v.incoming.assign(static_cast<std::size_t>(kk), 0.0);
    for (int j = 0; j < kk; ++j) {
        if (j != i) {
            v.q_out[static_cast<std::size_t>(j)] = stats(i, j);
            v.incoming[static_cast<std::size_t>(j)] = powers(j, i);
        }
    }
    v.noise = cfg.noise(i);
    v.rho = cfg.rho(i);
    return v;
}

RateReport make_report(int j, int i, const CrossPowers& powers, const NetworkConfig& cfg)
{
    const double xi = solve_xi(powers.interference_at(j), cfg.noise(j), cfg.rho(j));
    RateReport r;
    r.from = j;
    r.rate = log2_1p(xi * powers(j, j));
    r.derivative = rate_partial_derivative(powers, xi, cfg, j, i);
    return r;
}

SurrogateModel build_surrogate(const LocalView& view, const std::vector<RateReport>& reports,
                               double penalty)
{
    if (!(penalty > 0)) {
        throw InvalidArgument("build_surrogate: penalty must be positive");
    }
    const int i = view.user;
    const auto kk = view.incoming.size();
    SurrogateModel m;
    m.block = i;
    m.base_beam = view.beam;
    m.q_direct = view.q_direct;
    m.q_direct_base = view.q_direct * view.beam;
    m.q_out = view.q_out;
    m.penalty = penalty;

    std::vector<double> interf;
    for (std::size_t k = 0; k < kk; ++k) {
        if (static_cast<int>(k) != i) {
            interf.push_back(view.incoming[k]);
        }
    }
    m.xi = solve_xi(interf, view.noise, view.rho);
    m.base_signal = std::max(0.0, view.beam.dot(m.q_direct_base).real());
    if (!(m.base_signal > 0)) {
        throw DegenerateBeamformer(i, "build_surrogate: updating user has zero signal power");
    }

    m.base_rate.assign(kk, 0.0);
    m.derivative.assign(kk, 0.0);
    m.base_cross.assign(kk, 0.0);
    m.base_rate[static_cast<std::size_t>(i)] = log2_1p(m.xi * m.base_signal);
    if (reports.size() + 1 != kk) {
        throw DimensionMismatch("build_surrogate: expected one report per other user");
    }
    for (const RateReport& r : reports) {
        const auto j = static_cast<std::size_t>(r.from);
        if (r.from == i || j >= kk) {
            throw InvalidArgument("build_surrogate: report from an invalid user");
        }
        m.base_rate[j] = r.rate;
        m.derivative[j] = r.derivative;
        m.base_cross[j] = std::max(0.0, quad_form(m.q_out[j], view.beam));
    }
    return m;
}

SurrogateModel build_surrogate(int i, const BeamformerSet& base, const ChannelStats& stats,
                               const NetworkConfig& cfg, double penalty)
{
    const CrossPowers cp = cross_powers(base, stats);
    for (int j = 0; j < cfg.num_users; ++j) {
        if (!(cp(j, j) > 0)) {
            throw DegenerateBeamformer(j, "build_surrogate: base point has a zero-signal user");
        }
    }
    std::vector<RateReport> reports;
    for (int j = 0; j < cfg.num_users; ++j) {
        if (j != i) {
            reports.push_back(make_report(j, i, cp, cfg));
        }
    }
    return build_surrogate(local_view(i, base, stats, cfg, cp), reports, penalty);
}

bool surrogate_rates(const SurrogateModel& m, const CVec& w, std::vector<double>& rates)
{
    const auto kk = m.base_rate.size();
    rates.resize(kk);
    const double lin = 2.0 * m.q_direct_base.dot(w).real() - m.base_signal;
    const double arg = 1.0 + m.xi * lin;
    if (!(arg > 0)) {
        return false;
    }
    for (std::size_t j = 0; j < kk; ++j) {
        if (static_cast<int>(j) == m.block) {
            rates[j] = log2_1p(m.xi * lin);
        } else {
            rates[j] = m.base_rate[j] + m.derivative[j] * (quad_form(m.q_out[j], w) - m.base_cross[j]);
        }
    }
    return true;
}

namespace {

bool in_domain(const UtilitySpec& u, const std::vector<double>& rates)
{
    if (!u.needs_floor()) {
        return true;
    }
    return std::all_of(rates.begin(), rates.end(), [&](double r) { return r > u.rate_floor; });
}

} // namespace

double surrogate_value(const SurrogateModel& m, const CVec& w, const UtilitySpec& u)
{
    std::vector<double> rates;
    if (!surrogate_rates(m, w, rates) || !in_domain(u, rates)) {
        return -std::numeric_limits<double>::infinity();
    }
    return evaluate(u, rates) - 0.5 * m.penalty * (w - m.base_beam).squaredNorm();
}

CVec surrogate_gradient(const SurrogateModel& m, const CVec& w, const UtilitySpec& u)
{
    std::vector<double> rates;
    if (!surrogate_rates(m, w, rates)) {
        throw SolverFailure("surrogate_gradient: point outside the surrogate domain");
    }
    const RVec du = gradient(u, rates);
    const auto i = static_cast<std::size_t>(m.block);
    const double lin = 2.0 * m.q_direct_base.dot(w).real() - m.base_signal;
    CVec g = (du(m.block) * 2.0 * m.xi / (kLn2 * (1.0 + m.xi * lin))) * m.q_direct_base;
    for (std::size_t j = 0; j < rates.size(); ++j) {
        if (j != i && m.derivative[j] != 0.0) {
            g += (du(static_cast<Eigen::Index>(j)) * 2.0 * m.derivative[j]) * (m.q_out[j] * w);
        }
    }
    g -= m.penalty * (w - m.base_beam);
    return g;
}

CVec project_ball(const CVec& w, double power_budget)
{
    const double n2 = w.squaredNorm();
    if (n2 <= power_budget) {
        return w;
    }
    return w * std::sqrt(power_budget / n2);
}

BlockSolveResult solve_block_subproblem(const SurrogateModel& m, const UtilitySpec& u,
                                        double power_budget, const InnerSolverOptions& opts)
{
    BlockSolveResult res;
    CVec w = project_ball(m.base_beam, power_budget);
    double f = surrogate_value(m, w, u);
    CVec w_prev;
    CVec g_prev;
    for (res.steps = 0;; ++res.steps) {
        const CVec g = surrogate_gradient(m, w, u);
        if (!g.allFinite()) {
            throw SolverFailure("solve_block_subproblem: non-finite gradient");
        }
        res.projected_gradient_norm = (project_ball(w + g, power_budget) - w).norm();
        if (res.projected_gradient_norm <= opts.grad_tol || res.steps >= opts.max_steps) {
            break;
        }
        double step = opts.initial_step;
        if (opts.spectral_step && res.steps > 0) {
            // Barzilai-Borwein: |s|^2 / (-s^T y), curvature is negative for a concave objective
            const CVec s_k = w - w_prev;
            const double curv = -(g - g_prev).dot(s_k).real();
            if (curv > 0) {
                step = std::clamp(s_k.squaredNorm() / curv, 1e-10, 1e10);
            }
        }
        w_prev = w;
        g_prev = g;
        bool accepted = false;
        while (step > 1e-30) {
            const CVec trial = project_ball(w + step * g, power_budget);
            const double ft = surrogate_value(m, trial, u);
            if (ft >= f + opts.slope * g.dot(trial - w).real()) {
                accepted = (ft >= f);
                if (accepted) {
                    w = trial;
                    f = ft;
                }
                break;
            }
            step *= opts.shrink;
        }
        if (!accepted) {
            break;
        }
    }
    res.beam = w;
    return res;
}

int repair_degenerate(BeamformerSet& beams, const ChannelStats& stats, const NetworkConfig& cfg)
{
    int changed = 0;
    for (int i = 0; i < cfg.num_users; ++i) {
        if (!(quad_form(stats(i, i), beams[i]) > 0)) {
            beams[i] = std::sqrt(cfg.power(i)) * principal_eigenvector(stats(i, i));
            ++changed;
        }
    }
    return changed;
}

DbsumResult run_dbsum(const ChannelStats& stats, const NetworkConfig& cfg, const UtilitySpec& u,
                      const BeamformerSet& init, const DbsumOptions& opts)
{
    const auto t0 = Clock::now();
    cfg.validate();
    u.validate();
    const int kk = cfg.num_users;
    if (static_cast<int>(u.weights.size()) != kk) {
        throw DimensionMismatch("run_dbsum: utility weights do not match K");
    }
    if (!init.feasible(cfg)) {
        throw InvalidArgument("run_dbsum: initial beamformers violate the power budget");
    }
    const double c = opts.penalty > 0 ? opts.penalty : default_penalty(stats, cfg);
    const int max_updates = opts.max_block_updates > 0 ? opts.max_block_updates : 200 * kk;

    DbsumResult out;
    out.beams = init;
    repair_degenerate(out.beams, stats, cfg);

    // step 1: every transmitter announces w_i^H Q_ij w_i to every j != i
    CrossPowers cp = cross_powers(out.beams, stats);
    out.initial_messages = static_cast<long>(kk) * (kk - 1);
    out.messages = out.initial_messages;

    CertifiedRates cr = certified_rate(cp, cfg);
    std::vector<double> history{evaluate(u, cr.rate)};
    out.trace.push_back({0, -1, history.back(), seconds_since(t0), out.initial_messages});

    for (int n = 1; n <= max_updates; ++n) {
        const int i = (n - 1) % kk;
        long sent = 0;

        std::vector<RateReport> reports;
        for (int j = 0; j < kk; ++j) {
            if (j != i) {
                reports.push_back(make_report(j, i, cp, cfg));
                sent += 2; // R_j and its derivative
            }
        }
        const SurrogateModel m = build_surrogate(local_view(i, out.beams, stats, cfg, cp), reports, c);
        const BlockSolveResult blk = solve_block_subproblem(m, u, cfg.power(i), opts.inner);
        out.max_inner_steps = std::max(out.max_inner_steps, blk.steps);
        out.beams[i] = blk.beam;

        for (int j = 0; j < kk; ++j) {
            cp.values(i, j) = std::max(0.0, quad_form(stats(i, j), out.beams[i]));
            if (j != i) {
                ++sent; // w_i^H Q_ij w_i to transmitter j
            }
        }
        if (!(cp(i, i) > 0)) {
            throw DegenerateIterate(i, out.beams);
        }
        out.messages += sent;
        out.block_updates = n;

        cr = certified_rate(cp, cfg);
        history.push_back(evaluate(u, cr.rate));
        out.trace.push_back({n, i, history.back(), seconds_since(t0), sent});

        if (n >= kk) {
            const double prev = history[static_cast<std::size_t>(n - kk)];
            if (std::abs(history.back() - prev) < opts.rel_tol * std::abs(prev)) {
                out.converged = true;
                break;
            }
        }
    }
    out.rates = cr.rate;
    out.utility = history.back();
    return out;
}

double stationarity_residual(const BeamformerSet& beams, const ChannelStats& stats,
                             const NetworkConfig& cfg, const UtilitySpec& u)
{
    // The surrogate with c -> 0 shares value and gradient with U at the base point.
    double worst = 0.0;
    for (int i = 0; i < cfg.num_users; ++i) {
        SurrogateModel m = build_surrogate(i, beams, stats, cfg, 1.0);
        m.penalty = 0.0;
        const CVec g = surrogate_gradient(m, beams[i], u);
        worst = std::max(worst, (project_ball(beams[i] + g, cfg.power(i)) - beams[i]).norm());
    }
    return worst;
}

} // namespace cobf
