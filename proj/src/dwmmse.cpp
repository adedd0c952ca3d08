#include "cobf/dwmmse.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <thread>

#include "cobf/dbsum.hpp"
#include "cobf/error.hpp"
#include "cobf/utility.hpp"

namespace cobf {

namespace {

constexpr double kLn2 = 0.69314718055994530942;

using Clock = std::chrono::steady_clock;

// sigma_i^2 + sum_{j != i} w_j^H Q̄_ji w_j
double effective_noise(const WmmseState& s, const BeamformerSet& beams, const ChannelStats& stats,
                       const NetworkConfig& cfg, int i)
{
    double v = cfg.noise(i);
    for (int j = 0; j < cfg.num_users; ++j) {
        if (j != i) {
            v += s.cross_scale(j, i) * std::max(0.0, quad_form(stats(j, i), beams[j]));
        }
    }
    return v;
}

} // namespace

WmmseState compute_state(const BeamformerSet& base, const ChannelStats& stats,
                         const NetworkConfig& cfg, const std::vector<double>& weights)
{
    const int kk = cfg.num_users;
    if (static_cast<int>(weights.size()) != kk) {
        throw DimensionMismatch("compute_state: weights do not match K");
    }
    WmmseState s;
    s.base_powers = cross_powers(base, stats);
    const CrossPowers& cp = s.base_powers;
    const auto uk = static_cast<std::size_t>(kk);
    s.xi.resize(uk);
    s.gamma.resize(uk);
    s.q_bar_sqrt.resize(uk);
    s.y.resize(uk);
    s.base_mse.resize(uk);
    s.eta.resize(uk);
    s.cross_scale = RMat::Zero(kk, kk);
    s.theta = RMat::Zero(kk, kk);

    for (int i = 0; i < kk; ++i) {
        if (!(cp(i, i) > 0)) {
            throw DegenerateBeamformer(i, "compute_state: user has zero signal power");
        }
        const auto ui = static_cast<std::size_t>(i);
        const double xi = solve_xi(cp.interference_at(i), cfg.noise(i), cfg.rho(i));
        double gamma = cfg.noise(i) * xi;
        for (int j = 0; j < kk; ++j) {
            if (j != i) {
                const double t = cp(j, i) * xi;
                gamma += t / (1.0 + t);
                s.cross_scale(j, i) = 1.0 / (1.0 + t);
            }
        }
        s.xi[ui] = xi;
        s.gamma[ui] = gamma;
        s.q_bar_sqrt[ui] = psd_sqrt(gamma * stats(i, i));
    }
    for (int i = 0; i < kk; ++i) {
        const auto ui = static_cast<std::size_t>(i);
        const double n_eff = effective_noise(s, base, stats, cfg, i);
        s.y[ui] = s.q_bar_sqrt[ui] * base[i] / (n_eff + s.gamma[ui] * cp(i, i));
        s.base_mse[ui] = user_mse(s, base, stats, cfg, i);
        s.eta[ui] = weights[ui] / (kLn2 * s.base_mse[ui]);
    }
    for (int j = 0; j < kk; ++j) {
        const auto uj = static_cast<std::size_t>(j);
        const double yy = s.y[uj].squaredNorm();
        for (int i = 0; i < kk; ++i) {
            if (i != j) {
                s.theta(i, j) = s.eta[uj] * yy * s.cross_scale(i, j);
            }
        }
    }
    return s;
}

double zeta(const WmmseState& s, const BeamformerSet& beams, const ChannelStats& stats,
            const NetworkConfig& cfg, int i)
{
    return s.gamma[static_cast<std::size_t>(i)] / effective_noise(s, beams, stats, cfg, i);
}

double wsr_zeta_bound(const WmmseState& s, const BeamformerSet& beams, const ChannelStats& stats,
                      const NetworkConfig& cfg, const std::vector<double>& weights)
{
    double v = 0.0;
    for (int i = 0; i < cfg.num_users; ++i) {
        const double sig = std::max(0.0, quad_form(stats(i, i), beams[i]));
        v += weights[static_cast<std::size_t>(i)] *
             std::log2(1.0 + zeta(s, beams, stats, cfg, i) * sig);
    }
    return v;
}

double user_mse(const WmmseState& s, const BeamformerSet& beams, const ChannelStats& stats,
                const NetworkConfig& cfg, int i)
{
    const auto ui = static_cast<std::size_t>(i);
    const cplx g = s.y[ui].dot(s.q_bar_sqrt[ui] * beams[i]);
    return std::norm(1.0 - g) + effective_noise(s, beams, stats, cfg, i) * s.y[ui].squaredNorm();
}

double wsr_lower_bound_term(const WmmseState& s, const BeamformerSet& beams,
                            const ChannelStats& stats, const NetworkConfig& cfg,
                            const std::vector<double>& weights, int i)
{
    const auto ui = static_cast<std::size_t>(i);
    const double e_bar = s.base_mse[ui];
    const double e = user_mse(s, beams, stats, cfg, i);
    return -weights[ui] * std::log2(e_bar) + weights[ui] / kLn2 * (1.0 - e / e_bar);
}

double wsr_lower_bound(const WmmseState& s, const BeamformerSet& beams, const ChannelStats& stats,
                       const NetworkConfig& cfg, const std::vector<double>& weights)
{
    double v = 0.0;
    for (int i = 0; i < cfg.num_users; ++i) {
        v += wsr_lower_bound_term(s, beams, stats, cfg, weights, i);
    }
    return v;
}

SubproblemSolution solve_ball_quadratic(const CMat& a, const CVec& b, double power_budget,
                                        double tol)
{
    SubproblemSolution out;
    const double bn = b.norm();
    if (bn == 0.0) {
        out.w = CVec::Zero(b.size());
        return out;
    }
    Eigen::SelfAdjointEigenSolver<CMat> es(0.5 * (a + a.adjoint()));
    const RVec lam = es.eigenvalues().cwiseMax(0.0);
    const CVec c = es.eigenvectors().adjoint() * b;
    const double lam_scale = std::max(lam.maxCoeff(), 1e-300);

    auto norm2 = [&](double mu) {
        double v = 0.0;
        for (Eigen::Index k = 0; k < lam.size(); ++k) {
            v += std::norm(c(k)) / ((lam(k) + mu) * (lam(k) + mu));
        }
        return v;
    };
    auto solution = [&](double mu) {
        CVec z(lam.size());
        for (Eigen::Index k = 0; k < lam.size(); ++k) {
            const double d = lam(k) + mu;
            z(k) = d > 0 ? c(k) / d : cplx(0.0);
        }
        return CVec(es.eigenvectors() * z);
    };

    // mu = 0 is admissible when b lies in range(A) and the solution fits the ball
    bool bounded = true;
    for (Eigen::Index k = 0; k < lam.size(); ++k) {
        if (lam(k) <= 1e-14 * lam_scale && std::abs(c(k)) > 1e-14 * bn) {
            bounded = false;
        }
    }
    if (bounded) {
        const CVec w0 = solution(0.0);
        if (w0.squaredNorm() <= power_budget) {
            out.w = w0;
            return out;
        }
    }

    double lo = 0.0;
    double hi = bn / std::sqrt(power_budget);
    int guard = 0;
    while (norm2(hi) > power_budget) {
        hi *= 2.0;
        if (++guard > 200) {
            throw SolverFailure("solve_ball_quadratic: multiplier bracket not found");
        }
    }
    while (hi - lo > tol * hi) {
        const double mid = 0.5 * (lo + hi);
        if (norm2(mid) > power_budget) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    out.mu = hi;
    out.w = solution(hi);
    return out;
}

void user_quadratic(const WmmseState& s, const ChannelStats& stats, int i, CMat& a, CVec& b)
{
    const auto ui = static_cast<std::size_t>(i);
    const CVec v = s.q_bar_sqrt[ui] * s.y[ui]; // (ȳ^H Q̄^{1/2})^H, square root is Hermitian
    const double eta = s.eta[ui];
    a = eta * v * v.adjoint();
    for (Eigen::Index j = 0; j < s.theta.cols(); ++j) {
        if (j != i) {
            a += s.theta(i, j) * stats(i, static_cast<int>(j));
        }
    }
    b = eta * v;
}

SubproblemSolution solve_user_subproblem(const WmmseState& s, const ChannelStats& stats, int i,
                                         double power_budget, double tol)
{
    CMat a;
    CVec b;
    user_quadratic(s, stats, i, a, b);
    return solve_ball_quadratic(a, b, power_budget, tol);
}

DwmmseResult run_dwmmse(const ChannelStats& stats, const NetworkConfig& cfg,
                        const std::vector<double>& weights, const BeamformerSet& init,
                        const DwmmseOptions& opts)
{
    const auto t0 = Clock::now();
    cfg.validate();
    const int kk = cfg.num_users;
    if (!init.feasible(cfg)) {
        throw InvalidArgument("run_dwmmse: initial beamformers violate the power budget");
    }
    std::vector<int> order = opts.schedule;
    if (order.empty()) {
        for (int i = 0; i < kk; ++i) {
            order.push_back(i);
        }
    }
    std::vector<int> sorted = order;
    std::sort(sorted.begin(), sorted.end());
    for (int i = 0; i < kk; ++i) {
        if (static_cast<int>(sorted.size()) != kk || sorted[static_cast<std::size_t>(i)] != i) {
            throw InvalidArgument("run_dwmmse: schedule must be a permutation of 0..K-1");
        }
    }
    const UtilitySpec u = UtilitySpec::wsr(weights);

    DwmmseResult out;
    out.beams = init;
    repair_degenerate(out.beams, stats, cfg);

    // cross powers and theta for the initial point
    const long per_iter = 2L * kk * (kk - 1);
    out.initial_messages = per_iter;
    out.messages = per_iter;
    CertifiedRates cr = certified_rate(out.beams, stats, cfg);
    double prev = evaluate(u, cr.rate);
    out.trace.push_back({0, -1, prev, 0.0, per_iter});

    const int width = std::clamp(opts.parallel_width, 1, kk);
    for (int n = 1; n <= opts.max_iterations; ++n) {
        const WmmseState s = compute_state(out.beams, stats, cfg, weights);
        BeamformerSet next = out.beams;
        auto solve = [&](int i) {
            next[i] = solve_user_subproblem(s, stats, i, cfg.power(i), opts.dual_tol).w;
        };
        if (width == 1) {
            for (int i : order) {
                solve(i);
            }
        } else {
            std::atomic<int> cursor{0};
            std::vector<std::thread> pool;
            for (int t = 0; t < width; ++t) {
                pool.emplace_back([&] {
                    for (int p = cursor++; p < kk; p = cursor++) {
                        solve(order[static_cast<std::size_t>(p)]);
                    }
                });
            }
            for (auto& th : pool) {
                th.join();
            }
        }
        out.beams = std::move(next);
        cr = certified_rate(out.beams, stats, cfg);
        for (int i = 0; i < kk; ++i) {
            if (!(cr.powers(i, i) > 0)) {
                throw DegenerateIterate(i, out.beams);
            }
        }
        const double val = evaluate(u, cr.rate);
        out.messages += per_iter;
        out.iterations = n;
        out.trace.push_back(
            {n, -1, val, std::chrono::duration<double>(Clock::now() - t0).count(), per_iter});
        if (std::abs(val - prev) < opts.rel_tol * std::abs(prev)) {
            out.converged = true;
            prev = val;
            break;
        }
        prev = val;
    }
    out.rates = cr.rate;
    out.utility = prev;
    return out;
}

} // namespace cobf
