#include "cobf/relaxed_bound.hpp"

#include <cmath>
#include <limits>

#include "cobf/error.hpp"

namespace cobf {

Vertex initial_vertex(const ChannelStats& stats, const NetworkConfig& cfg)
{
    Vertex v(cfg.num_users);
    for (int i = 0; i < cfg.num_users; ++i) {
        v(i) = std::log2(1.0 + std::log(1.0 / cfg.rho(i)) * cfg.power(i) *
                                   lambda_max(stats(i, i)) / cfg.noise(i));
    }
    return v;
}

RelaxedInstance make_relaxed_instance(const ChannelStats& stats, const NetworkConfig& cfg)
{
    cfg.validate();
    RelaxedInstance inst{stats, cfg, {}, initial_vertex(stats, cfg)};
    for (int i = 0; i < cfg.num_users; ++i) {
        inst.ratio.push_back((1.0 - cfg.rho(i)) / cfg.rho(i));
    }
    return inst;
}

BlockSdpProblem beta_problem(const RelaxedInstance& inst, const Vertex& v, double beta)
{
    const int kk = inst.cfg.num_users;
    const int nt = inst.cfg.num_antennas;
    if (v.size() != kk) {
        throw DimensionMismatch("beta_problem: vertex dimension differs from K");
    }
    BlockSdpProblem p;
    p.num_blocks = kk;
    p.block_size = nt;
    p.trace_cap = inst.cfg.power_budget;
    for (int i = 0; i < kk; ++i) {
        const double thr = std::expm1(beta * v(i) * std::log(2.0));
        if (!(thr > 0)) {
            continue;
        }
        std::vector<CMat> row;
        for (int k = 0; k < kk; ++k) {
            if (k == i) {
                row.push_back((inst.ratio[static_cast<std::size_t>(i)] / thr) * inst.stats(i, i));
            } else {
                row.push_back(-inst.stats(k, i));
            }
        }
        p.a.push_back(std::move(row));
        p.b.push_back(-inst.cfg.noise(i));
    }
    return p;
}

Sign relaxed_sign(const RelaxedInstance& inst, const Vertex& v, double beta)
{
    const BlockSdpProblem p = beta_problem(inst, v, beta);
    if (p.num_rows() == 0) {
        return Sign::Feasible;
    }
    SdpOptions o;
    o.sign_only = true;
    const SdpSolution s = solve_max_slack(p, o);
    if (s.t > 0) {
        return Sign::Feasible;
    }
    if (s.upper < 0) {
        return Sign::Infeasible;
    }
    return Sign::Unknown;
}

BetaResult solve_beta(const RelaxedInstance& inst, const Vertex& v, double tol, double cap)
{
    if ((v.array() < 0).any() || !(v.maxCoeff() > 0)) {
        throw InvalidArgument("solve_beta: direction must be nonnegative and nonzero");
    }
    if (cap <= 0) {
        cap = std::numeric_limits<double>::infinity();
        for (Eigen::Index i = 0; i < v.size(); ++i) {
            if (v(i) > 0) {
                cap = std::min(cap, inst.initial(i) / v(i));
            }
        }
    }
    BetaResult r;
    auto decide = [&](double beta) {
        ++r.sdp_solves;
        const Sign s = relaxed_sign(inst, v, beta);
        if (s == Sign::Unknown) {
            ++r.abstentions;
        }
        return s;
    };

    double lo = 0.0;
    double hi = cap;
    const Sign top = decide(hi);
    if (top == Sign::Feasible) {
        r.beta = r.beta_hi = cap;
        return r;
    }
    if (top == Sign::Unknown) {
        r.beta_hi = cap;
        r.bracket_closed = false;
    }
    while (hi - lo > tol * cap) {
        Sign s = Sign::Unknown;
        double mid = 0.5 * (lo + hi);
        for (const double frac : {0.5, 0.25, 0.75}) {
            mid = lo + frac * (hi - lo);
            s = decide(mid);
            if (s != Sign::Unknown) {
                break;
            }
        }
        if (s == Sign::Unknown) {
            r.bracket_closed = false;
            break;
        }
        if (s == Sign::Feasible) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    r.beta = lo;
    r.beta_hi = hi;
    return r;
}

BoundResult upper_bound(const RelaxedInstance& inst, const UtilitySpec& u,
                        const BoundOptions& opts)
{
    u.validate();
    const int kk = inst.cfg.num_users;
    if (static_cast<int>(u.weights.size()) != kk) {
        throw DimensionMismatch("upper_bound: utility weights do not match K");
    }
    BoundResult out;
    if (u.kind == UtilityKind::MaxMinLse) {
        // The relaxed region is normal, so its max-min point lies on the ray
        // through the weights; the LSE value never exceeds the max-min value.
        const Vertex alpha = Eigen::Map<const RVec>(u.weights.data(), kk);
        out.single = solve_beta(inst, alpha, opts.beta_tol);
        out.sdp_solves = out.single.sdp_solves;
        out.bound = out.single.beta_hi;
        std::vector<double> rates(u.weights);
        for (double& x : rates) {
            x *= out.single.beta;
        }
        out.lower = evaluate(u, rates);
        return out;
    }

    const Objective f = [&](const Vertex& x) {
        return evaluate(u, std::span<const double>(x.data(), static_cast<std::size_t>(x.size())));
    };
    const RayFunction ray = [&](const Vertex& v) {
        const BetaResult b = solve_beta(inst, v, opts.beta_tol, 1.0);
        out.sdp_solves += b.sdp_solves;
        return RayPoint{b.beta, b.beta_hi, b.beta * v};
    };
    PoaOptions po;
    po.delta = opts.delta;
    po.max_iterations = opts.max_iterations;
    out.poa = run_poa(f, ray, inst.initial, po);
    out.bound = out.poa.upper;
    out.lower = out.poa.lower;
    return out;
}

} // namespace cobf
