#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <thread>
#include <vector>

#include "cobf/dbsum.hpp"
#include "cobf/dwmmse.hpp"
#include "cobf/harness.hpp"
#include "cobf/implicit_rate.hpp"
#include "cobf/polyblock.hpp"
#include "cobf/relaxed_bound.hpp"
#include "cobf/sdp.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace cobf;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, auto... args)
{
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0)
{
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

int hardware_workers()
{
    return std::max(1, static_cast<int>(std::thread::hardware_concurrency()));
}

std::vector<double> uniform_weights(int k)
{
    return std::vector<double>(static_cast<std::size_t>(k), 1.0 / k);
}

double rate_of(double signal, const std::vector<double>& interf, double noise, double rho)
{
    return log2_1p(solve_xi(interf, noise, rho) * signal);
}

Outcome outage_fidelity()
{
    const auto t0 = std::chrono::steady_clock::now();
    Rng rng(101);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const std::int64_t samples = 100000;
    int within = 0;
    const int cases = 100;
    for (int c = 0; c < cases; ++c) {
        const int k = 2 + c % 3;
        const int nt = 1 + c % 4;
        const double eta = 0.2 + 0.8 * u(rng);
        const double snr = 10.0 * (c % 3);
        const auto in = testing::make_instance(derive_seed(101, static_cast<std::uint64_t>(c)), k, nt, eta, snr);
        BeamformerSet b = testing::random_feasible(rng, in.cfg);
        const int i = c % k;
        if (b[i].squaredNorm() < 1e-2) {
            b[i] *= 0.1 / b[i].norm();
        }
        const CertifiedRates cr = certified_rate(b, in.stats, in.cfg);
        const double rate = cr.rate[static_cast<std::size_t>(i)] * (0.5 + u(rng));
        const double p = outage_probability(rate, cr.powers(i, i), cr.powers.interference_at(i), in.cfg.noise(i));
        const double mc = monte_carlo_outage(in.stats, b, in.cfg, i, rate, samples,
                                             derive_seed(202, static_cast<std::uint64_t>(c)), hardware_workers());
        const double sd = std::sqrt(p * (1 - p) / static_cast<double>(samples));
        within += std::abs(mc - p) <= 3 * sd;
    }
    const double t = seconds_since(t0);
    return {within >= 95 && t <= 120.0, fmt("%d/%d cases within 3 sd, %.1f s", within, cases, t)};
}

Outcome implicit_function()
{
    Rng rng(102);
    std::uniform_real_distribution<double> u(0.0, 5.0);
    std::uniform_real_distribution<double> rho_d(0.5, 0.99);
    double worst_residual = 0;
    for (int t = 0; t < 100; ++t) {
        const std::vector<double> in{u(rng), u(rng), u(rng)};
        const double noise = 0.01 + u(rng);
        const double rho = rho_d(rng);
        worst_residual = std::max(worst_residual, std::abs(phi(solve_xi(in, noise, rho), in, noise, rho)));
    }
    double worst_fd = 0;
    int checked = 0;
    Rng brng(103);
    for (std::uint64_t seed = 1; checked < 100; ++seed) {
        const auto in = testing::make_instance(seed, 3, 3);
        const BeamformerSet w = testing::random_feasible(brng, in.cfg);
        const CrossPowers cp = cross_powers(w, in.stats);
        const int j = static_cast<int>(seed % 3);
        const int i = (j + 1 + static_cast<int>(seed / 3 % 2)) % 3;
        const double xi = solve_xi(cp.interference_at(j), in.cfg.noise(j), in.cfg.rho(j));
        const double d = rate_partial_derivative(cp, xi, in.cfg, j, i);
        const double h = 1e-6 * std::max(1.0, cp(i, j));
        CrossPowers up = cp, dn = cp;
        up.values(i, j) += h;
        dn.values(i, j) -= h;
        if (dn.values(i, j) < 0) {
            continue;
        }
        const double fd = (certified_rate(up, in.cfg).rate[static_cast<std::size_t>(j)] -
                           certified_rate(dn, in.cfg).rate[static_cast<std::size_t>(j)]) / (2 * h);
        worst_fd = std::max(worst_fd, testing::rel_err(d, fd));
        ++checked;
    }
    return {worst_residual <= 1e-9 && worst_fd <= 1e-4,
            fmt("max residual %.2e, max derivative rel err %.2e over %d points", worst_residual, worst_fd, checked)};
}

Outcome rate_monotonicity()
{
    const double slack = 1e-9;
    const double noise = 0.1, rho = 0.9;
    Rng rng(104);
    std::uniform_real_distribution<double> u(0.0, 4.0);
    int inc_s = 0, cav_s = 0, dec_i = 0, vex_i = 0, dec_xi = 0, inc_prod = 0;
    for (int t = 0; t < 1000; ++t) {
        const std::vector<double> in{u(rng), u(rng)};
        double a = u(rng), b = u(rng);
        if (a > b) {
            std::swap(a, b);
        }
        const double ra = rate_of(a, in, noise, rho), rb = rate_of(b, in, noise, rho);
        inc_s += ra > rb + slack;
        cav_s += rate_of(0.5 * (a + b), in, noise, rho) < 0.5 * (ra + rb) - slack;
        const double s = 0.05 + u(rng);
        auto with = [&](double x) {
            std::vector<double> v = in;
            v[0] = x;
            return rate_of(s, v, noise, rho);
        };
        const double fa = with(a), fb = with(b);
        dec_i += fb > fa + slack;
        vex_i += with(0.5 * (a + b)) > 0.5 * (fa + fb) + slack;

        const double sn = std::pow(10.0, -2.0 + 2.0 * u(rng) / 4.0);
        const double lo = 1e-3 + u(rng), hi = lo * (1.01 + u(rng));
        std::vector<double> vl = in, vh = in;
        vl.push_back(lo);
        vh.push_back(hi);
        const double xl = solve_xi(vl, sn, rho), xh = solve_xi(vh, sn, rho);
        dec_xi += !(xh < xl + slack);
        inc_prod += !(hi * xh > lo * xl - slack);
    }
    const int total = inc_s + cav_s + dec_i + vex_i + dec_xi + inc_prod;
    return {total == 0, fmt("violations: signal inc %d, concave %d; interference dec %d, convex %d; "
                            "xi dec %d, I*xi inc %d (1000 points each)",
                            inc_s, cav_s, dec_i, vex_i, dec_xi, inc_prod)};
}

Outcome dbsum_ascent()
{
    int runs = 0, bad_mono = 0, bad_term = 0, bad_feas = 0;
    for (std::uint64_t n = 0; n < 100; ++n) {
        const int k = 2 + static_cast<int>(n % 3);
        const int nt = n / 3 % 2 ? 4 : 2;
        const auto in = testing::make_instance(derive_seed(400, n), k, nt);
        const std::vector<double> w = uniform_weights(k);
        for (const UtilitySpec& u : {UtilitySpec::wsr(w), UtilitySpec::pf(w), UtilitySpec::hm(w),
                                     UtilitySpec::mmf_lse(w)}) {
            const DbsumResult r = run_dbsum(in.stats, in.cfg, u, BeamformerSet::random_unit(k, nt, n));
            ++runs;
            bad_mono += !testing::nondecreasing(r.trace, 1e-9);
            bad_term += !r.converged || r.block_updates > 200 * k;
            bad_feas += !r.beams.feasible(in.cfg);
        }
    }
    return {bad_mono + bad_term + bad_feas == 0,
            fmt("%d runs: %d non-monotone, %d not terminated within 200K, %d infeasible", runs, bad_mono,
                bad_term, bad_feas)};
}

Outcome dwmmse_ascent()
{
    int bad_mono = 0, bad_det = 0, bad_conv = 0;
    for (std::uint64_t n = 0; n < 100; ++n) {
        const int k = 2 + static_cast<int>(n % 4);
        const int nt = n / 4 % 2 ? 4 : 2;
        const auto in = testing::make_instance(derive_seed(500, n), k, nt);
        const std::vector<double> w(static_cast<std::size_t>(k), 1.0);
        const BeamformerSet init = BeamformerSet::random_unit(k, nt, n);
        const DwmmseResult ref = run_dwmmse(in.stats, in.cfg, w, init);
        bad_mono += !testing::nondecreasing(ref.trace, 1e-9);
        bad_conv += !ref.converged;
        DwmmseOptions opts;
        opts.parallel_width = k;
        for (int i = k - 1; i >= 0; --i) {
            opts.schedule.push_back(i);
        }
        std::rotate(opts.schedule.begin(), opts.schedule.begin() + static_cast<long>(n % static_cast<std::uint64_t>(k)),
                    opts.schedule.end());
        const DwmmseResult r = run_dwmmse(in.stats, in.cfg, w, init, opts);
        bool same = r.iterations == ref.iterations && r.utility == ref.utility;
        for (int i = 0; i < k && same; ++i) {
            same = r.beams[i] == ref.beams[i];
        }
        bad_det += !same;
    }
    return {bad_mono + bad_det + bad_conv == 0,
            fmt("100 instances: %d non-monotone, %d not converged, %d differ under permuted schedule",
                bad_mono, bad_conv, bad_det)};
}

Outcome single_user_optimum()
{
    double worst_db = 0, worst_dw = 0;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const int nt = 1 + static_cast<int>(seed % 4);
        const auto in = testing::make_instance(derive_seed(600, seed), 1, nt, 1.0, 5.0 * static_cast<double>(seed % 4));
        const double expect = std::log2(1.0 - std::log(in.cfg.rho(0)) * in.cfg.power(0) *
                                                  lambda_max(in.stats(0, 0)) / in.cfg.noise(0));
        DbsumOptions db;
        db.rel_tol = 1e-10;
        DwmmseOptions dw;
        dw.rel_tol = 1e-12;
        const BeamformerSet init = BeamformerSet::random_unit(1, nt, seed);
        worst_db = std::max(worst_db,
                            testing::rel_err(run_dbsum(in.stats, in.cfg, UtilitySpec::wsr({1.0}), init, db).utility, expect));
        worst_dw = std::max(worst_dw, testing::rel_err(run_dwmmse(in.stats, in.cfg, {1.0}, init, dw).utility, expect));
    }
    return {worst_db <= 1e-4 && worst_dw <= 1e-4,
            fmt("max rel err dbsum %.2e, dwmmse %.2e over 10 instances", worst_db, worst_dw)};
}

Outcome surrogate_sandwiches()
{
    Rng rng(107);
    std::uniform_real_distribution<double> wd(0.2, 1.0);
    long checks = 0, violations = 0;
    auto check = [&](bool ok) {
        ++checks;
        violations += !ok;
    };
    for (std::uint64_t seed = 1; checks < 10000; ++seed) {
        const int k = 2 + static_cast<int>(seed % 3);
        const auto in = testing::make_instance(derive_seed(700, seed), k, 3);
        const BeamformerSet base = testing::random_feasible(rng, in.cfg);
        const CertifiedRates cb = certified_rate(base, in.stats, in.cfg);
        std::vector<double> w;
        for (int i = 0; i < k; ++i) {
            w.push_back(wd(rng));
        }
        const WmmseState s = compute_state(base, in.stats, in.cfg, w);
        const UtilitySpec wsr = UtilitySpec::wsr(w);
        const double u0 = evaluate(wsr, cb.rate);
        check(std::abs(wsr_lower_bound(s, base, in.stats, in.cfg, w) - u0) <= 1e-9 * (1 + std::abs(u0)));
        for (int i = 0; i < k; ++i) {
            const auto ui = static_cast<std::size_t>(i);
            check(std::abs(zeta(s, base, in.stats, in.cfg, i) - cb.xi[ui]) <= 1e-9 * (1 + cb.xi[ui]));
            const SurrogateModel m = build_surrogate(i, base, in.stats, in.cfg, 0.05);
            std::vector<double> r;
            check(surrogate_rates(m, base[i], r));
            for (int j = 0; j < k; ++j) {
                const auto uj = static_cast<std::size_t>(j);
                check(std::abs(r[uj] - cb.rate[uj]) <= 1e-9 * (1 + cb.rate[uj]));
            }
            for (int t = 0; t < 20; ++t) {
                BeamformerSet x = base;
                x[i] = testing::random_feasible(rng, in.cfg)[i];
                const auto truth = certified_rate(x, in.stats, in.cfg).rate;
                if (surrogate_rates(m, x[i], r)) {
                    for (int j = 0; j < k; ++j) {
                        check(r[static_cast<std::size_t>(j)] <= truth[static_cast<std::size_t>(j)] + 1e-9);
                    }
                }
            }
        }
        for (int t = 0; t < 20; ++t) {
            const BeamformerSet x = testing::random_feasible(rng, in.cfg);
            const CertifiedRates cx = certified_rate(x, in.stats, in.cfg);
            for (int i = 0; i < k; ++i) {
                check(zeta(s, x, in.stats, in.cfg, i) <= cx.xi[static_cast<std::size_t>(i)] + 1e-9);
            }
            const double lb = wsr_lower_bound(s, x, in.stats, in.cfg, w);
            const double mid = wsr_zeta_bound(s, x, in.stats, in.cfg, w);
            check(lb <= mid + 1e-9);
            check(mid <= evaluate(wsr, cx.rate) + 1e-9);
        }
    }
    return {violations == 0, fmt("%ld violations in %ld checks", violations, checks)};
}

Outcome poa_toy()
{
    const Objective sum = [](const Vertex& x) { return x.sum(); };
    const MembershipOracle ball = [](const Vertex& x) { return 1.0 - x.squaredNorm(); };
    const PoaResult r = run_poa(sum, ball, Vertex::Ones(2), {1e-3, 200, 1e-9});
    const double opt = std::sqrt(2.0);
    bool traces = true;
    for (std::size_t n = 0; n < r.trace.size(); ++n) {
        const auto& it = r.trace[n];
        traces = traces && it.lower <= opt + 1e-12 && it.upper >= opt - 1e-12;
        if (n > 0) {
            traces = traces && it.upper <= r.trace[n - 1].upper && it.lower >= r.trace[n - 1].lower;
        }
    }
    const bool ok = r.status == PoaStatus::Converged && r.trace.size() <= 200 && r.upper - r.lower <= 1e-3 &&
                    std::abs(r.lower - opt) <= 1e-3 && traces;
    return {ok, fmt("lower %.6f upper %.6f after %zu iterations, traces %s", r.lower, r.upper, r.trace.size(),
                    traces ? "monotone and bracketing" : "violated")};
}

Outcome relaxation_validity()
{
    const auto t0 = std::chrono::steady_clock::now();
    int dominated = 0, compared = 0, failed_checks = 0;
    auto tally = [&](const std::vector<ResultRecord>& rs) {
        for (const auto& r : rs) {
            failed_checks += !r.checks_passed;
            if (r.algo != "poa" && !std::isnan(r.bound)) {
                ++compared;
                dominated += r.value <= r.bound + 1e-9 * (1 + std::abs(r.bound));
            }
        }
    };
    auto base = [](int k, int nt, double eta) {
        ExperimentConfig c;
        c.num_users = k;
        c.num_antennas = nt;
        c.eta = eta;
        c.snr_db = {10.0};
        c.record_timing = false;
        c.workers = hardware_workers();
        return c;
    };

    double pf_sum = 0;
    int pf_n = 0;
    for (double eta : {0.2, 1.0}) {
        ExperimentConfig c = base(2, 4, eta);
        c.utility = UtilitySpec::pf({0.5, 0.5});
        c.trials = 10;
        c.seed = 900 + static_cast<std::uint64_t>(eta * 10);
        c.algorithms = {"dbsum", "poa"};
        const auto rs = run_experiment(c);
        tally(rs);
        for (const auto& r : rs) {
            if (r.algo == "dbsum") {
                pf_sum += r.gap_ratio;
                ++pf_n;
            }
        }
    }
    for (int k : {2, 3}) {
        ExperimentConfig c = base(k, 2, 0.5);
        c.utility = UtilitySpec::wsr(uniform_weights(k));
        c.trials = k == 2 ? 5 : 3;
        c.seed = 910 + static_cast<std::uint64_t>(k);
        c.algorithms = {"dbsum", "dwmmse", "poa"};
        tally(run_experiment(c));
    }
    const double sweep_s = seconds_since(t0);

    ExperimentConfig m = base(4, 4, 0.5);
    m.utility = UtilitySpec::mmf_lse(uniform_weights(4), 5.0);
    m.trials = 10;
    m.seed = 920;
    m.algorithms = {"dbsum", "poa"};
    double mmf_sum = 0, mmf_min = 1e300;
    int mmf_n = 0;
    for (const auto& r : run_experiment(m)) {
        failed_checks += !r.checks_passed;
        if (r.algo == "dbsum") {
            mmf_sum += r.gap_ratio;
            mmf_min = std::min(mmf_min, r.gap_ratio);
            ++mmf_n;
        }
    }
    const double pf_mean = pf_sum / pf_n, mmf_mean = mmf_sum / mmf_n;
    const bool ok = dominated == compared && failed_checks == 0 && pf_n == 20 && pf_mean >= 0.9 &&
                    mmf_mean >= 0.8 && sweep_s <= 1800.0;
    return {ok, fmt("bound dominates %d/%d; PF gap ratio mean %.4f over %d; K=4 max-min ratio mean %.4f "
                    "(min %.4f); %d failed checks; K<=3 sweep %.0f s",
                    dominated, compared, pf_mean, pf_n, mmf_mean, mmf_min, failed_checks, sweep_s)};
}

Outcome sdp_oracle()
{
    Rng rng(110);
    std::uniform_real_distribution<double> bd(0.05, 1.5);
    int match = 0, kkt = 0, ambiguous = 0, feasible = 0;
    const int pairs = 50;
    for (int n = 0; n < pairs; ++n) {
        const auto in = testing::make_instance(derive_seed(1000, static_cast<std::uint64_t>(n)), 2, 1,
                                               0.2 + 0.016 * n, 10.0);
        const RelaxedInstance inst = make_relaxed_instance(in.stats, in.cfg);
        const double beta = bd(rng);
        const BlockSdpProblem p = beta_problem(inst, inst.initial, beta);
        const double step = 1e-3;
        double grid = testing::scalar_grid_max(p, step);
        double lip = 0;
        for (const auto& row : p.a) {
            lip = std::max(lip, std::abs(row[0](0, 0).real()) + std::abs(row[1](0, 0).real()));
        }
        if (std::abs(grid) <= lip * step) {
            ++ambiguous;
            grid = testing::scalar_lp_vertex_max(p);
        }
        const bool oracle = grid >= 0;
        feasible += oracle;
        const Sign s = relaxed_sign(inst, inst.initial, beta);
        match += s != Sign::Unknown && (s == Sign::Feasible) == oracle;
        const SdpSolution full = solve_max_slack(p);
        kkt += full.status == SdpStatus::Optimal && verify_kkt(p, full, 1e-6) && (full.t >= 0) == oracle;
    }
    return {match == pairs && kkt == pairs,
            fmt("sign matches %d/%d (%d feasible, %d settled by vertex enumeration), KKT at 1e-6 %d/%d", match,
                pairs, feasible, ambiguous, kkt, pairs)};
}

Outcome wsr_agreement()
{
    double rel_sum = 0;
    for (std::uint64_t n = 0; n < 50; ++n) {
        const auto in = testing::make_instance(derive_seed(1100, n), 4, 4, 0.5, 10.0);
        const std::vector<double> w(4, 1.0);
        const BeamformerSet init = BeamformerSet::random_unit(4, 4, derive_seed(1101, n));
        const double db = run_dbsum(in.stats, in.cfg, UtilitySpec::wsr(w), init).utility;
        const double dw = run_dwmmse(in.stats, in.cfg, w, init).utility;
        rel_sum += std::abs(dw - db) / db;
    }
    const double mean_rel = rel_sum / 50;
    std::string tdma;
    bool above = true;
    for (int k : {3, 4, 5}) {
        double dw_sum = 0, td_sum = 0;
        for (std::uint64_t n = 0; n < 20; ++n) {
            const auto in = testing::make_instance(derive_seed(1200 + static_cast<std::uint64_t>(k), n), k, 4, 0.5, 10.0);
            const std::vector<double> w(static_cast<std::size_t>(k), 1.0);
            dw_sum += run_dwmmse(in.stats, in.cfg, w, BeamformerSet::random_unit(k, 4, n)).utility;
            td_sum += tdma_baseline(in.stats, in.cfg);
        }
        above = above && dw_sum >= td_sum;
        tdma += fmt(" K=%d %.3f vs %.3f;", k, dw_sum / 20, td_sum / 20);
    }
    return {mean_rel <= 0.05 && above,
            fmt("mean rel diff %.4f over 50; dwmmse vs tdma mean sum rate:%s", mean_rel, tdma.c_str())};
}

Outcome message_accounting()
{
    int runs = 0, bad = 0;
    for (int k = 1; k <= 5; ++k) {
        for (std::uint64_t n = 0; n < 4; ++n) {
            const auto in = testing::make_instance(derive_seed(1300 + static_cast<std::uint64_t>(k), n), k, 3);
            const BeamformerSet init = BeamformerSet::random_unit(k, 3, n);
            const long kk = k;
            const DbsumResult db = run_dbsum(in.stats, in.cfg, UtilitySpec::pf(uniform_weights(k)), init);
            bool ok = db.initial_messages == kk * (kk - 1);
            long total = db.initial_messages;
            for (std::size_t t = 1; t < db.trace.size(); ++t) {
                ok = ok && db.trace[t].messages == 3 * (kk - 1);
                total += db.trace[t].messages;
            }
            ok = ok && db.messages == total && db.messages == kk * (kk - 1) + 3 * (kk - 1) * db.block_updates;
            const DwmmseResult dw = run_dwmmse(in.stats, in.cfg, std::vector<double>(static_cast<std::size_t>(k), 1.0), init);
            ok = ok && dw.initial_messages == 2 * kk * (kk - 1);
            for (std::size_t t = 1; t < dw.trace.size(); ++t) {
                ok = ok && dw.trace[t].messages == 2 * kk * (kk - 1);
            }
            ok = ok && dw.messages == 2 * kk * (kk - 1) * (dw.iterations + 1);
            runs += 2;
            bad += !ok;
        }
    }
    return {bad == 0, fmt("%d runs over K=1..5, %d with counts off the closed forms", runs, bad)};
}

} // namespace

int main()
{
    const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
        {"outage formula fidelity", outage_fidelity},
        {"implicit function correctness", implicit_function},
        {"rate monotonicity and curvature", rate_monotonicity},
        {"dbsum ascent", dbsum_ascent},
        {"dwmmse ascent and jacobi determinism", dwmmse_ascent},
        {"single-user analytic optimum", single_user_optimum},
        {"surrogate sandwiches", surrogate_sandwiches},
        {"poa engine", poa_toy},
        {"relaxation validity", relaxation_validity},
        {"sdp oracle", sdp_oracle},
        {"dwmmse vs dbsum agreement", wsr_agreement},
        {"message accounting", message_accounting},
    };
    int failed = 0;
    for (std::size_t n = 0; n < criteria.size(); ++n) {
        Outcome o;
        try {
            o = criteria[n].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failed += !o.pass;
        std::printf("AC%-2zu %s  %s: %s\n", n + 1, o.pass ? "PASS" : "FAIL", criteria[n].first, o.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("%zu/%zu criteria passed\n", criteria.size() - static_cast<std::size_t>(failed), criteria.size());
    return failed == 0 ? 0 : 1;
}
