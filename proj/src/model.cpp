#include "cobf/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <thread>

#include "cobf/error.hpp"

namespace cobf {

namespace {

constexpr double kClampTol = 1e-12;

void check_user(const NetworkConfig& cfg, int i)
{
    if (i < 0 || i >= cfg.num_users) {
        throw InvalidArgument("user index out of range");
    }
}

} // namespace

NetworkConfig NetworkConfig::uniform(int num_users, int num_antennas, double noise_power,
                                     double power_budget, double outage_tolerance)
{
    NetworkConfig cfg;
    cfg.num_users = num_users;
    cfg.num_antennas = num_antennas;
    const auto k = static_cast<std::size_t>(num_users);
    cfg.noise_power.assign(k, noise_power);
    cfg.power_budget.assign(k, power_budget);
    cfg.outage_tolerance.assign(k, outage_tolerance);
    cfg.success_target.assign(k, 1.0 - outage_tolerance);
    cfg.priority_weight.assign(k, 1.0);
    cfg.validate();
    return cfg;
}

double NetworkConfig::noise_from_snr_db(double snr_db)
{
    return std::pow(10.0, -snr_db / 10.0);
}

void NetworkConfig::set_outage_tolerance(int i, double eps)
{
    const auto u = static_cast<std::size_t>(i);
    outage_tolerance.at(u) = eps;
    success_target.at(u) = 1.0 - eps;
}

void NetworkConfig::validate() const
{
    if (num_users < 1 || num_antennas < 1) {
        throw InvalidArgument("NetworkConfig: K and Nt must be positive");
    }
    const auto k = static_cast<std::size_t>(num_users);
    if (noise_power.size() != k || power_budget.size() != k || outage_tolerance.size() != k ||
        success_target.size() != k || priority_weight.size() != k) {
        throw DimensionMismatch("NetworkConfig: per-user arrays must have length K");
    }
    for (std::size_t i = 0; i < k; ++i) {
        if (!(noise_power[i] > 0) || !(power_budget[i] > 0) || !(priority_weight[i] > 0)) {
            throw InvalidArgument("NetworkConfig: noise, power and weights must be positive");
        }
        if (!(outage_tolerance[i] > 0 && outage_tolerance[i] < 1)) {
            throw InvalidArgument("NetworkConfig: outage tolerance must lie in (0,1)");
        }
        if (success_target[i] != 1.0 - outage_tolerance[i]) {
            throw InvalidArgument("NetworkConfig: success target must equal 1 - eps");
        }
    }
}

ChannelStats::ChannelStats(int num_users, int num_antennas)
    : k_(num_users), nt_(num_antennas),
      q_(static_cast<std::size_t>(num_users * num_users), CMat::Zero(num_antennas, num_antennas))
{
}

void ChannelStats::validate() const
{
    for (int k = 0; k < k_; ++k) {
        for (int i = 0; i < k_; ++i) {
            const CMat& q = (*this)(k, i);
            if (q.rows() != nt_ || q.cols() != nt_) {
                throw DimensionMismatch("ChannelStats: covariance has wrong size");
            }
            if (!q.allFinite()) {
                throw CorruptedStats("ChannelStats: non-finite covariance entry");
            }
            const double scale = std::max(q.norm(), 1e-300);
            if ((q - q.adjoint()).norm() > 1e-12 * scale) {
                throw CorruptedStats("ChannelStats: covariance is not Hermitian");
            }
            Eigen::SelfAdjointEigenSolver<CMat> es(q, Eigen::EigenvaluesOnly);
            const double tr = q.trace().real();
            if (es.eigenvalues().minCoeff() < -1e-10 * (tr / nt_)) {
                throw CorruptedStats("ChannelStats: covariance is not PSD");
            }
            if (k == i && !(es.eigenvalues().maxCoeff() > 0)) {
                throw CorruptedStats("ChannelStats: direct-link covariance is zero");
            }
        }
    }
}

bool ChannelStats::operator==(const ChannelStats& other) const
{
    if (k_ != other.k_ || nt_ != other.nt_) {
        return false;
    }
    for (std::size_t n = 0; n < q_.size(); ++n) {
        if (q_[n] != other.q_[n]) {
            return false;
        }
    }
    return true;
}

ChannelRealization::ChannelRealization(int num_users, int num_antennas)
    : k_(num_users),
      h_(static_cast<std::size_t>(num_users * num_users), CVec::Zero(num_antennas))
{
}

bool BeamformerSet::feasible(const NetworkConfig& cfg) const
{
    if (size() != cfg.num_users) {
        return false;
    }
    for (int i = 0; i < size(); ++i) {
        if (!(w[static_cast<std::size_t>(i)].squaredNorm() <= cfg.power(i) * (1.0 + 1e-9))) {
            return false;
        }
    }
    return true;
}

BeamformerSet BeamformerSet::random_unit(int num_users, int num_antennas, std::uint64_t seed)
{
    Rng rng(seed);
    BeamformerSet b;
    for (int i = 0; i < num_users; ++i) {
        CVec v = random_complex_normal(rng, num_antennas);
        b.w.push_back(v / v.norm());
    }
    return b;
}

std::vector<double> CrossPowers::interference_at(int i) const
{
    std::vector<double> out;
    for (int k = 0; k < num_users(); ++k) {
        if (k != i) {
            out.push_back(values(k, i));
        }
    }
    return out;
}

ChannelStats generate_instance(std::uint64_t seed, const NetworkConfig& cfg, double eta)
{
    if (!(eta > 0 && eta <= 1)) {
        throw InvalidArgument("generate_instance: eta must lie in (0,1]");
    }
    const int n = cfg.num_antennas;
    ChannelStats stats(cfg.num_users, n);
    Rng rng(seed);
    ComplexNormal draw;
    for (int k = 0; k < cfg.num_users; ++k) {
        for (int i = 0; i < cfg.num_users; ++i) {
            CMat g(n, n);
            for (int a = 0; a < n; ++a) {
                for (int b = 0; b < n; ++b) {
                    g(a, b) = draw(rng);
                }
            }
            CMat q = g * g.adjoint();
            q = 0.5 * (q + q.adjoint());
            const double target = (k == i) ? 1.0 : eta;
            q *= target / lambda_max(q);
            stats(k, i) = q;
        }
    }
    return stats;
}

ChannelRealization sample_channels(const ChannelStats& stats, std::uint64_t seed)
{
    const int kk = stats.num_users();
    const int n = stats.num_antennas();
    ChannelRealization real(kk, n);
    Rng rng(seed);
    for (int k = 0; k < kk; ++k) {
        for (int i = 0; i < kk; ++i) {
            const CMat& q = stats(k, i);
            Eigen::SelfAdjointEigenSolver<CMat> es(q);
            const double tr = q.trace().real();
            if (es.eigenvalues().minCoeff() < -1e-10 * std::max(tr / n, 1e-300)) {
                throw CorruptedStats("sample_channels: covariance is not PSD");
            }
            RVec s = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
            CVec z = random_complex_normal(rng, n);
            real(k, i) = es.eigenvectors() * (s.cast<cplx>().asDiagonal() * z);
        }
    }
    return real;
}

double instantaneous_rate(const ChannelRealization& real, const BeamformerSet& beams,
                          const NetworkConfig& cfg, int i)
{
    check_user(cfg, i);
    const double signal = std::norm(real(i, i).dot(beams[i]));
    double interference = 0.0;
    for (int k = 0; k < cfg.num_users; ++k) {
        if (k != i) {
            interference += std::norm(real(k, i).dot(beams[k]));
        }
    }
    return std::log2(1.0 + signal / (interference + cfg.noise(i)));
}

CrossPowers cross_powers(const BeamformerSet& beams, const ChannelStats& stats)
{
    const int kk = stats.num_users();
    if (beams.size() != kk) {
        throw DimensionMismatch("cross_powers: beamformer count differs from K");
    }
    CrossPowers cp{RMat::Zero(kk, kk)};
    for (int k = 0; k < kk; ++k) {
        if (beams[k].size() != stats.num_antennas()) {
            throw DimensionMismatch("cross_powers: beamformer length differs from Nt");
        }
        for (int i = 0; i < kk; ++i) {
            double v = quad_form(stats(k, i), beams[k]);
            const double scale = stats(k, i).norm() * beams[k].squaredNorm();
            if (v < 0) {
                if (v < -kClampTol * std::max(scale, 1.0)) {
                    throw CorruptedStats("cross_powers: negative quadratic form");
                }
                v = 0.0;
            }
            cp.values(k, i) = v;
        }
    }
    return cp;
}

double success_probability(double rate, double signal, std::span<const double> interference,
                           double noise)
{
    if (rate <= 0) {
        return 1.0;
    }
    if (!(signal > 0)) {
        throw DegenerateBeamformer(-1, "success_probability: zero signal power");
    }
    const double snr_gap = std::expm1(rate * std::log(2.0));
    double log_p = -snr_gap * noise / signal;
    for (double ik : interference) {
        log_p -= std::log1p(snr_gap * ik / signal);
    }
    return std::exp(log_p);
}

double outage_probability(double rate, double signal, std::span<const double> interference,
                          double noise)
{
    if (rate > 0 && !(signal > 0)) {
        return 1.0;
    }
    return 1.0 - success_probability(rate, signal, interference, noise);
}

double monte_carlo_outage(const ChannelStats& stats, const BeamformerSet& beams,
                          const NetworkConfig& cfg, int i, double rate, std::int64_t n_samples,
                          std::uint64_t seed, int workers)
{
    check_user(cfg, i);
    if (n_samples < 1) {
        throw InvalidArgument("monte_carlo_outage: need at least one sample");
    }
    const int kk = cfg.num_users;
    const int n = cfg.num_antennas;

    // Per-link factor F with h = F z, z ~ CN(0, I). Only links into receiver i matter.
    std::vector<CMat> factor(static_cast<std::size_t>(kk));
    for (int k = 0; k < kk; ++k) {
        Eigen::SelfAdjointEigenSolver<CMat> es(stats(k, i));
        RVec s = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
        factor[static_cast<std::size_t>(k)] = es.eigenvectors() * s.cast<cplx>().asDiagonal();
    }

    constexpr std::int64_t kChunk = 4096;
    const std::int64_t n_chunks = (n_samples + kChunk - 1) / kChunk;
    std::vector<std::int64_t> outages(static_cast<std::size_t>(n_chunks), 0);

    auto run_chunk = [&](std::int64_t c) {
        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(c)));
        const std::int64_t begin = c * kChunk;
        const std::int64_t end = std::min(n_samples, begin + kChunk);
        std::int64_t count = 0;
        ComplexNormal draw;
        CVec z(n);
        for (std::int64_t s = begin; s < end; ++s) {
            double signal = 0.0;
            double interference = 0.0;
            for (int k = 0; k < kk; ++k) {
                for (int a = 0; a < n; ++a) {
                    z(a) = draw(rng);
                }
                const CVec h = factor[static_cast<std::size_t>(k)] * z;
                const double p = std::norm(h.dot(beams[k]));
                if (k == i) {
                    signal = p;
                } else {
                    interference += p;
                }
            }
            const double r = std::log2(1.0 + signal / (interference + cfg.noise(i)));
            if (r < rate) {
                ++count;
            }
        }
        outages[static_cast<std::size_t>(c)] = count;
    };

    const int nw = std::max(1, std::min<int>(workers, static_cast<int>(n_chunks)));
    if (nw == 1) {
        for (std::int64_t c = 0; c < n_chunks; ++c) {
            run_chunk(c);
        }
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < nw; ++t) {
            pool.emplace_back([&, t] {
                for (std::int64_t c = t; c < n_chunks; c += nw) {
                    run_chunk(c);
                }
            });
        }
        for (auto& th : pool) {
            th.join();
        }
    }
    std::int64_t total = 0;
    for (auto c : outages) {
        total += c;
    }
    return static_cast<double>(total) / static_cast<double>(n_samples);
}

namespace {

std::string format_complex(cplx z)
{
    char buf[96];
    std::snprintf(buf, sizeof buf, "%.17g%+.17gj", z.real(), z.imag());
    return buf;
}

cplx parse_complex(const std::string& tok)
{
    if (tok.empty() || tok.back() != 'j') {
        throw InvalidArgument("read_stats: malformed complex entry '" + tok + "'");
    }
    // the sign that separates the parts is the last +/- not preceded by an exponent marker
    std::size_t split = std::string::npos;
    for (std::size_t p = tok.size() - 1; p > 0; --p) {
        if ((tok[p] == '+' || tok[p] == '-') && tok[p - 1] != 'e' && tok[p - 1] != 'E') {
            split = p;
            break;
        }
    }
    if (split == std::string::npos) {
        throw InvalidArgument("read_stats: malformed complex entry '" + tok + "'");
    }
    try {
        const double re = std::stod(tok.substr(0, split));
        const double im = std::stod(tok.substr(split, tok.size() - 1 - split));
        return {re, im};
    } catch (const std::exception&) {
        throw InvalidArgument("read_stats: malformed complex entry '" + tok + "'");
    }
}

} // namespace

void write_stats(std::ostream& os, const ChannelStats& stats)
{
    const int n = stats.num_antennas();
    for (int k = 0; k < stats.num_users(); ++k) {
        for (int i = 0; i < stats.num_users(); ++i) {
            os << "Q " << k << ' ' << i << ' ' << n << '\n';
            const CMat& q = stats(k, i);
            for (int a = 0; a < n; ++a) {
                for (int b = 0; b < n; ++b) {
                    os << (b ? " " : "") << format_complex(q(a, b));
                }
                os << '\n';
            }
        }
    }
}

ChannelStats read_stats(std::istream& is)
{
    struct Record {
        int k, i;
        CMat q;
    };
    std::vector<Record> records;
    int nt = -1;
    std::string tag;
    while (is >> tag) {
        if (tag != "Q") {
            throw InvalidArgument("read_stats: expected record header 'Q'");
        }
        Record r{};
        int n = 0;
        if (!(is >> r.k >> r.i >> n) || n < 1) {
            throw InvalidArgument("read_stats: malformed record header");
        }
        if (nt >= 0 && n != nt) {
            throw DimensionMismatch("read_stats: inconsistent Nt across records");
        }
        nt = n;
        r.q.resize(n, n);
        for (int a = 0; a < n; ++a) {
            for (int b = 0; b < n; ++b) {
                std::string tok;
                if (!(is >> tok)) {
                    throw InvalidArgument("read_stats: truncated matrix");
                }
                r.q(a, b) = parse_complex(tok);
            }
        }
        records.push_back(std::move(r));
    }
    const auto count = static_cast<int>(records.size());
    const int kk = static_cast<int>(std::lround(std::sqrt(static_cast<double>(count))));
    if (kk < 1 || kk * kk != count) {
        throw DimensionMismatch("read_stats: record count is not K^2");
    }
    ChannelStats stats(kk, nt);
    std::vector<bool> seen(static_cast<std::size_t>(count), false);
    for (auto& r : records) {
        if (r.k < 0 || r.k >= kk || r.i < 0 || r.i >= kk) {
            throw InvalidArgument("read_stats: record index out of range");
        }
        const auto slot = static_cast<std::size_t>(r.k * kk + r.i);
        if (seen[slot]) {
            throw InvalidArgument("read_stats: duplicate record");
        }
        seen[slot] = true;
        stats(r.k, r.i) = std::move(r.q);
    }
    return stats;
}

} // namespace cobf
