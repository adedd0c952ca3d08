#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "cobf/linalg.hpp"

namespace cobf {

/// Static parameters of a K-user MISO interference channel.
///
/// Per-user arrays all have length K. success_target is kept as 1 - eps
/// so every consumer sees the same rounding.
struct NetworkConfig {
    int num_users = 0;
    int num_antennas = 0;
    std::vector<double> noise_power;      // sigma_i^2, linear scale
    std::vector<double> power_budget;     // P_i
    std::vector<double> outage_tolerance; // eps_i in (0,1)
    std::vector<double> success_target;   // rho_i = 1 - eps_i
    std::vector<double> priority_weight;  // alpha_i

    /// Identical users: noise sigma^2, power P, outage eps, unit weights.
    static NetworkConfig uniform(int num_users, int num_antennas, double noise_power,
                                 double power_budget = 1.0, double outage_tolerance = 0.1);

    /// Noise power from an SNR in dB, interpreted as 1/sigma^2 with P = 1.
    static double noise_from_snr_db(double snr_db);

    void set_outage_tolerance(int i, double eps);
    void validate() const;
    double rho(int i) const { return success_target[static_cast<std::size_t>(i)]; }
    double noise(int i) const { return noise_power[static_cast<std::size_t>(i)]; }
    double power(int i) const { return power_budget[static_cast<std::size_t>(i)]; }
};

/// Channel distribution information: Q_ki is the covariance of h_ki,
/// the channel from transmitter k to receiver i.
class ChannelStats {
public:
    ChannelStats() = default;
    ChannelStats(int num_users, int num_antennas);

    int num_users() const { return k_; }
    int num_antennas() const { return nt_; }

    const CMat& operator()(int k, int i) const { return q_[index(k, i)]; }
    CMat& operator()(int k, int i) { return q_[index(k, i)]; }

    /// Throws CorruptedStats when a matrix is not Hermitian PSD or Q_ii == 0.
    void validate() const;

    bool operator==(const ChannelStats& other) const;

private:
    std::size_t index(int k, int i) const { return static_cast<std::size_t>(k * k_ + i); }

    int k_ = 0;
    int nt_ = 0;
    std::vector<CMat> q_;
};

/// One fading draw of every h_ki.
class ChannelRealization {
public:
    ChannelRealization(int num_users, int num_antennas);

    int num_users() const { return k_; }
    const CVec& operator()(int k, int i) const { return h_[static_cast<std::size_t>(k * k_ + i)]; }
    CVec& operator()(int k, int i) { return h_[static_cast<std::size_t>(k * k_ + i)]; }

private:
    int k_;
    std::vector<CVec> h_;
};

/// One transmit beamformer per user.
struct BeamformerSet {
    std::vector<CVec> w;

    int size() const { return static_cast<int>(w.size()); }
    const CVec& operator[](int i) const { return w[static_cast<std::size_t>(i)]; }
    CVec& operator[](int i) { return w[static_cast<std::size_t>(i)]; }

    /// ||w_i||^2 <= P_i (1 + 1e-9) for every user.
    bool feasible(const NetworkConfig& cfg) const;

    /// Independent unit-norm CN directions per user (the usual random start).
    static BeamformerSet random_unit(int num_users, int num_antennas, std::uint64_t seed);
};

/// I(k, i) = w_k^H Q_ki w_k, the power user k's signal delivers at receiver i.
struct CrossPowers {
    RMat values;

    double operator()(int k, int i) const { return values(k, i); }
    int num_users() const { return static_cast<int>(values.rows()); }

    /// Interference powers seen by receiver i, i.e. I(k, i) for k != i.
    std::vector<double> interference_at(int i) const;
};

/// Random CDI per the usual protocol: Wishart-style GG^H, rescaled so that
/// lambda_max(Q_ii) = 1 and lambda_max(Q_ki) = eta for k != i.
ChannelStats generate_instance(std::uint64_t seed, const NetworkConfig& cfg, double eta);

/// Draw h_ki ~ CN(0, Q_ki) through an eigen-factorization of each Q_ki.
ChannelRealization sample_channels(const ChannelStats& stats, std::uint64_t seed);

/// Instantaneous rate of user i in bits/s/Hz for one fading draw.
double instantaneous_rate(const ChannelRealization& real, const BeamformerSet& beams,
                          const NetworkConfig& cfg, int i);

/// All quadratic forms w_k^H Q_ki w_k. Tiny negative rounding is clamped to zero.
CrossPowers cross_powers(const BeamformerSet& beams, const ChannelStats& stats);

/// Closed-form probability that user i decodes at rate R given signal power
/// s = w_i^H Q_ii w_i, interference powers and noise. Throws
/// DegenerateBeamformer when s <= 0 and R > 0.
double success_probability(double rate, double signal, std::span<const double> interference,
                           double noise);

/// 1 - success_probability, with the zero-signal case mapped to 1.
double outage_probability(double rate, double signal, std::span<const double> interference,
                          double noise);

/// Empirical Pr{ r_i < R } over n_samples independent draws.
///
/// Samples are generated in fixed-size chunks, each with its own seed derived
/// from `seed`, so the estimate is identical for any worker count.
double monte_carlo_outage(const ChannelStats& stats, const BeamformerSet& beams,
                          const NetworkConfig& cfg, int i, double rate, std::int64_t n_samples,
                          std::uint64_t seed, int workers = 1);

/// Text serialization: per (k,i) a header `Q k i Nt` then Nt rows of
/// `re+imj` entries with 17 significant digits.
void write_stats(std::ostream& os, const ChannelStats& stats);
ChannelStats read_stats(std::istream& is);

} // namespace cobf
