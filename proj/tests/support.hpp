#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "cobf/linalg.hpp"
#include "cobf/model.hpp"
#include "cobf/trace.hpp"

namespace testing {

struct Instance {
    cobf::NetworkConfig cfg;
    cobf::ChannelStats stats;
};

inline Instance make_instance(std::uint64_t seed, int k, int nt, double eta = 0.5,
                              double snr_db = 10.0)
{
    Instance in;
    in.cfg = cobf::NetworkConfig::uniform(k, nt, cobf::NetworkConfig::noise_from_snr_db(snr_db));
    in.stats = cobf::generate_instance(seed, in.cfg, eta);
    return in;
}

/// Random beams with ||w_i||^2 uniform in [0, P_i].
inline cobf::BeamformerSet random_feasible(cobf::Rng& rng, const cobf::NetworkConfig& cfg)
{
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    cobf::BeamformerSet b;
    for (int i = 0; i < cfg.num_users; ++i) {
        cobf::CVec w = cobf::random_complex_normal(rng, cfg.num_antennas);
        w *= std::sqrt(unif(rng) * cfg.power(i)) / w.norm();
        b.w.push_back(w);
    }
    return b;
}

inline bool nondecreasing(const std::vector<cobf::TraceEntry>& trace, double slack = 1e-9)
{
    for (std::size_t n = 1; n < trace.size(); ++n) {
        if (trace[n].utility < trace[n - 1].utility - slack) {
            return false;
        }
    }
    return true;
}

inline double rel_err(double a, double b)
{
    return std::abs(a - b) / std::max(std::abs(b), 1e-300);
}

} // namespace testing
