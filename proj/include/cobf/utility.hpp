#pragma once

#include <span>
#include <string>
#include <vector>

#include "cobf/linalg.hpp"

namespace cobf {

enum class UtilityKind { WeightedSumRate, ProportionalFairness, HarmonicMean, MaxMinLse };

/// A concave nondecreasing system utility over per-user rates.
struct UtilitySpec {
    UtilityKind kind = UtilityKind::WeightedSumRate;
    std::vector<double> weights;
    double lse_gamma = 5.0;
    double rate_floor = 1e-12;

    static UtilitySpec wsr(std::vector<double> weights);
    static UtilitySpec pf(std::vector<double> weights);
    static UtilitySpec hm(std::vector<double> weights);
    static UtilitySpec mmf_lse(std::vector<double> weights, double gamma = 5.0);

    void validate() const;

    /// True when the utility is only finite/smooth above rate_floor (PF, HM).
    bool needs_floor() const;
};

UtilityKind parse_utility_kind(const std::string& name);
std::string to_string(UtilityKind kind);

double evaluate(const UtilitySpec& u, std::span<const double> rates);

/// dU/dR_i, all >= 0.
RVec gradient(const UtilitySpec& u, std::span<const double> rates);

/// Weighted min-rate min_i R_i / alpha_i (the quantity the LSE surrogate smooths).
double min_rate(std::span<const double> weights, std::span<const double> rates);

/// Map a utility value to a positive, rate-valued scale for ratio reporting.
/// PF becomes the weighted geometric mean rate exp(U / sum alpha); the
/// others are already rate-valued.
double rate_equivalent(const UtilitySpec& u, double value);

} // namespace cobf
