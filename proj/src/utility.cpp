#include "cobf/utility.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "cobf/error.hpp"

namespace cobf {

UtilitySpec UtilitySpec::wsr(std::vector<double> weights)
{
    return {UtilityKind::WeightedSumRate, std::move(weights)};
}

UtilitySpec UtilitySpec::pf(std::vector<double> weights)
{
    return {UtilityKind::ProportionalFairness, std::move(weights)};
}

UtilitySpec UtilitySpec::hm(std::vector<double> weights)
{
    return {UtilityKind::HarmonicMean, std::move(weights)};
}

UtilitySpec UtilitySpec::mmf_lse(std::vector<double> weights, double gamma)
{
    UtilitySpec u{UtilityKind::MaxMinLse, std::move(weights)};
    u.lse_gamma = gamma;
    return u;
}

void UtilitySpec::validate() const
{
    if (weights.empty()) {
        throw InvalidArgument("UtilitySpec: empty weight vector");
    }
    for (double a : weights) {
        if (!(a > 0)) {
            throw InvalidArgument("UtilitySpec: weights must be positive");
        }
    }
    if (kind == UtilityKind::MaxMinLse && !(lse_gamma > 0)) {
        throw InvalidArgument("UtilitySpec: gamma must be positive");
    }
    if (needs_floor() && !(rate_floor > 0)) {
        throw InvalidArgument("UtilitySpec: rate floor must be positive");
    }
}

bool UtilitySpec::needs_floor() const
{
    return kind == UtilityKind::ProportionalFairness || kind == UtilityKind::HarmonicMean;
}

UtilityKind parse_utility_kind(const std::string& name)
{
    if (name == "wsr") {
        return UtilityKind::WeightedSumRate;
    }
    if (name == "pf") {
        return UtilityKind::ProportionalFairness;
    }
    if (name == "hm") {
        return UtilityKind::HarmonicMean;
    }
    if (name == "mmf-lse") {
        return UtilityKind::MaxMinLse;
    }
    throw InvalidArgument("unknown utility '" + name + "'");
}

std::string to_string(UtilityKind kind)
{
    switch (kind) {
    case UtilityKind::WeightedSumRate:
        return "wsr";
    case UtilityKind::ProportionalFairness:
        return "pf";
    case UtilityKind::HarmonicMean:
        return "hm";
    case UtilityKind::MaxMinLse:
        return "mmf-lse";
    }
    return "?";
}

namespace {

void check_size(const UtilitySpec& u, std::span<const double> rates)
{
    if (rates.size() != u.weights.size()) {
        throw DimensionMismatch("utility: rate vector length differs from weight count");
    }
}

} // namespace

double evaluate(const UtilitySpec& u, std::span<const double> rates)
{
    check_size(u, rates);
    const std::size_t k = rates.size();
    switch (u.kind) {
    case UtilityKind::WeightedSumRate: {
        double s = 0.0;
        for (std::size_t i = 0; i < k; ++i) {
            s += u.weights[i] * rates[i];
        }
        return s;
    }
    case UtilityKind::ProportionalFairness: {
        double s = 0.0;
        for (std::size_t i = 0; i < k; ++i) {
            s += u.weights[i] * std::log(std::max(rates[i], u.rate_floor));
        }
        return s;
    }
    case UtilityKind::HarmonicMean: {
        double s = 0.0;
        for (std::size_t i = 0; i < k; ++i) {
            s += u.weights[i] / std::max(rates[i], u.rate_floor);
        }
        return 1.0 / s;
    }
    case UtilityKind::MaxMinLse: {
        // shift by the minimum so every exponent is <= 0
        const double m = min_rate(u.weights, rates);
        double s = 0.0;
        for (std::size_t i = 0; i < k; ++i) {
            s += std::exp2(-u.lse_gamma * (rates[i] / u.weights[i] - m));
        }
        return m - std::log2(s) / u.lse_gamma;
    }
    }
    return 0.0;
}

RVec gradient(const UtilitySpec& u, std::span<const double> rates)
{
    check_size(u, rates);
    const auto k = static_cast<Eigen::Index>(rates.size());
    RVec g(k);
    switch (u.kind) {
    case UtilityKind::WeightedSumRate:
        for (Eigen::Index i = 0; i < k; ++i) {
            g(i) = u.weights[static_cast<std::size_t>(i)];
        }
        break;
    case UtilityKind::ProportionalFairness:
        for (Eigen::Index i = 0; i < k; ++i) {
            const double r = rates[static_cast<std::size_t>(i)];
            g(i) = r > u.rate_floor ? u.weights[static_cast<std::size_t>(i)] / r : 0.0;
        }
        break;
    case UtilityKind::HarmonicMean: {
        double s = 0.0;
        for (Eigen::Index i = 0; i < k; ++i) {
            s += u.weights[static_cast<std::size_t>(i)] /
                 std::max(rates[static_cast<std::size_t>(i)], u.rate_floor);
        }
        for (Eigen::Index i = 0; i < k; ++i) {
            const double r = rates[static_cast<std::size_t>(i)];
            g(i) = r > u.rate_floor ? u.weights[static_cast<std::size_t>(i)] / (r * r * s * s)
                                    : 0.0;
        }
        break;
    }
    case UtilityKind::MaxMinLse: {
        const double m = min_rate(u.weights, rates);
        RVec e(k);
        for (Eigen::Index i = 0; i < k; ++i) {
            const auto ui = static_cast<std::size_t>(i);
            e(i) = std::exp2(-u.lse_gamma * (rates[ui] / u.weights[ui] - m));
        }
        const double s = e.sum();
        for (Eigen::Index i = 0; i < k; ++i) {
            g(i) = e(i) / (s * u.weights[static_cast<std::size_t>(i)]);
        }
        break;
    }
    }
    return g;
}

double min_rate(std::span<const double> weights, std::span<const double> rates)
{
    double m = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < rates.size(); ++i) {
        m = std::min(m, rates[i] / weights[i]);
    }
    return m;
}

double rate_equivalent(const UtilitySpec& u, double value)
{
    if (u.kind == UtilityKind::ProportionalFairness) {
        const double total = std::accumulate(u.weights.begin(), u.weights.end(), 0.0);
        return std::exp(value / total);
    }
    return value;
}

} // namespace cobf
