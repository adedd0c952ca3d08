#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "cobf/dbsum.hpp"
#include "cobf/dwmmse.hpp"
#include "cobf/relaxed_bound.hpp"

namespace cobf {

/// One sweep: `trials` random instances per SNR point, every algorithm on each.
struct ExperimentConfig {
    int num_users = 2;
    int num_antennas = 4;
    double eta = 1.0;
    std::vector<double> snr_db{10.0};
    double outage = 0.1;
    UtilitySpec utility;       // empty weights mean alpha_i = 1/K
    int trials = 20;
    std::uint64_t seed = 1;
    std::vector<std::string> algorithms{"dbsum"}; // dbsum, dwmmse, poa, tdma
    DbsumOptions dbsum;
    DwmmseOptions dwmmse;
    BoundOptions poa;
    /// Wall time in records; off makes output files byte-identical across runs.
    bool record_timing = true;
    /// Trial-level threads; <= 0 reads COBF_WORKERS (default 1).
    int workers = 0;

    void validate() const;
    /// Weights with the 1/K default applied.
    UtilitySpec resolved_utility() const;
};

/// Parse from JSON text. Unknown keys are rejected.
ExperimentConfig parse_experiment_config(const std::string& json_text);
std::string to_json(const ExperimentConfig& cfg);

struct ResultRecord {
    std::uint64_t seed = 0;
    std::string algo;
    std::string utility;
    int num_users = 0;
    int num_antennas = 0;
    double eta = 0.0;
    double snr_db = 0.0;
    double value = 0.0;
    double bound = 0.0;      // NaN when no bound was computed
    double gap_ratio = 0.0;  // NaN when no bound was computed
    int iters = 0;
    double time_s = 0.0;
    long messages = 0;

    // not serialized
    bool checks_passed = true;
    std::string note;

    bool operator==(const ResultRecord& o) const;
};

/// Worker count from COBF_WORKERS, at least 1.
int workers_from_env();

/// Instance seed of trial t under a master seed.
std::uint64_t instance_seed(std::uint64_t master, int trial);

/// Runs every configured algorithm on every instance; records are ordered by
/// (snr point, trial, algorithm list order) whatever the worker count.
std::vector<ResultRecord> run_experiment(const ExperimentConfig& cfg);

/// Ratio used for gap reporting: heuristic over bound, on a rate scale. For
/// mmf-lse the heuristic side is its weighted min rate.
double gap_ratio(const UtilitySpec& u, double heuristic_value, const std::vector<double>& rates,
                 double bound);

/// sum_i (1/K) log2(1 + ln(1/rho_i) P_i lambda_max(Q_ii) / sigma_i^2).
double tdma_baseline(const ChannelStats& stats, const NetworkConfig& cfg);

/// True when every user's closed-form success probability at its certified
/// rate equals rho_i to `tol`.
bool outage_constraints_active(const BeamformerSet& beams, const ChannelStats& stats,
                               const NetworkConfig& cfg, double tol = 1e-6);

struct OutageCheck {
    std::uint64_t seed = 0;
    int user = 0;
    double rate = 0.0;
    double empirical = 0.0;
    double target = 0.0; // eps_i
    double margin = 0.0; // 3 binomial standard deviations
    bool within = false;
};

struct OutageReport {
    std::vector<OutageCheck> checks;
    double fraction_within = 0.0;
};

/// Runs DBSUM (WSR) on `trials` instances and Monte-Carlo checks every user's
/// outage at its certified rate.
OutageReport validate_outage(const ExperimentConfig& cfg, int trials, std::int64_t samples);

extern const char* const kCsvHeader;

void write_csv(std::ostream& os, const std::vector<ResultRecord>& records);
void emit_csv(const std::vector<ResultRecord>& records, const std::string& path);
std::vector<ResultRecord> parse_csv(std::istream& is);

} // namespace cobf
