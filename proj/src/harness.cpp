#include "cobf/harness.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "cobf/error.hpp"

namespace cobf {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

using Clock = std::chrono::steady_clock;

bool is_heuristic(const std::string& algo)
{
    return algo == "dbsum" || algo == "dwmmse";
}

bool same_bits(double a, double b)
{
    return std::bit_cast<std::uint64_t>(a) == std::bit_cast<std::uint64_t>(b) ||
           (std::isnan(a) && std::isnan(b));
}

struct InstanceRun {
    std::vector<ResultRecord> records;
    std::vector<std::vector<double>> rates; // per record, heuristics only
};

InstanceRun run_instance(const ExperimentConfig& cfg, const UtilitySpec& u, double snr_db,
                         int trial)
{
    const std::uint64_t seed = instance_seed(cfg.seed, trial);
    NetworkConfig net = NetworkConfig::uniform(cfg.num_users, cfg.num_antennas,
                                               NetworkConfig::noise_from_snr_db(snr_db), 1.0,
                                               cfg.outage);
    net.priority_weight = u.weights;
    const ChannelStats stats = generate_instance(seed, net, cfg.eta);
    const BeamformerSet init =
        BeamformerSet::random_unit(cfg.num_users, cfg.num_antennas, derive_seed(seed, 1));

    InstanceRun run;
    double bound = kNaN;
    for (const std::string& algo : cfg.algorithms) {
        ResultRecord rec;
        rec.seed = seed;
        rec.algo = algo;
        rec.utility = to_string(u.kind);
        rec.num_users = cfg.num_users;
        rec.num_antennas = cfg.num_antennas;
        rec.eta = cfg.eta;
        rec.snr_db = snr_db;
        rec.bound = kNaN;
        rec.gap_ratio = kNaN;
        std::vector<double> rates;
        const auto t0 = Clock::now();
        try {
            if (algo == "dbsum") {
                const DbsumResult r = run_dbsum(stats, net, u, init, cfg.dbsum);
                rec.value = r.utility;
                rec.iters = r.block_updates;
                rec.messages = r.messages;
                rates = r.rates;
                rec.checks_passed =
                    r.beams.feasible(net) && outage_constraints_active(r.beams, stats, net);
            } else if (algo == "dwmmse") {
                if (u.kind != UtilityKind::WeightedSumRate) {
                    throw InvalidArgument("dwmmse maximizes weighted sum rate only");
                }
                const DwmmseResult r = run_dwmmse(stats, net, u.weights, init, cfg.dwmmse);
                rec.value = r.utility;
                rec.iters = r.iterations;
                rec.messages = r.messages;
                rates = r.rates;
                rec.checks_passed =
                    r.beams.feasible(net) && outage_constraints_active(r.beams, stats, net);
            } else if (algo == "poa") {
                const BoundResult b = upper_bound(make_relaxed_instance(stats, net), u, cfg.poa);
                bound = b.bound;
                rec.value = b.bound;
                rec.bound = b.bound;
                rec.iters = static_cast<int>(b.poa.trace.size());
            } else if (algo == "tdma") {
                rec.value = tdma_baseline(stats, net);
            } else if (algo == "dsca") {
                throw InvalidArgument("dsca: comparison algorithm is not implemented");
            } else {
                throw InvalidArgument("unknown algorithm '" + algo + "'");
            }
        } catch (const Error& e) {
            rec.value = kNaN;
            rec.checks_passed = false;
            rec.note = e.what();
        }
        if (cfg.record_timing) {
            rec.time_s = std::chrono::duration<double>(Clock::now() - t0).count();
        }
        run.records.push_back(rec);
        run.rates.push_back(std::move(rates));
    }
    if (!std::isnan(bound)) {
        for (std::size_t k = 0; k < run.records.size(); ++k) {
            ResultRecord& rec = run.records[k];
            if (!is_heuristic(rec.algo) || std::isnan(rec.value)) {
                continue;
            }
            rec.bound = bound;
            rec.gap_ratio = gap_ratio(u, rec.value, run.rates[k], bound);
            if (!(rec.gap_ratio <= 1.0 + 1e-6)) {
                rec.checks_passed = false;
                rec.note = "heuristic exceeds the relaxation bound";
            }
        }
    }
    return run;
}

std::string fmt(double x)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

} // namespace

void ExperimentConfig::validate() const
{
    if (num_users < 1 || num_antennas < 1) {
        throw InvalidArgument("experiment: K and Nt must be positive");
    }
    if (!(eta > 0 && eta <= 1)) {
        throw InvalidArgument("experiment: eta must lie in (0, 1]");
    }
    if (snr_db.empty()) {
        throw InvalidArgument("experiment: no SNR points");
    }
    for (double s : snr_db) {
        if (!std::isfinite(s)) {
            throw InvalidArgument("experiment: SNR values must be finite");
        }
    }
    if (!(outage > 0 && outage < 1)) {
        throw InvalidArgument("experiment: outage must lie in (0, 1)");
    }
    if (trials < 1) {
        throw InvalidArgument("experiment: trials must be >= 1");
    }
    if (!utility.weights.empty() && static_cast<int>(utility.weights.size()) != num_users) {
        throw DimensionMismatch("experiment: weight count differs from K");
    }
    resolved_utility().validate();
}

UtilitySpec ExperimentConfig::resolved_utility() const
{
    UtilitySpec u = utility;
    if (u.weights.empty()) {
        u.weights.assign(static_cast<std::size_t>(num_users), 1.0 / num_users);
    }
    return u;
}

ExperimentConfig parse_experiment_config(const std::string& json_text)
{
    using nlohmann::json;
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception& e) {
        throw InvalidArgument(std::string("config: ") + e.what());
    }
    if (!j.is_object()) {
        throw InvalidArgument("config: top level must be an object");
    }
    ExperimentConfig c;
    auto section = [](const json& obj, const std::vector<std::string>& keys,
                      const std::string& where) {
        for (const auto& [k, v] : obj.items()) {
            if (std::find(keys.begin(), keys.end(), k) == keys.end()) {
                throw InvalidArgument("config: unknown key '" + k + "' in " + where);
            }
        }
    };
    section(j,
            {"num_users", "num_antennas", "eta", "snr_db", "outage", "utility", "weights", "gamma",
             "trials", "seed", "algorithms", "dbsum", "dwmmse", "poa", "record_timing",
             "workers"},
            "config");
    try {
        c.num_users = j.value("num_users", c.num_users);
        c.num_antennas = j.value("num_antennas", c.num_antennas);
        c.eta = j.value("eta", c.eta);
        if (j.contains("snr_db")) {
            c.snr_db = j["snr_db"].is_array() ? j["snr_db"].get<std::vector<double>>()
                                              : std::vector<double>{j["snr_db"].get<double>()};
        }
        c.outage = j.value("outage", c.outage);
        c.utility.kind = parse_utility_kind(j.value("utility", std::string("wsr")));
        c.utility.weights = j.value("weights", std::vector<double>{});
        c.utility.lse_gamma = j.value("gamma", c.utility.lse_gamma);
        c.trials = j.value("trials", c.trials);
        c.seed = j.value("seed", c.seed);
        c.algorithms = j.value("algorithms", c.algorithms);
        if (j.contains("dbsum")) {
            const json& d = j["dbsum"];
            section(d, {"penalty", "max_block_updates", "tol"}, "dbsum");
            c.dbsum.penalty = d.value("penalty", c.dbsum.penalty);
            c.dbsum.max_block_updates = d.value("max_block_updates", c.dbsum.max_block_updates);
            c.dbsum.rel_tol = d.value("tol", c.dbsum.rel_tol);
        }
        if (j.contains("dwmmse")) {
            const json& d = j["dwmmse"];
            section(d, {"tol", "max_iterations", "parallel_width"}, "dwmmse");
            c.dwmmse.rel_tol = d.value("tol", c.dwmmse.rel_tol);
            c.dwmmse.max_iterations = d.value("max_iterations", c.dwmmse.max_iterations);
            c.dwmmse.parallel_width = d.value("parallel_width", c.dwmmse.parallel_width);
        }
        if (j.contains("poa")) {
            const json& d = j["poa"];
            section(d, {"delta", "max_iterations", "beta_tol"}, "poa");
            c.poa.delta = d.value("delta", c.poa.delta);
            c.poa.max_iterations = d.value("max_iterations", c.poa.max_iterations);
            c.poa.beta_tol = d.value("beta_tol", c.poa.beta_tol);
        }
        c.record_timing = j.value("record_timing", c.record_timing);
        c.workers = j.value("workers", c.workers);
    } catch (const json::exception& e) {
        throw InvalidArgument(std::string("config: ") + e.what());
    }
    c.validate();
    return c;
}

std::string to_json(const ExperimentConfig& c)
{
    nlohmann::json j;
    j["num_users"] = c.num_users;
    j["num_antennas"] = c.num_antennas;
    j["eta"] = c.eta;
    j["snr_db"] = c.snr_db;
    j["outage"] = c.outage;
    j["utility"] = to_string(c.utility.kind);
    j["weights"] = c.utility.weights;
    j["gamma"] = c.utility.lse_gamma;
    j["trials"] = c.trials;
    j["seed"] = c.seed;
    j["algorithms"] = c.algorithms;
    j["dbsum"] = {{"penalty", c.dbsum.penalty},
                  {"max_block_updates", c.dbsum.max_block_updates},
                  {"tol", c.dbsum.rel_tol}};
    j["dwmmse"] = {{"tol", c.dwmmse.rel_tol},
                   {"max_iterations", c.dwmmse.max_iterations},
                   {"parallel_width", c.dwmmse.parallel_width}};
    j["poa"] = {{"delta", c.poa.delta},
                {"max_iterations", c.poa.max_iterations},
                {"beta_tol", c.poa.beta_tol}};
    j["record_timing"] = c.record_timing;
    j["workers"] = c.workers;
    return j.dump(2);
}

bool ResultRecord::operator==(const ResultRecord& o) const
{
    return seed == o.seed && algo == o.algo && utility == o.utility && num_users == o.num_users &&
           num_antennas == o.num_antennas && same_bits(eta, o.eta) &&
           same_bits(snr_db, o.snr_db) && same_bits(value, o.value) &&
           same_bits(bound, o.bound) && same_bits(gap_ratio, o.gap_ratio) && iters == o.iters &&
           same_bits(time_s, o.time_s) && messages == o.messages;
}

int workers_from_env()
{
    if (const char* s = std::getenv("COBF_WORKERS")) {
        const int n = std::atoi(s);
        if (n > 0) {
            return n;
        }
    }
    return 1;
}

std::uint64_t instance_seed(std::uint64_t master, int trial)
{
    return derive_seed(master, static_cast<std::uint64_t>(trial));
}

double gap_ratio(const UtilitySpec& u, double heuristic_value, const std::vector<double>& rates,
                 double bound)
{
    if (u.kind == UtilityKind::MaxMinLse) {
        return min_rate(u.weights, rates) / bound;
    }
    return rate_equivalent(u, heuristic_value) / rate_equivalent(u, bound);
}

std::vector<ResultRecord> run_experiment(const ExperimentConfig& cfg)
{
    cfg.validate();
    const UtilitySpec u = cfg.resolved_utility();
    const std::size_t n_snr = cfg.snr_db.size();
    const std::size_t jobs = n_snr * static_cast<std::size_t>(cfg.trials);
    std::vector<InstanceRun> slots(jobs);

    const int width =
        std::max(1, std::min(cfg.workers > 0 ? cfg.workers : workers_from_env(),
                             static_cast<int>(jobs)));
    std::atomic<std::size_t> cursor{0};
    auto worker = [&] {
        for (std::size_t k = cursor++; k < jobs; k = cursor++) {
            const std::size_t s = k / static_cast<std::size_t>(cfg.trials);
            const int trial = static_cast<int>(k % static_cast<std::size_t>(cfg.trials));
            slots[k] = run_instance(cfg, u, cfg.snr_db[s], trial);
        }
    };
    if (width == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < width; ++t) {
            pool.emplace_back(worker);
        }
        for (auto& th : pool) {
            th.join();
        }
    }
    std::vector<ResultRecord> out;
    for (auto& s : slots) {
        out.insert(out.end(), s.records.begin(), s.records.end());
    }
    return out;
}

double tdma_baseline(const ChannelStats& stats, const NetworkConfig& cfg)
{
    const int kk = cfg.num_users;
    double sum = 0.0;
    for (int i = 0; i < kk; ++i) {
        sum += std::log2(1.0 + std::log(1.0 / cfg.rho(i)) * cfg.power(i) *
                                   lambda_max(stats(i, i)) / cfg.noise(i));
    }
    return sum / kk;
}

bool outage_constraints_active(const BeamformerSet& beams, const ChannelStats& stats,
                               const NetworkConfig& cfg, double tol)
{
    const CertifiedRates cr = certified_rate(beams, stats, cfg);
    for (int i = 0; i < cfg.num_users; ++i) {
        const auto ui = static_cast<std::size_t>(i);
        const double s = cr.powers(i, i);
        if (!(s > 0)) {
            return false;
        }
        const double p = success_probability(cr.rate[ui], s, cr.powers.interference_at(i),
                                              cfg.noise(i));
        if (std::abs(p - cfg.rho(i)) > tol) {
            return false;
        }
    }
    return true;
}

OutageReport validate_outage(const ExperimentConfig& cfg, int trials, std::int64_t samples)
{
    if (samples < 10000) {
        throw InvalidArgument("validate_outage: need at least 1e4 samples");
    }
    OutageReport rep;
    const int workers = cfg.workers > 0 ? cfg.workers : workers_from_env();
    const double snr = cfg.snr_db.front();
    std::size_t hits = 0;
    for (int t = 0; t < trials; ++t) {
        const std::uint64_t seed = instance_seed(cfg.seed, t);
        NetworkConfig net = NetworkConfig::uniform(cfg.num_users, cfg.num_antennas,
                                                   NetworkConfig::noise_from_snr_db(snr), 1.0,
                                                   cfg.outage);
        const ChannelStats stats = generate_instance(seed, net, cfg.eta);
        const BeamformerSet init =
            BeamformerSet::random_unit(cfg.num_users, cfg.num_antennas, derive_seed(seed, 1));
        const UtilitySpec u =
            UtilitySpec::wsr(std::vector<double>(static_cast<std::size_t>(cfg.num_users), 1.0));
        const DbsumResult r = run_dbsum(stats, net, u, init, cfg.dbsum);
        for (int i = 0; i < cfg.num_users; ++i) {
            OutageCheck c;
            c.seed = seed;
            c.user = i;
            c.rate = r.rates[static_cast<std::size_t>(i)];
            c.target = net.outage_tolerance[static_cast<std::size_t>(i)];
            c.empirical = monte_carlo_outage(stats, r.beams, net, i, c.rate, samples,
                                             derive_seed(seed, 100 + static_cast<std::uint64_t>(i)),
                                             workers);
            c.margin = 3.0 * std::sqrt(c.target * (1.0 - c.target) / static_cast<double>(samples));
            c.within = std::abs(c.empirical - c.target) <= c.margin;
            hits += c.within ? 1 : 0;
            rep.checks.push_back(c);
        }
    }
    rep.fraction_within =
        rep.checks.empty() ? 0.0 : static_cast<double>(hits) / static_cast<double>(rep.checks.size());
    return rep;
}

const char* const kCsvHeader =
    "seed,algo,utility,K,Nt,eta,snr_db,value,bound,gap_ratio,iters,time_s,messages";

void write_csv(std::ostream& os, const std::vector<ResultRecord>& records)
{
    os << kCsvHeader << '\n';
    for (const ResultRecord& r : records) {
        os << r.seed << ',' << r.algo << ',' << r.utility << ',' << r.num_users << ','
           << r.num_antennas << ',' << fmt(r.eta) << ',' << fmt(r.snr_db) << ',' << fmt(r.value)
           << ',' << fmt(r.bound) << ',' << fmt(r.gap_ratio) << ',' << r.iters << ','
           << fmt(r.time_s) << ',' << r.messages << '\n';
    }
}

void emit_csv(const std::vector<ResultRecord>& records, const std::string& path)
{
    std::ofstream f(path);
    if (!f) {
        throw InvalidArgument("emit_csv: cannot open " + path);
    }
    write_csv(f, records);
}

std::vector<ResultRecord> parse_csv(std::istream& is)
{
    std::string line;
    if (!std::getline(is, line) || line != kCsvHeader) {
        throw InvalidArgument("parse_csv: missing or unexpected header");
    }
    std::vector<ResultRecord> out;
    while (std::getline(is, line)) {
        if (line.empty()) {
            continue;
        }
        std::vector<std::string> f;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            f.push_back(cell);
        }
        if (f.size() != 13) {
            throw InvalidArgument("parse_csv: expected 13 fields: " + line);
        }
        auto num = [](const std::string& s) { return std::strtod(s.c_str(), nullptr); };
        ResultRecord r;
        r.seed = std::stoull(f[0]);
        r.algo = f[1];
        r.utility = f[2];
        r.num_users = std::stoi(f[3]);
        r.num_antennas = std::stoi(f[4]);
        r.eta = num(f[5]);
        r.snr_db = num(f[6]);
        r.value = num(f[7]);
        r.bound = num(f[8]);
        r.gap_ratio = num(f[9]);
        r.iters = std::stoi(f[10]);
        r.time_s = num(f[11]);
        r.messages = std::stol(f[12]);
        out.push_back(std::move(r));
    }
    return out;
}

} // namespace cobf
