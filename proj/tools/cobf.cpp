#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "cobf/error.hpp"
#include "cobf/harness.hpp"

using namespace cobf;

namespace {

struct SweepFlags {
    std::string config;
    int users = 0;
    int antennas = 0;
    double eta = 0.0;
    std::vector<double> snr_db;
    double outage = 0.0;
    int trials = 0;
    std::uint64_t seed = 0;
    std::vector<std::string> algos;
    std::string utility;
    double gamma = 0.0;
    std::vector<double> weights;
    double tol = 0.0;
    double penalty = 0.0;
    int max_iters = 0;
    double delta = 0.0;
    int parallel_width = 0;
    int workers = 0;
    bool no_timing = false;
};

void add_sweep_flags(CLI::App* app, SweepFlags& f)
{
    app->add_option("--config", f.config, "JSON experiment config; flags override its fields")
        ->check(CLI::ExistingFile);
    app->add_option("--users,-K", f.users, "number of users");
    app->add_option("--antennas,--nt", f.antennas, "transmit antennas per user");
    app->add_option("--eta", f.eta, "cross-link strength in (0,1]");
    app->add_option("--snr-db", f.snr_db, "1/sigma^2 in dB, one or more values");
    app->add_option("--outage", f.outage, "outage tolerance eps");
    app->add_option("--trials", f.trials, "instances per SNR point");
    app->add_option("--seed", f.seed, "master seed");
    app->add_option("--algo", f.algos, "dbsum, dwmmse, poa, tdma (repeatable)");
    app->add_option("--utility", f.utility, "wsr, pf, hm or mmf-lse");
    app->add_option("--gamma", f.gamma, "mmf-lse smoothing parameter");
    app->add_option("--weights", f.weights, "priority weights, one per user");
    app->add_option("--tol", f.tol, "relative stopping tolerance of the heuristics");
    app->add_option("--penalty", f.penalty, "dbsum proximal weight c");
    app->add_option("--max-iters", f.max_iters, "iteration cap (dbsum block updates, dwmmse and poa iterations)");
    app->add_option("--delta", f.delta, "poa termination gap");
    app->add_option("--parallel-width", f.parallel_width, "dwmmse subproblem threads");
    app->add_option("--workers", f.workers, "trial-level threads (default COBF_WORKERS)");
    app->add_flag("--no-timing", f.no_timing, "zero all wall times for reproducible output");
}

std::string read_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in) {
        throw InvalidArgument("cannot open " + path);
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

ExperimentConfig resolve(const CLI::App* app, const SweepFlags& f)
{
    ExperimentConfig c = f.config.empty() ? ExperimentConfig{} : parse_experiment_config(read_file(f.config));
    auto given = [app](const char* name) { return app->count(name) > 0; };
    if (given("--users")) c.num_users = f.users;
    if (given("--antennas")) c.num_antennas = f.antennas;
    if (given("--eta")) c.eta = f.eta;
    if (given("--snr-db")) c.snr_db = f.snr_db;
    if (given("--outage")) c.outage = f.outage;
    if (given("--trials")) c.trials = f.trials;
    if (given("--seed")) c.seed = f.seed;
    if (given("--algo")) c.algorithms = f.algos;
    if (given("--utility")) c.utility.kind = parse_utility_kind(f.utility);
    if (given("--gamma")) c.utility.lse_gamma = f.gamma;
    if (given("--weights")) c.utility.weights = f.weights;
    if (given("--tol")) {
        c.dbsum.rel_tol = f.tol;
        c.dwmmse.rel_tol = f.tol;
    }
    if (given("--penalty")) c.dbsum.penalty = f.penalty;
    if (given("--max-iters")) {
        c.dbsum.max_block_updates = f.max_iters;
        c.dwmmse.max_iterations = f.max_iters;
        c.poa.max_iterations = f.max_iters;
    }
    if (given("--delta")) c.poa.delta = f.delta;
    if (given("--parallel-width")) c.dwmmse.parallel_width = f.parallel_width;
    if (given("--workers")) c.workers = f.workers;
    if (f.no_timing) c.record_timing = false;
    c.validate();
    return c;
}

/// Opens `path` for writing, or stdout for "-" / empty.
struct Output {
    std::ofstream file;
    std::ostream* os = &std::cout;

    explicit Output(const std::string& path)
    {
        if (!path.empty() && path != "-") {
            file.open(path);
            if (!file) {
                throw InvalidArgument("cannot write " + path);
            }
            os = &file;
        }
    }
};

std::string g17(double x)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

struct FirstInstance {
    NetworkConfig net;
    ChannelStats stats;
    BeamformerSet init;
};

/// Trial 0 at the first SNR point, built exactly as the sweep builds it.
FirstInstance first_instance(const ExperimentConfig& c, const UtilitySpec& u, const std::string& stats_path)
{
    FirstInstance fi;
    const std::uint64_t seed = instance_seed(c.seed, 0);
    fi.net = NetworkConfig::uniform(c.num_users, c.num_antennas, NetworkConfig::noise_from_snr_db(c.snr_db.front()),
                                    1.0, c.outage);
    fi.net.priority_weight = u.weights;
    if (stats_path.empty()) {
        fi.stats = generate_instance(seed, fi.net, c.eta);
    } else {
        std::ifstream in(stats_path);
        fi.stats = read_stats(in);
        if (fi.stats.num_users() != c.num_users || fi.stats.num_antennas() != c.num_antennas) {
            throw DimensionMismatch("stats file does not match --users/--antennas");
        }
    }
    fi.init = BeamformerSet::random_unit(c.num_users, c.num_antennas, derive_seed(seed, 1));
    return fi;
}

void write_trace(const ExperimentConfig& c, const std::string& stats_path, const std::string& path)
{
    if (c.algorithms.size() != 1) {
        throw InvalidArgument("--trace needs exactly one --algo");
    }
    const std::string& algo = c.algorithms.front();
    const UtilitySpec u = c.resolved_utility();
    const FirstInstance fi = first_instance(c, u, stats_path);
    Output out(path);
    auto elapsed = [&](double t) { return c.record_timing ? t : 0.0; };
    if (algo == "dbsum") {
        const DbsumResult r = run_dbsum(fi.stats, fi.net, u, fi.init, c.dbsum);
        *out.os << "iter,user,utility,elapsed_s,messages\n";
        for (const TraceEntry& e : r.trace) {
            *out.os << e.iter << ',' << e.user << ',' << g17(e.utility) << ',' << g17(elapsed(e.elapsed_s)) << ','
                    << e.messages << '\n';
        }
    } else if (algo == "dwmmse") {
        if (u.kind != UtilityKind::WeightedSumRate) {
            throw InvalidArgument("dwmmse maximizes weighted sum rate only");
        }
        const DwmmseResult r = run_dwmmse(fi.stats, fi.net, u.weights, fi.init, c.dwmmse);
        *out.os << "iter,user,utility,elapsed_s,messages,parallel_width\n";
        for (const TraceEntry& e : r.trace) {
            *out.os << e.iter << ',' << e.user << ',' << g17(e.utility) << ',' << g17(elapsed(e.elapsed_s)) << ','
                    << e.messages << ',' << c.dwmmse.parallel_width << '\n';
        }
    } else if (algo == "poa") {
        const BoundResult b = upper_bound(make_relaxed_instance(fi.stats, fi.net), u, c.poa);
        *out.os << "iter,upper,lower,gap,vertices\n";
        if (b.poa.trace.empty()) {
            *out.os << "0," << g17(b.bound) << ',' << g17(b.lower) << ',' << g17(b.bound - b.lower) << ",1\n";
        }
        for (std::size_t n = 0; n < b.poa.trace.size(); ++n) {
            const PoaIteration& it = b.poa.trace[n];
            *out.os << n + 1 << ',' << g17(it.upper) << ',' << g17(it.lower) << ',' << g17(it.gap) << ','
                    << it.vertex_count << '\n';
        }
    } else {
        throw InvalidArgument("no trace for algorithm '" + algo + "'");
    }
}

int report_failures(const std::vector<ResultRecord>& rs)
{
    int failed = 0;
    for (const ResultRecord& r : rs) {
        if (!r.checks_passed) {
            ++failed;
            std::cerr << "check failed: seed " << r.seed << " algo " << r.algo << " snr " << r.snr_db;
            if (!r.note.empty()) {
                std::cerr << ": " << r.note;
            }
            std::cerr << '\n';
        }
    }
    return failed;
}

int cmd_gen(const SweepFlags& f, const CLI::App* app, int trial, const std::string& out_path)
{
    const ExperimentConfig c = resolve(app, f);
    NetworkConfig net = NetworkConfig::uniform(c.num_users, c.num_antennas,
                                               NetworkConfig::noise_from_snr_db(c.snr_db.front()), 1.0, c.outage);
    Output out(out_path);
    write_stats(*out.os, generate_instance(instance_seed(c.seed, trial), net, c.eta));
    return 0;
}

int cmd_run(const SweepFlags& f, const CLI::App* app, const std::string& out_path, const std::string& trace_path,
            const std::string& stats_path)
{
    const ExperimentConfig c = resolve(app, f);
    if (!trace_path.empty() || !stats_path.empty()) {
        write_trace(c, stats_path, trace_path.empty() ? "-" : trace_path);
        // a gen file fixes one instance, so there is no sweep to run
        if (!stats_path.empty() || out_path.empty()) {
            return 0;
        }
    }
    const auto rs = run_experiment(c);
    Output out(out_path);
    write_csv(*out.os, rs);
    return report_failures(rs) == 0 ? 0 : 1;
}

int cmd_validate(const SweepFlags& f, const CLI::App* app, std::int64_t samples, const std::string& out_path)
{
    const ExperimentConfig c = resolve(app, f);
    const OutageReport rep = validate_outage(c, c.trials, samples);
    Output out(out_path);
    *out.os << "seed,user,rate,empirical,target,margin,within\n";
    for (const OutageCheck& ch : rep.checks) {
        *out.os << ch.seed << ',' << ch.user << ',' << g17(ch.rate) << ',' << g17(ch.empirical) << ','
                << g17(ch.target) << ',' << g17(ch.margin) << ',' << (ch.within ? 1 : 0) << '\n';
    }
    std::cerr << "within 3 sd: " << rep.fraction_within * 100.0 << "% of " << rep.checks.size() << " checks\n";
    return rep.fraction_within >= 0.95 ? 0 : 1;
}

int cmd_bench(const SweepFlags& f, const CLI::App* app, const std::vector<int>& users, const std::string& out_path)
{
    ExperimentConfig c = resolve(app, f);
    c.utility.kind = UtilityKind::WeightedSumRate;
    c.utility.weights.clear();
    c.algorithms = {"dbsum", "dwmmse", "tdma"};
    Output out(out_path);
    *out.os << "K,trials,dbsum_value,dwmmse_value,tdma_value,dbsum_time_s,dwmmse_time_s,dbsum_messages,"
               "dwmmse_messages\n";
    int failed = 0;
    for (int k : users) {
        c.num_users = k;
        const auto rs = run_experiment(c);
        failed += report_failures(rs);
        std::map<std::string, double> value, time, msgs;
        for (const ResultRecord& r : rs) {
            value[r.algo] += r.value;
            time[r.algo] += r.time_s;
            msgs[r.algo] += static_cast<double>(r.messages);
        }
        const double n = static_cast<double>(rs.size() / c.algorithms.size());
        *out.os << k << ',' << n << ',' << g17(value["dbsum"] / n) << ',' << g17(value["dwmmse"] / n) << ','
                << g17(value["tdma"] / n) << ',' << g17(time["dbsum"] / n) << ',' << g17(time["dwmmse"] / n) << ','
                << g17(msgs["dbsum"] / n) << ',' << g17(msgs["dwmmse"] / n) << '\n';
    }
    return failed == 0 ? 0 : 1;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Outage-constrained coordinated beamforming"};
    app.require_subcommand(1);

    SweepFlags gen_f, run_f, val_f, bench_f;
    std::string gen_out, run_out, run_trace, run_stats, val_out, bench_out;
    int gen_trial = 0;
    std::int64_t samples = 100000;
    std::vector<int> bench_users{2, 3, 4, 5};

    CLI::App* gen = app.add_subcommand("gen", "write the channel statistics of one instance");
    add_sweep_flags(gen, gen_f);
    gen->add_option("--trial", gen_trial, "trial index under the master seed");
    gen->add_option("--out,-o", gen_out, "output file (default stdout)");

    CLI::App* run = app.add_subcommand("run", "run an experiment sweep and write the results CSV");
    add_sweep_flags(run, run_f);
    run->add_option("--out,-o", run_out, "results CSV (default stdout)");
    run->add_option("--trace", run_trace, "per-iteration trace of the single --algo on the first instance");
    run->add_option("--stats", run_stats, "take the traced instance from a gen file")->check(CLI::ExistingFile);

    CLI::App* val = app.add_subcommand("validate-outage", "Monte Carlo check of the certified rates");
    add_sweep_flags(val, val_f);
    val->add_option("--samples", samples, "fading draws per user")->check(CLI::Range(10000, 1000000000));
    val->add_option("--out,-o", val_out, "per-user CSV (default stdout)");

    CLI::App* bench = app.add_subcommand("bench", "dbsum vs dwmmse vs tdma, weighted sum rate, over K");
    add_sweep_flags(bench, bench_f);
    bench->add_option("--k-list", bench_users, "user counts to sweep");
    bench->add_option("--out,-o", bench_out, "summary CSV (default stdout)");

    CLI11_PARSE(app, argc, argv);
    try {
        if (gen->parsed()) {
            return cmd_gen(gen_f, gen, gen_trial, gen_out);
        }
        if (run->parsed()) {
            return cmd_run(run_f, run, run_out, run_trace, run_stats);
        }
        if (val->parsed()) {
            return cmd_validate(val_f, val, samples, val_out);
        }
        return cmd_bench(bench_f, bench, bench_users, bench_out);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
}
