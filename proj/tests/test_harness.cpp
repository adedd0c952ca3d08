#include "doctest.h"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "cobf/error.hpp"
#include "cobf/harness.hpp"
#include "support.hpp"

using namespace cobf;

namespace {

ExperimentConfig small_config()
{
    ExperimentConfig c;
    c.num_users = 3;
    c.num_antennas = 2;
    c.eta = 0.5;
    c.snr_db = {0.0, 10.0};
    c.trials = 3;
    c.seed = 5;
    c.algorithms = {"dbsum", "dwmmse", "tdma"};
    c.record_timing = false;
    c.workers = 1;
    return c;
}

std::string csv_of(const std::vector<ResultRecord>& r)
{
    std::ostringstream os;
    write_csv(os, r);
    return os.str();
}

} // namespace

TEST_CASE("config JSON round trip and rejection of unknown keys")
{
    const std::string text = R"({
        "num_users": 4, "num_antennas": 2, "eta": 0.2, "snr_db": [0, 5, 10],
        "utility": "mmf-lse", "gamma": 3, "weights": [0.1, 0.2, 0.3, 0.4],
        "trials": 7, "seed": 99, "algorithms": ["dbsum", "poa"],
        "dbsum": {"penalty": 0.01, "tol": 1e-4},
        "dwmmse": {"parallel_width": 2},
        "poa": {"delta": 0.01, "max_iterations": 50},
        "record_timing": false
    })";
    const ExperimentConfig c = parse_experiment_config(text);
    CHECK(c.num_users == 4);
    CHECK(c.snr_db.size() == 3);
    CHECK(c.utility.kind == UtilityKind::MaxMinLse);
    CHECK(c.utility.lse_gamma == 3.0);
    CHECK(c.dbsum.rel_tol == 1e-4);
    CHECK(c.dwmmse.parallel_width == 2);
    CHECK(c.poa.max_iterations == 50);
    CHECK_FALSE(c.record_timing);

    const ExperimentConfig back = parse_experiment_config(to_json(c));
    CHECK(to_json(back) == to_json(c));

    CHECK_THROWS_AS(parse_experiment_config(R"({"num_user": 2})"), InvalidArgument);
    CHECK_THROWS_AS(parse_experiment_config(R"({"dbsum": {"step": 1}})"), InvalidArgument);
    CHECK_THROWS_AS(parse_experiment_config(R"({"trials": 0})"), InvalidArgument);
    CHECK_THROWS_AS(parse_experiment_config(R"({"snr_db": [1e999]})"), InvalidArgument);
    CHECK_THROWS_AS(parse_experiment_config("not json"), InvalidArgument);
    CHECK_THROWS_AS(parse_experiment_config(R"({"num_users": 2, "weights": [1]})"), DimensionMismatch);
}

TEST_CASE("default weights are uniform")
{
    ExperimentConfig c;
    c.num_users = 4;
    const UtilitySpec u = c.resolved_utility();
    CHECK(u.weights == std::vector<double>(4, 0.25));
}

TEST_CASE("experiment records: ordering, checks, messages")
{
    const ExperimentConfig c = small_config();
    const auto rs = run_experiment(c);
    REQUIRE(rs.size() == 2 * 3 * 3);
    for (std::size_t k = 0; k < rs.size(); ++k) {
        const auto& r = rs[k];
        CHECK(r.algo == c.algorithms[k % 3]);
        CHECK(r.seed == instance_seed(c.seed, static_cast<int>(k / 3 % 3)));
        CHECK(r.snr_db == c.snr_db[k / 9]);
        CHECK(r.checks_passed);
        CHECK(std::isnan(r.bound));
        CHECK(r.time_s == 0.0);
        if (r.algo == "dwmmse") {
            CHECK(r.messages == 2L * 3 * 2 * (r.iters + 1));
        }
        if (r.algo == "dbsum") {
            CHECK(r.messages == 3L * 2 + 3L * 2 * r.iters);
        }
    }
}

TEST_CASE("same seed, same file; worker count does not matter")
{
    ExperimentConfig c = small_config();
    c.dwmmse.parallel_width = 1;
    const std::string a = csv_of(run_experiment(c));
    c.workers = 4;
    c.dwmmse.parallel_width = 3;
    const std::string b = csv_of(run_experiment(c));
    CHECK(a == b);
    c.seed = 6;
    CHECK(csv_of(run_experiment(c)) != a);
}

TEST_CASE("CSV emission and bit-exact round trip")
{
    std::vector<ResultRecord> rs = run_experiment(small_config());
    rs[0].time_s = 0.1 + 0.2;
    rs[1].value = -1.0 / 3.0;
    std::stringstream ss;
    write_csv(ss, rs);
    const auto back = parse_csv(ss);
    REQUIRE(back.size() == rs.size());
    for (std::size_t k = 0; k < rs.size(); ++k) {
        CHECK(back[k] == rs[k]);
    }

    const std::string path = "harness_empty.csv";
    emit_csv({}, path);
    std::ifstream f(path);
    std::string all((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    CHECK(all == std::string(kCsvHeader) + "\n");
    std::remove(path.c_str());

    std::istringstream bad("seed,algo\n");
    CHECK_THROWS_AS(parse_csv(bad), InvalidArgument);
}

TEST_CASE("failures are recorded and the run continues")
{
    ExperimentConfig c = small_config();
    c.trials = 1;
    c.snr_db = {10.0};
    c.algorithms = {"dsca", "dbsum", "bogus"};
    const auto rs = run_experiment(c);
    REQUIRE(rs.size() == 3);
    CHECK_FALSE(rs[0].checks_passed);
    CHECK(rs[0].note.find("not implemented") != std::string::npos);
    CHECK(rs[1].checks_passed);
    CHECK_FALSE(rs[2].checks_passed);
}

TEST_CASE("bound and gap ratio on a small instance")
{
    ExperimentConfig c = small_config();
    c.num_users = 2;
    c.trials = 1;
    c.snr_db = {10.0};
    c.poa.delta = 1e-2;
    c.algorithms = {"dbsum", "dwmmse", "poa"};
    const auto rs = run_experiment(c);
    REQUIRE(rs.size() == 3);
    for (int k = 0; k < 2; ++k) {
        CHECK(rs[static_cast<std::size_t>(k)].bound == rs[2].value);
        CHECK(rs[static_cast<std::size_t>(k)].gap_ratio > 0);
        CHECK(rs[static_cast<std::size_t>(k)].gap_ratio <= 1.0 + 1e-6);
    }
}

TEST_CASE("gap ratio scales")
{
    const UtilitySpec pf = UtilitySpec::pf({0.5, 0.5});
    CHECK(gap_ratio(pf, std::log(0.5), {0.5, 0.5}, std::log(1.0)) == doctest::Approx(0.5));
    const UtilitySpec mm = UtilitySpec::mmf_lse({0.5, 0.5});
    CHECK(gap_ratio(mm, 0.0, {0.4, 0.6}, 1.6) == doctest::Approx(0.5));
    CHECK(gap_ratio(UtilitySpec::wsr({1, 1}), 2.0, {1, 1}, 4.0) == 0.5);
}

TEST_CASE("TDMA baseline")
{
    const auto one = testing::make_instance(3, 1, 4, 1.0, 10.0);
    const double single = std::log2(1.0 + std::log(1.0 / 0.9) * lambda_max(one.stats(0, 0)) / one.cfg.noise(0));
    CHECK(tdma_baseline(one.stats, one.cfg) == doctest::Approx(single).epsilon(1e-14));
    for (int k : {2, 3, 4}) {
        const auto in = testing::make_instance(3, k, 4, 0.5, 10.0);
        // lambda_max(Q_ii) = 1 for every user, so the sum equals the single-user rate / K * K
        CHECK(tdma_baseline(in.stats, in.cfg) == doctest::Approx(single).epsilon(1e-12));
    }
}

TEST_CASE("outage validation")
{
    ExperimentConfig c;
    c.num_users = 2;
    c.num_antennas = 2;
    c.workers = 2;
    const OutageReport rep = validate_outage(c, 3, 100000);
    REQUIRE(rep.checks.size() == 6);
    CHECK(rep.fraction_within >= 0.5);
    for (const auto& ch : rep.checks) {
        CHECK(ch.margin == doctest::Approx(3 * std::sqrt(0.1 * 0.9 / 1e5)));
        CHECK(ch.target == doctest::Approx(0.1));
    }
    CHECK_THROWS_AS(validate_outage(c, 1, 100), InvalidArgument);
}

TEST_CASE("rates below the certified rate have less outage")
{
    const auto in = testing::make_instance(4, 2, 2);
    const BeamformerSet b = BeamformerSet::random_unit(2, 2, 4);
    const CertifiedRates cr = certified_rate(b, in.stats, in.cfg);
    CHECK(outage_constraints_active(b, in.stats, in.cfg));
    const double mc = monte_carlo_outage(in.stats, b, in.cfg, 0, 0.5 * cr.rate[0], 100000, 3);
    CHECK(mc < 0.1);
    CHECK(monte_carlo_outage(in.stats, b, in.cfg, 0, 0.0, 10000, 3) == 0.0);
}

TEST_CASE("worker count from the environment")
{
    CHECK(workers_from_env() >= 1);
}
