#include "flowlb/metrics.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace flowlb;

namespace {

std::vector<RankClock> busy(std::initializer_list<double> b) {
    std::vector<RankClock> out;
    for (double v : b) out.push_back({v, 0, 0, 0});
    return out;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

std::filesystem::path scratch(const std::string& name) {
    const auto p = std::filesystem::temp_directory_path() / ("flowlb_metrics_" + name);
    std::filesystem::remove_all(p);
    return p;
}

MetricsReport sample_report() {
    MetricsReport r;
    r.strategy = "rl_donation";
    r.seed = 5;
    r.n_p = 2;
    r.order = 3;
    r.makespan = 0.1 + 0.2;
    r.rounds = 2;
    r.particles = 10;
    r.total_steps = 1234;
    r.status = {7, 2, 1};
    r.ranks = {{0.1, 0.05, 0.15, 600}, {0.2, 0.1, 0.0, 634}};
    r.round_log = {{0, 0.0, 0.12, 0.12, 6, 0.2}, {1, 0.17, 0.18, 0.01, 4, 0.1}};
    r.donations = {{1, 1, 3, 0, true, "accepted", 0.0123456789012345678}};
    r.policy_trace = {{1, 0, {1, 1, 1}}, {1, 1, {1.0000001, 0.99, 1.5}}};
    r.activity = {{1, ActivityKind::compute, 0.1, 0.2}, {0, ActivityKind::idle, 0.15, 0.2},
                  {0, ActivityKind::comm, 0.0, 0.05}, {0, ActivityKind::compute, 0.05, 0.15},
                  {1, ActivityKind::comm, 0.0, 0.1}};
    return r;
}

} // namespace

TEST(Imbalance, Examples) {
    EXPECT_DOUBLE_EQ(imbalance(busy({4, 4, 4, 4})), 1.0);
    EXPECT_DOUBLE_EQ(imbalance(busy({8, 0})), 2.0);
    EXPECT_DOUBLE_EQ(imbalance(busy({7})), 1.0);
    EXPECT_THROW(imbalance(busy({0, 0})), NoWork);
    EXPECT_THROW(imbalance(busy({})), NoWork);
}

TEST(Imbalance, ScaleInvariantAndBounded) {
    const auto a = busy({1.5, 0.25, 3.0, 2.0});
    const auto b = busy({15, 2.5, 30, 20});
    EXPECT_DOUBLE_EQ(imbalance(a), imbalance(b));
    EXPECT_GE(imbalance(a), 1.0);
    EXPECT_LE(imbalance(a), 4.0);
}

TEST(EstimationError, PooledOverRounds) {
    MetricsReport r;
    r.round_log = {{0, 2, 1, 1, 0, 0}, {1, 3, 4, 1, 0, 0}};
    EXPECT_DOUBLE_EQ(estimation_error(r), 0.4);
    r.round_log = {{0, 1, 0, 1, 0, 0}};
    EXPECT_THROW(estimation_error(r), DivideByZero);
}

TEST(ParallelEfficiency, Examples) {
    EXPECT_DOUBLE_EQ(parallel_efficiency(25, 100, 4), 1.0);
    EXPECT_DOUBLE_EQ(parallel_efficiency(50, 100, 4), 0.5);
    EXPECT_DOUBLE_EQ(parallel_efficiency(100, 100, 1), 1.0);
}

TEST(Export, EmptyRunWritesHeadersOnly) {
    const auto dir = scratch("empty");
    MetricsReport r;
    export_report(r, dir);
    EXPECT_EQ(slurp(dir / "gantt.csv"), "rank,kind,t_start,t_end\n");
    EXPECT_EQ(slurp(dir / "estimation_error.csv"),
              "round,estimated,actual,abs_error,relative_error,particles,wall\n");
    EXPECT_EQ(slurp(dir / "donations.csv"), "round,donor,block,target,accepted,reason,reward\n");
    EXPECT_EQ(slurp(dir / "policy_trace.csv"), "round,rank,theta0,theta1,theta2\n");
    const auto kv = read_summary(dir / "summary.txt");
    EXPECT_EQ(kv.at("imbalance"), "nan");
    std::filesystem::remove_all(dir);
}

TEST(Export, GanttIsSortedByRankThenStart) {
    const auto dir = scratch("gantt");
    export_report(sample_report(), dir);
    std::istringstream in(slurp(dir / "gantt.csv"));
    std::string line;
    std::getline(in, line);
    int last_rank = -1;
    double last_start = -1;
    int rows = 0;
    while (std::getline(in, line)) {
        ++rows;
        std::istringstream row(line);
        std::string rank, kind, t0;
        std::getline(row, rank, ',');
        std::getline(row, kind, ',');
        std::getline(row, t0, ',');
        const int r = std::stoi(rank);
        const double s = std::stod(t0);
        if (r == last_rank) EXPECT_GT(s, last_start);
        else EXPECT_GT(r, last_rank);
        last_rank = r;
        last_start = s;
    }
    EXPECT_EQ(rows, 5);
    std::filesystem::remove_all(dir);
}

TEST(Export, RepeatedExportIsByteIdentical) {
    const auto a = scratch("a"), b = scratch("b");
    export_report(sample_report(), a);
    export_report(sample_report(), b);
    for (const char* f :
         {"summary.txt", "gantt.csv", "estimation_error.csv", "donations.csv", "policy_trace.csv"})
        EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
    std::filesystem::remove_all(a);
    std::filesystem::remove_all(b);
}

TEST(Export, SummaryRoundTripsDoubles) {
    const auto dir = scratch("summary");
    const auto r = sample_report();
    export_report(r, dir);
    const auto kv = read_summary(dir / "summary.txt");
    EXPECT_EQ(std::stod(kv.at("makespan")), r.makespan);
    EXPECT_EQ(std::stod(kv.at("rank.1.comm")), r.ranks[1].comm);
    EXPECT_EQ(std::stod(kv.at("imbalance")), imbalance(r));
    EXPECT_EQ(std::stod(kv.at("estimation_error")), estimation_error(r));
    EXPECT_EQ(kv.at("strategy"), "rl_donation");
    EXPECT_EQ(kv.at("terminated_out_of_domain"), "7");
    std::filesystem::remove_all(dir);
}

TEST(Export, DonationRewardKeepsFullPrecision) {
    const auto dir = scratch("donations");
    const auto r = sample_report();
    export_report(r, dir);
    std::istringstream in(slurp(dir / "donations.csv"));
    std::string line;
    std::getline(in, line);
    std::getline(in, line);
    EXPECT_EQ(std::stod(line.substr(line.rfind(',') + 1)), r.donations[0].reward);
    EXPECT_NE(line.find(",accepted,"), std::string::npos);
    std::filesystem::remove_all(dir);
}

TEST(Export, UnwritableDirectoryThrows) {
    EXPECT_THROW(export_report(sample_report(), "/proc/flowlb_cannot_write"), IoFailure);
}
