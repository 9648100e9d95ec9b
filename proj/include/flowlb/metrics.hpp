#pragma once

// Run reports: makespan, per-rank clocks, estimator accuracy, donation and
// policy logs, and their on-disk export.

#include "flowlb/domain_decomp.hpp"
#include "flowlb/errors.hpp"
#include "flowlb/rl_agent.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <string>
#include <vector>

namespace flowlb {

enum class ActivityKind : std::uint8_t { comm, compute, idle };

inline const char* to_string(ActivityKind k) {
    switch (k) {
    case ActivityKind::comm: return "comm";
    case ActivityKind::compute: return "compute";
    case ActivityKind::idle: return "idle";
    }
    return "?";
}

struct ActivityInterval {
    Rank rank = 0;
    ActivityKind kind = ActivityKind::compute;
    double t_start = 0.0;
    double t_end = 0.0;
};

struct RankClock {
    double busy = 0.0; ///< advection seconds
    double comm = 0.0;
    double idle = 0.0;
    std::int64_t steps = 0;
    double total() const { return busy + comm + idle; }
};

/// Estimator accuracy for one round: sums over blocks of |w - a| and a.
struct RoundRecord {
    std::int64_t round = 0;
    double estimated = 0.0;
    double actual = 0.0;
    double abs_error = 0.0;
    std::int64_t particles_traced = 0;
    double wall = 0.0;

    double relative_error() const {
        return actual > 0.0 ? abs_error / actual : std::numeric_limits<double>::quiet_NaN();
    }
};

struct DonationRecord {
    std::int64_t round = 0;
    Rank donor = 0;
    BlockIndex block = 0;
    Rank target = 0;
    bool accepted = false;
    std::string reason; ///< "accepted", "keep", "capacity", "would_exceed_donor"
    double reward = 0.0;
};

struct PolicyRecord {
    std::int64_t round = 0;
    Rank rank = 0;
    Feature theta{};
};

struct StatusCounts {
    std::int64_t out_of_domain = 0;
    std::int64_t max_steps = 0;
    std::int64_t stopped = 0;
    std::int64_t total() const { return out_of_domain + max_steps + stopped; }
};

struct MetricsReport {
    std::string strategy;
    std::uint64_t seed = 0;
    int n_p = 0;
    int order = 0;
    double makespan = 0.0;
    std::int64_t rounds = 0;
    bool round_cap_exceeded = false;
    std::int64_t particles = 0;
    std::int64_t total_steps = 0;
    std::int64_t migrations = 0;
    StatusCounts status;
    std::vector<RankClock> ranks;
    std::vector<RoundRecord> round_log;
    std::vector<DonationRecord> donations;
    std::vector<PolicyRecord> policy_trace;
    std::vector<ActivityInterval> activity;
};

/// MAX/AVG of per-rank advection time.
inline double imbalance(const std::vector<RankClock>& ranks) {
    if (ranks.empty()) throw NoWork("no ranks");
    double mx = 0.0, sum = 0.0;
    for (const auto& r : ranks) {
        mx = std::max(mx, r.busy);
        sum += r.busy;
    }
    if (!(sum > 0.0)) throw NoWork("no advection work was done");
    return mx / (sum / static_cast<double>(ranks.size()));
}

inline double imbalance(const MetricsReport& r) { return imbalance(r.ranks); }

/// Pooled over all rounds: sum |w - a| / sum a.
inline double estimation_error(const MetricsReport& r) {
    double diff = 0.0, total = 0.0;
    for (const auto& rr : r.round_log) {
        diff += rr.abs_error;
        total += rr.actual;
    }
    if (!(total > 0.0)) throw DivideByZero("no advection time recorded");
    return diff / total;
}

/// makespan_1 / (n_p * makespan_np).
inline double parallel_efficiency(double makespan_np, double makespan_1, int n_p) {
    return makespan_1 / (static_cast<double>(n_p) * makespan_np);
}

namespace detail {

inline std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::ofstream open_out(const std::filesystem::path& p) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out) throw IoFailure("cannot write " + p.string());
    return out;
}

} // namespace detail

inline std::string summary_text(const MetricsReport& r) {
    using detail::fmt_double;
    std::string s;
    auto kv = [&](const std::string& k, const std::string& v) { s += k + " = " + v + "\n"; };
    kv("strategy", r.strategy);
    kv("seed", std::to_string(r.seed));
    kv("processes", std::to_string(r.n_p));
    kv("order", std::to_string(r.order));
    kv("makespan", fmt_double(r.makespan));
    kv("rounds", std::to_string(r.rounds));
    kv("round_cap_exceeded", r.round_cap_exceeded ? "true" : "false");
    kv("particles", std::to_string(r.particles));
    kv("total_steps", std::to_string(r.total_steps));
    kv("migrations", std::to_string(r.migrations));
    kv("terminated_out_of_domain", std::to_string(r.status.out_of_domain));
    kv("terminated_max_steps", std::to_string(r.status.max_steps));
    kv("terminated_stopped", std::to_string(r.status.stopped));
    double imb = std::numeric_limits<double>::quiet_NaN();
    try {
        imb = imbalance(r);
    } catch (const NoWork&) {
    }
    kv("imbalance", fmt_double(imb));
    double err = std::numeric_limits<double>::quiet_NaN();
    try {
        err = estimation_error(r);
    } catch (const DivideByZero&) {
    }
    kv("estimation_error", fmt_double(err));
    for (std::size_t k = 0; k < r.ranks.size(); ++k) {
        const auto& c = r.ranks[k];
        const std::string p = "rank." + std::to_string(k) + ".";
        kv(p + "busy", fmt_double(c.busy));
        kv(p + "comm", fmt_double(c.comm));
        kv(p + "idle", fmt_double(c.idle));
        kv(p + "steps", std::to_string(c.steps));
    }
    return s;
}

/// Writes summary.txt, gantt.csv, estimation_error.csv, donations.csv and
/// policy_trace.csv into `dir`, creating it if needed.
inline void export_report(const MetricsReport& r, const std::filesystem::path& dir) {
    using detail::fmt_double;
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoFailure("cannot create " + dir.string() + ": " + ec.message());

    detail::open_out(dir / "summary.txt") << summary_text(r);

    {
        auto out = detail::open_out(dir / "gantt.csv");
        auto rows = r.activity;
        std::stable_sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
            return a.rank != b.rank ? a.rank < b.rank : a.t_start < b.t_start;
        });
        out << "rank,kind,t_start,t_end\n";
        for (const auto& a : rows)
            out << a.rank << ',' << to_string(a.kind) << ',' << fmt_double(a.t_start) << ','
                << fmt_double(a.t_end) << '\n';
    }
    {
        auto out = detail::open_out(dir / "estimation_error.csv");
        out << "round,estimated,actual,abs_error,relative_error,particles,wall\n";
        for (const auto& rr : r.round_log)
            out << rr.round << ',' << fmt_double(rr.estimated) << ',' << fmt_double(rr.actual)
                << ',' << fmt_double(rr.abs_error) << ',' << fmt_double(rr.relative_error())
                << ',' << rr.particles_traced << ',' << fmt_double(rr.wall) << '\n';
    }
    {
        auto out = detail::open_out(dir / "donations.csv");
        out << "round,donor,block,target,accepted,reason,reward\n";
        for (const auto& d : r.donations)
            out << d.round << ',' << d.donor << ',' << d.block << ',' << d.target << ','
                << (d.accepted ? 1 : 0) << ',' << d.reason << ',' << fmt_double(d.reward) << '\n';
    }
    {
        auto out = detail::open_out(dir / "policy_trace.csv");
        out << "round,rank,theta0,theta1,theta2\n";
        for (const auto& p : r.policy_trace)
            out << p.round << ',' << p.rank << ',' << fmt_double(p.theta[0]) << ','
                << fmt_double(p.theta[1]) << ',' << fmt_double(p.theta[2]) << '\n';
    }
}

/// Reads summary.txt back as key/value strings.
inline std::map<std::string, std::string> read_summary(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw IoFailure("cannot read " + file.string());
    std::map<std::string, std::string> kv;
    std::string line;
    while (std::getline(in, line)) {
        const auto eq = line.find(" = ");
        if (eq == std::string::npos) continue;
        kv[line.substr(0, eq)] = line.substr(eq + 3);
    }
    return kv;
}

} // namespace flowlb
