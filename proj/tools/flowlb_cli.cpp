#include "flowlb/flowlb.hpp"
#include "oracles.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace {

struct Common {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string strategy;
    std::string out;
};

flowlb::SimConfig load(const Common& c) {
    flowlb::SimConfig cfg = flowlb::load_config(c.config);
    if (c.seed) cfg.seed = *c.seed;
    if (!c.strategy.empty()) cfg.strategy = flowlb::parse_strategy(c.strategy);
    return cfg;
}

double or_nan(auto&& f) {
    try {
        return f();
    } catch (const flowlb::error&) {
        return std::nan("");
    }
}

int cmd_run(const Common& c) {
    const flowlb::SimConfig cfg = load(c);
    const flowlb::MetricsReport r = flowlb::run_simulation(cfg);
    std::cout << flowlb::summary_text(r);
    if (!c.out.empty()) flowlb::export_report(r, c.out);
    return 0;
}

int cmd_compare(const Common& c) {
    const flowlb::SimConfig base = load(c);
    std::printf("%-16s %14s %10s %10s %8s %7s\n", "strategy", "makespan", "imbalance", "est_error",
                "rounds", "moves");
    for (auto s : {flowlb::Strategy::static_assignment, flowlb::Strategy::rl_donation,
                   flowlb::Strategy::greedy_donation, flowlb::Strategy::work_requesting}) {
        flowlb::SimConfig cfg = base;
        cfg.strategy = s;
        const auto r = flowlb::run_simulation(cfg);
        std::printf("%-16s %14.6f %10.4f %10.4f %8lld %7lld\n", flowlb::to_string(s), r.makespan,
                    or_nan([&] { return flowlb::imbalance(r); }),
                    or_nan([&] { return flowlb::estimation_error(r); }),
                    static_cast<long long>(r.rounds), static_cast<long long>(r.migrations));
        if (!c.out.empty())
            flowlb::export_report(r, std::filesystem::path(c.out) / flowlb::to_string(s));
    }
    return 0;
}

int cmd_sweep(const Common& c, int max_order, int seeds) {
    if (max_order < 0 || max_order > flowlb::kMaxOrder)
        throw flowlb::ConfigError("--max-order must be in [0, 8]");
    if (seeds < 1) throw flowlb::ConfigError("--seeds must be >= 1");
    const flowlb::SimConfig base = load(c);
    std::printf("%5s %12s\n", "order", "rel_error");
    for (int r = 0; r <= max_order; ++r) {
        double sum = 0.0;
        for (int k = 0; k < seeds; ++k) {
            flowlb::SimConfig cfg = base;
            cfg.order = r;
            cfg.seed = base.seed + static_cast<std::uint64_t>(k);
            sum += or_nan([&] { return flowlb::estimation_error(flowlb::run_simulation(cfg)); });
        }
        std::printf("%5d %12.6f\n", r, sum / seeds);
    }
    return 0;
}

int cmd_selftest(std::uint64_t seed) {
    bool all = true;
    for (const auto& r : flowlb::oracle::run_property_suite(seed)) {
        std::printf("%s  %s%s%s\n", r.passed ? "PASS" : "FAIL", r.name.c_str(),
                    r.detail.empty() ? "" : "  ", r.detail.c_str());
        all = all && r.passed;
    }
    return all ? 0 : 2;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Simulator for load-balanced data-parallel particle tracing"};
    app.require_subcommand(1);

    Common common;
    int max_order = 4, seeds = 1;
    std::uint64_t selftest_seed = 7;

    auto add_common = [&](CLI::App* sub, bool strategy) {
        sub->add_option("--config", common.config, "experiment config (JSON)")
            ->required()
            ->check(CLI::ExistingFile);
        sub->add_option("--seed", common.seed, "RNG seed, overrides the config");
        sub->add_option("--out", common.out, "directory for exported reports");
        if (strategy)
            sub->add_option("--strategy", common.strategy,
                            "rl_donation | static | greedy_donation | work_requesting");
    };
    auto* run = app.add_subcommand("run", "run one experiment");
    add_common(run, true);
    auto* compare = app.add_subcommand("compare", "run the scenario under every strategy");
    add_common(compare, false);
    auto* sweep = app.add_subcommand("sweep-order", "estimation error for orders 0..R");
    add_common(sweep, true);
    sweep->add_option("--max-order", max_order, "largest order R");
    sweep->add_option("--seeds", seeds, "seeds averaged per order");
    auto* self = app.add_subcommand("selftest", "check the library against reference oracles");
    self->add_option("--seed", selftest_seed, "RNG seed for the random instances");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        if (*run) return cmd_run(common);
        if (*compare) return cmd_compare(common);
        if (*sweep) return cmd_sweep(common, max_order, seeds);
        if (*self) return cmd_selftest(selftest_seed);
    } catch (const flowlb::ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const flowlb::TooFewBlocks& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
