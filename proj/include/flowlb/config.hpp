#pragma once

// Experiment configuration and its JSON file format.
//
// Format version 1. Every key is optional except "field"; unknown keys are
// rejected so typos surface as ConfigError. See samples/ for full examples.

#include "flowlb/advection.hpp"
#include "flowlb/comm_model.hpp"
#include "flowlb/errors.hpp"
#include "flowlb/rl_agent.hpp"
#include "flowlb/vector_field.hpp"

#include <nlohmann/json.hpp>

#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <set>
#include <string>
#include <vector>

namespace flowlb {

inline constexpr int kConfigVersion = 1;

enum class Strategy { rl_donation, static_assignment, greedy_donation, work_requesting };

inline const char* to_string(Strategy s) {
    switch (s) {
    case Strategy::rl_donation: return "rl_donation";
    case Strategy::static_assignment: return "static";
    case Strategy::greedy_donation: return "greedy_donation";
    case Strategy::work_requesting: return "work_requesting";
    }
    return "?";
}

inline Strategy parse_strategy(const std::string& s) {
    if (s == "rl_donation" || s == "rl") return Strategy::rl_donation;
    if (s == "static") return Strategy::static_assignment;
    if (s == "greedy_donation" || s == "greedy") return Strategy::greedy_donation;
    if (s == "work_requesting") return Strategy::work_requesting;
    throw ConfigError("unknown strategy '" + s + "'");
}

enum class SeedingKind { uniform, local_box, grid_points };

struct SeedingSpec {
    SeedingKind kind = SeedingKind::uniform;
    std::int64_t count = 1000;
    Vec3 box_min{};
    Vec3 box_max{};
    /// Lattice resolution for grid_points on analytic fields (0 = use grid dims).
    std::array<int, 3> resolution{0, 0, 0};
};

/// Ground-truth cost of one transfer event: latency + per_entity * count,
/// scaled by (1 + noise * N(0,1)).
struct LinkModel {
    double latency = 1e-3;
    double per_entity = 1e-5;
    double noise = 0.0;
};

struct NetworkModel {
    LinkModel block{1e-3, 1e-2, 0.0};
    LinkModel particle{1e-3, 1e-5, 0.0};
};

struct SimConfig {
    FieldSpec field = make_abc_flow();
    std::vector<int> blocks_per_axis{4, 4, 4};
    int n_p = 4;
    SeedingSpec seeding;
    /// h = 0 selects min block edge / 16.
    TracingParams tracing{0.0, 1024, 1e-12};
    int order = 4;
    NetworkModel network;
    double seconds_per_step = 1e-6;
    /// Optional per-rank override of seconds_per_step.
    std::vector<double> rank_seconds_per_step;
    Strategy strategy = Strategy::rl_donation;
    std::uint64_t seed = 1;
    std::int64_t round_cap = 100000;
    RmsPropConfig optimizer;
    CommPrior comm_prior;
    std::size_t comm_capacity = 1024;
    /// 0 selects 4x the initial blocks per process.
    int memory_capacity = 0;
    /// I/O cost of loading a block the work_requesting baseline does not hold.
    double block_load_seconds = 5e-3;
    int seed_batch_count = 10;
    int threads = 1;

    double rank_speed(Rank r) const {
        return r < static_cast<Rank>(rank_seconds_per_step.size()) ? rank_seconds_per_step[r]
                                                                    : seconds_per_step;
    }
};

namespace detail {

class KeyChecker {
  public:
    KeyChecker(const nlohmann::json& j, std::string where) : j_(j), where_(std::move(where)) {
        if (!j_.is_object()) throw ConfigError(where_ + " must be an object");
    }
    ~KeyChecker() noexcept(false) {
        if (std::uncaught_exceptions() > 0) return;
        for (auto it = j_.begin(); it != j_.end(); ++it)
            if (!seen_.contains(it.key()))
                throw ConfigError("unknown key '" + it.key() + "' in " + where_);
    }
    const nlohmann::json* get(const std::string& key) {
        seen_.insert(key);
        auto it = j_.find(key);
        return it == j_.end() ? nullptr : &*it;
    }
    template <class T> void read(const std::string& key, T& out) {
        if (const auto* v = get(key)) {
            try {
                out = v->get<T>();
            } catch (const nlohmann::json::exception& e) {
                throw ConfigError(where_ + "." + key + ": " + e.what());
            }
        }
    }
    void read_vec(const std::string& key, Vec3& out) {
        if (const auto* v = get(key)) {
            std::vector<double> xs;
            try {
                xs = v->get<std::vector<double>>();
            } catch (const nlohmann::json::exception& e) {
                throw ConfigError(where_ + "." + key + ": " + e.what());
            }
            if (xs.size() < 2 || xs.size() > 3)
                throw ConfigError(where_ + "." + key + " needs 2 or 3 values");
            out = {xs[0], xs[1], xs.size() > 2 ? xs[2] : 0.0};
        }
    }

  private:
    const nlohmann::json& j_;
    std::string where_;
    std::set<std::string> seen_;
};

inline FieldSpec parse_field(const nlohmann::json& j, const std::filesystem::path& base) {
    KeyChecker k(j, "field");
    std::string kind;
    k.read("kind", kind);
    if (kind == "abc_flow" || kind == "abc") {
        AbcParams p;
        k.read("A", p.A);
        k.read("B", p.B);
        k.read("C", p.C);
        const double tau = 2.0 * std::numbers::pi;
        Vec3 lo{0, 0, 0}, hi{tau, tau, tau};
        k.read_vec("domain_min", lo);
        k.read_vec("domain_max", hi);
        return make_abc_flow(p, lo, hi);
    }
    if (kind == "double_gyre") {
        DoubleGyreParams p;
        k.read("A", p.A);
        k.read("eps", p.eps);
        k.read("omega", p.omega);
        double t0 = 0.0, t1 = 20.0;
        k.read("t0", t0);
        k.read("t1", t1);
        Vec3 lo{0, 0, 0}, hi{2, 1, 0};
        k.read_vec("domain_min", lo);
        k.read_vec("domain_max", hi);
        if (!(t1 > t0)) throw ConfigError("double_gyre needs t1 > t0");
        return make_double_gyre(p, t0, t1, lo, hi);
    }
    if (kind == "grid") {
        std::string header, raw;
        k.read("header", header);
        k.read("raw", raw);
        if (header.empty()) throw ConfigError("grid field needs a header path");
        auto resolve = [&](const std::string& p) {
            std::filesystem::path path(p);
            return path.is_absolute() ? path : base / path;
        };
        try {
            return load_grid_files(resolve(header), raw.empty() ? std::filesystem::path{}
                                                                : resolve(raw));
        } catch (const error& e) {
            throw ConfigError(std::string("loading grid field: ") + e.what());
        }
    }
    throw ConfigError("unknown field kind '" + kind + "'");
}

inline LinkModel parse_link(const nlohmann::json& j, LinkModel def, const std::string& where) {
    KeyChecker k(j, where);
    k.read("latency", def.latency);
    k.read("per_entity", def.per_entity);
    k.read("noise", def.noise);
    if (def.latency < 0 || def.per_entity < 0 || def.noise < 0)
        throw ConfigError(where + " values must be non-negative");
    return def;
}

} // namespace detail

inline void validate(const SimConfig& c);

/// Parses a configuration document. Relative file references (grid fields)
/// resolve against `base`.
inline SimConfig parse_config(const nlohmann::json& j, const std::filesystem::path& base = {}) {
    SimConfig c;
    detail::KeyChecker k(j, "config");

    int version = kConfigVersion;
    k.read("version", version);
    if (version != kConfigVersion)
        throw ConfigError("unsupported config version " + std::to_string(version));

    const auto* field = k.get("field");
    if (!field) throw ConfigError("config needs a 'field' section");
    c.field = detail::parse_field(*field, base);

    if (const auto* d = k.get("decomposition")) {
        detail::KeyChecker dk(*d, "decomposition");
        dk.read("blocks_per_axis", c.blocks_per_axis);
    }
    k.read("processes", c.n_p);

    if (const auto* s = k.get("seeding")) {
        detail::KeyChecker sk(*s, "seeding");
        std::string kind = "uniform";
        sk.read("kind", kind);
        if (kind == "uniform") c.seeding.kind = SeedingKind::uniform;
        else if (kind == "local_box") c.seeding.kind = SeedingKind::local_box;
        else if (kind == "grid_points") c.seeding.kind = SeedingKind::grid_points;
        else throw ConfigError("unknown seeding kind '" + kind + "'");
        sk.read("count", c.seeding.count);
        sk.read_vec("box_min", c.seeding.box_min);
        sk.read_vec("box_max", c.seeding.box_max);
        sk.read("resolution", c.seeding.resolution);
        sk.read("batches", c.seed_batch_count);
    }

    if (const auto* t = k.get("tracing")) {
        detail::KeyChecker tk(*t, "tracing");
        tk.read("step_size", c.tracing.h);
        tk.read("max_steps", c.tracing.max_steps);
        tk.read("v_eps", c.tracing.v_eps);
    }

    if (const auto* e = k.get("estimation")) {
        detail::KeyChecker ek(*e, "estimation");
        ek.read("order", c.order);
    }

    if (const auto* n = k.get("network")) {
        detail::KeyChecker nk(*n, "network");
        if (const auto* b = nk.get("block"))
            c.network.block = detail::parse_link(*b, c.network.block, "network.block");
        if (const auto* p = nk.get("particle"))
            c.network.particle = detail::parse_link(*p, c.network.particle, "network.particle");
        nk.read("record_capacity", c.comm_capacity);
        if (const auto* pr = nk.get("prior")) {
            detail::KeyChecker pk(*pr, "network.prior");
            pk.read("block_per_entity", c.comm_prior.block_per_entity);
            pk.read("particle_per_entity", c.comm_prior.particle_per_entity);
            pk.read("latency", c.comm_prior.latency);
        }
    }

    if (const auto* cm = k.get("compute")) {
        detail::KeyChecker ck(*cm, "compute");
        ck.read("seconds_per_step", c.seconds_per_step);
        ck.read("per_rank", c.rank_seconds_per_step);
    }

    if (const auto* b = k.get("balancing")) {
        detail::KeyChecker bk(*b, "balancing");
        std::string strategy;
        bk.read("strategy", strategy);
        if (!strategy.empty()) c.strategy = parse_strategy(strategy);
        bk.read("learning_rate", c.optimizer.learning_rate);
        bk.read("rmsprop_decay", c.optimizer.decay);
        bk.read("rmsprop_epsilon", c.optimizer.epsilon);
        bk.read("memory_capacity", c.memory_capacity);
        bk.read("block_load_seconds", c.block_load_seconds);
    }

    k.read("seed", c.seed);
    k.read("round_cap", c.round_cap);
    k.read("threads", c.threads);

    validate(c);
    return c;
}

inline SimConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    return parse_config(j, path.parent_path());
}

inline void validate(const SimConfig& c) {
    if (c.n_p < 1) throw ConfigError("processes must be >= 1");
    if (c.seeding.count < 1 && c.seeding.kind != SeedingKind::grid_points)
        throw ConfigError("seed count must be >= 1");
    if (c.round_cap < 1) throw ConfigError("round_cap must be >= 1");
    if (c.order < 0 || c.order > kMaxOrder) throw ConfigError("order must be in [0, 8]");
    if (c.tracing.h < 0) throw ConfigError("step_size must be >= 0");
    if (c.tracing.max_steps < 0) throw ConfigError("max_steps must be >= 0");
    if (!(c.seconds_per_step > 0)) throw ConfigError("seconds_per_step must be positive");
    for (double s : c.rank_seconds_per_step)
        if (!(s > 0)) throw ConfigError("per-rank seconds_per_step must be positive");
    if (!(c.optimizer.learning_rate > 0)) throw ConfigError("learning_rate must be positive");
    if (c.seed_batch_count < 1) throw ConfigError("seed batches must be >= 1");
    if (c.threads < 1) throw ConfigError("threads must be >= 1");
    if (c.comm_capacity < 1) throw ConfigError("record_capacity must be >= 1");
    if (c.seeding.kind == SeedingKind::local_box)
        for (int a = 0; a < c.field.spatial_dim(); ++a)
            if (!(c.seeding.box_min[a] <= c.seeding.box_max[a]))
                throw ConfigError("seeding box is reversed");
}

} // namespace flowlb
