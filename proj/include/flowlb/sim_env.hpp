#pragma once

// Round-based simulation of data-parallel particle tracing.
//
// A round is: estimate each block's incoming work, optionally rebalance block
// ownership, forward particles to the new owners, trace every queued particle
// to the exit of its current block, then advance a barrier clock. All ranks
// live in one process; ranks only share data through the routines below, and
// every random draw comes from a seeded per-rank or per-purpose stream.

#include "flowlb/advection.hpp"
#include "flowlb/comm_model.hpp"
#include "flowlb/config.hpp"
#include "flowlb/domain_decomp.hpp"
#include "flowlb/metrics.hpp"
#include "flowlb/random.hpp"
#include "flowlb/rl_agent.hpp"
#include "flowlb/workload_model.hpp"

#include <algorithm>
#include <cstdint>
#include <deque>
#include <map>
#include <set>
#include <span>
#include <string>
#include <thread>
#include <utility>
#include <vector>

namespace flowlb {

/// Splits `count` items into `batches` near-equal parts; the first
/// count % batches parts get one extra item.
inline std::vector<std::int64_t> split_batches(std::int64_t count, int batches) {
    if (batches < 1) throw ConfigError("batch count must be >= 1");
    std::vector<std::int64_t> out(batches, count / batches);
    for (std::int64_t k = 0; k < count % batches; ++k) ++out[k];
    return out;
}

/// Duration of one transfer of `count` entities over `link`. No entities, no
/// event: returns 0 without drawing noise.
inline double simulate_transfer(const LinkModel& link, std::int64_t count, Rng& rng) {
    if (count <= 0) return 0.0;
    double y = link.latency + link.per_entity * static_cast<double>(count);
    if (link.noise > 0.0) y *= 1.0 + link.noise * rng.normal();
    return std::max(y, 0.0);
}

inline std::vector<Vec3> generate_seed_points(const SimConfig& c, Rng& rng) {
    const FieldSpec& f = c.field;
    const int sd = f.spatial_dim();
    std::vector<Vec3> pts;
    switch (c.seeding.kind) {
    case SeedingKind::uniform:
    case SeedingKind::local_box: {
        Vec3 lo = f.domain_min(), hi = f.domain_max();
        if (c.seeding.kind == SeedingKind::local_box)
            for (int a = 0; a < sd; ++a) {
                lo[a] = std::max(lo[a], c.seeding.box_min[a]);
                hi[a] = std::min(hi[a], c.seeding.box_max[a]);
                if (!(lo[a] <= hi[a])) throw ConfigError("seeding box misses the domain");
            }
        pts.reserve(static_cast<std::size_t>(c.seeding.count));
        for (std::int64_t k = 0; k < c.seeding.count; ++k) {
            Vec3 p{0, 0, 0};
            for (int a = 0; a < sd; ++a) p[a] = rng.uniform(lo[a], hi[a]);
            pts.push_back(p);
        }
        break;
    }
    case SeedingKind::grid_points: {
        std::array<int, 3> res = c.seeding.resolution;
        for (int a = 0; a < sd; ++a)
            if (res[a] <= 0) res[a] = f.grid() ? f.grid()->dims[a] : 16;
        if (sd == 2) res[2] = 1;
        for (int k = 0; k < res[2]; ++k)
            for (int j = 0; j < res[1]; ++j)
                for (int i = 0; i < res[0]; ++i) {
                    const std::array<int, 3> idx{i, j, k};
                    Vec3 p{0, 0, 0};
                    for (int a = 0; a < sd; ++a)
                        p[a] = f.domain_min()[a] + (f.domain_max()[a] - f.domain_min()[a]) *
                                                       (idx[a] + 0.5) / res[a];
                    pts.push_back(p);
                }
        break;
    }
    }
    return pts;
}

/// Decomposition of the configured field; unsteady fields get a time axis
/// (one block along it unless configured otherwise).
inline Decomposition make_decomposition(const SimConfig& c) {
    const Box box = domain_box(c.field);
    std::vector<int> per_axis = c.blocks_per_axis;
    if (static_cast<int>(per_axis.size()) == c.field.spatial_dim() && box.axes > c.field.spatial_dim())
        per_axis.push_back(1);
    std::vector<int> cells;
    if (const GridData* g = c.field.grid())
        for (int a = 0; a < c.field.spatial_dim(); ++a) cells.push_back(g->dims[a] - 1);
    return Decomposition(box, per_axis, c.n_p, cells);
}

struct QueuedParticle {
    Particle particle;
    Rank holder = 0; ///< rank whose memory holds the particle
};

/// Seed batches per block, in release order. Each seeding block's seeds are
/// split into `cfg.seed_batch_count` batches, remainder first.
inline std::vector<std::deque<std::vector<Particle>>> seed_batches(const SimConfig& cfg,
                                                                   const Decomposition& decomp) {
    Rng seeding(cfg.seed, 0x73656564);
    const int nb = decomp.block_count();
    std::vector<std::vector<Particle>> per_block(nb);
    std::int64_t id = 0;
    for (const Vec3& p : generate_seed_points(cfg, seeding)) {
        Particle q;
        q.id = id++;
        q.pos = p;
        q.time = cfg.field.t0();
        q.seed_block = decomp.locate(domain_point(cfg.field, p, q.time));
        per_block[q.seed_block].push_back(q);
    }
    std::vector<std::deque<std::vector<Particle>>> out(nb);
    for (BlockIndex b = 0; b < nb; ++b) {
        if (per_block[b].empty()) continue;
        std::size_t at = 0;
        for (std::int64_t n :
             split_batches(static_cast<std::int64_t>(per_block[b].size()), cfg.seed_batch_count)) {
            out[b].emplace_back(per_block[b].begin() + at, per_block[b].begin() + at + n);
            at += n;
        }
    }
    return out;
}

struct ExchangedCounts {
    std::vector<IncomingCounts> incoming; ///< per block, keyed by length-r history
    BoundaryCounts crossings;             ///< (from, to) block pairs
};

/// Counts of particles about to be traced in each block. Queued particles
/// contribute to the crossing from their last exited block; `due` seed
/// batches (one per block, may be null) count under the seed path.
inline ExchangedCounts exchange_incoming_counts(
    std::span<const std::vector<QueuedParticle>> queues,
    std::span<const std::vector<Particle>* const> due, int order) {
    ExchangedCounts c;
    c.incoming.resize(queues.size());
    for (std::size_t b = 0; b < queues.size(); ++b) {
        for (const auto& q : queues[b]) {
            ++c.incoming[b][q.particle.history.path(order, q.particle.seed_block)];
            if (q.particle.history.size() > 0)
                ++c.crossings[{q.particle.history.recent(0), static_cast<BlockIndex>(b)}];
        }
        if (b < due.size() && due[b])
            for (const auto& p : *due[b]) ++c.incoming[b][p.history.path(order, p.seed_block)];
    }
    return c;
}

// ---- donation -------------------------------------------------------------

struct DonationInput {
    const Decomposition& decomp;
    const BlockAssignment& assignment;
    std::span<const double> steps_estimate; ///< per block
    std::span<const double> d_a;            ///< per rank, seconds per step
    std::span<const TransferCosts> costs;   ///< per rank
    const BoundaryCounts& crossings;
    int memory_capacity = 0;
    Strategy strategy = Strategy::rl_donation;
};

struct DonationDecision {
    Rank donor = 0;
    BlockIndex block = 0;
    Rank target = 0;
    bool accepted = false;
    std::string reason;
    double reward = 0.0;
    std::vector<Rank> candidates;
    std::vector<double> probs;
};

struct DonationOutcome {
    BlockAssignment assignment;
    std::vector<DonationDecision> decisions;
};

/// Current advection cost of every rank (sum of its blocks' estimates).
inline std::vector<double> advection_costs(const DonationInput& in) {
    std::vector<double> c(in.assignment.n_p, 0.0);
    for (BlockIndex b = 0; b < static_cast<BlockIndex>(in.assignment.owner.size()); ++b) {
        const Rank r = in.assignment.owner[b];
        c[r] += in.steps_estimate[b] * in.d_a[r];
    }
    return c;
}

/// One donation round. Donors (cost above their neighborhood mean) sample a
/// loaded block and pick a target with their policy, or the lowest-loaded
/// friend for the greedy baseline. Receivers first total every request into
/// their feedback workload, then accept requests in ascending donor order
/// subject to capacity and, for the learned policy, to not ending up more
/// loaded than the donor. Donor rewards are computed against the feedback,
/// i.e. as if every request had been accepted.
inline DonationOutcome donation_round(const DonationInput& in, std::vector<PolicyParams>& policies,
                                      std::vector<Rng>& rngs) {
    const int n_p = in.assignment.n_p;
    const auto& owner = in.assignment.owner;
    DonationOutcome out{in.assignment, {}};

    std::vector<BlockSet> before(n_p);
    for (BlockIndex b = 0; b < static_cast<BlockIndex>(owner.size()); ++b) before[owner[b]].insert(b);
    const std::vector<double> cost_a = advection_costs(in);

    struct Request {
        std::size_t decision;
        DecisionContext ctx;
    };
    std::vector<Request> requests;

    for (Rank l = 0; l < n_p; ++l) {
        const std::vector<Rank> cand = candidate_targets(l, n_p);
        if (cand.size() < 2) continue;
        double mean = 0.0;
        for (Rank r : cand) mean += cost_a[r];
        mean /= static_cast<double>(cand.size());
        if (!(cost_a[l] > mean)) continue;

        std::vector<BlockIndex> loaded;
        for (BlockIndex b : before[l])
            if (in.steps_estimate[b] > 0.0) loaded.push_back(b);
        if (loaded.empty()) continue;
        const BlockIndex block = loaded[rngs[l].below(loaded.size())];

        DecisionContext ctx;
        ctx.owner = l;
        ctx.block = block;
        ctx.block_workload = in.steps_estimate[block] * in.d_a[l];
        if (!(ctx.block_workload > 0.0)) continue;
        for (Rank r : cand) ctx.workloads[r] = cost_a[r];
        ctx.costs = in.costs[l];
        for (BlockIndex j : in.decomp.neighbors(block)) {
            ctx.neighbor_owners.emplace_back(j, owner[j]);
            if (const auto n = crossing(in.crossings, j, block); n > 0) ctx.incoming_from[j] = n;
        }

        DonationDecision d;
        d.donor = l;
        d.block = block;
        d.candidates = cand;
        if (in.strategy == Strategy::rl_donation) {
            d.probs = policy(policies[l].theta, ctx, cand);
            d.target = cand[sample_index(d.probs, rngs[l].uniform())];
        } else {
            d.target = -1;
            for (Rank r : cand)
                if (r != l && (d.target < 0 || cost_a[r] < cost_a[d.target])) d.target = r;
        }
        if (d.target == l) {
            d.reason = "keep";
            out.decisions.push_back(std::move(d));
            continue;
        }
        requests.push_back({out.decisions.size(), std::move(ctx)});
        out.decisions.push_back(std::move(d));
    }

    // Feedback: every requested block lands on its receiver.
    std::vector<BlockSet> requested(n_p);
    for (Rank r = 0; r < n_p; ++r) requested[r] = before[r];
    for (const auto& q : requests) requested[out.decisions[q.decision].target].insert(
        out.decisions[q.decision].block);

    auto rank_cost = [&](Rank r, const BlockSet& from, const BlockSet& to) {
        std::map<BlockIndex, double> est;
        for (BlockIndex b : to) est[b] = in.steps_estimate[b] * in.d_a[r];
        return process_cost(from, to, est, in.decomp, in.crossings, in.costs[r]);
    };
    std::vector<double> cost_now(n_p), feedback(n_p);
    for (Rank r = 0; r < n_p; ++r) {
        cost_now[r] = rank_cost(r, before[r], before[r]);
        feedback[r] = rank_cost(r, before[r], requested[r]);
    }

    for (const auto& q : requests) {
        DonationDecision& d = out.decisions[q.decision];
        BlockSet donor_after = before[d.donor];
        donor_after.erase(d.block);
        std::map<Rank, double> pre, post;
        for (Rank r : d.candidates) pre[r] = post[r] = cost_now[r];
        post[d.donor] = rank_cost(d.donor, before[d.donor], donor_after);
        post[d.target] = feedback[d.target];
        d.reward = reward(pre, post);
        if (in.strategy == Strategy::rl_donation) {
            const Feature g = log_policy_gradient(q.ctx, d.candidates, {d.block, d.target}, d.probs);
            policies[d.donor] = update_policy(policies[d.donor], g, d.reward);
        }
    }

    // Acceptance: receivers in ascending rank, requests in ascending donor rank.
    std::vector<double> load = cost_a;
    std::vector<int> held(n_p);
    for (Rank r = 0; r < n_p; ++r) held[r] = static_cast<int>(before[r].size());
    std::vector<const Request*> order;
    for (const auto& q : requests) order.push_back(&q);
    std::stable_sort(order.begin(), order.end(), [&](const Request* a, const Request* b) {
        return out.decisions[a->decision].target < out.decisions[b->decision].target;
    });
    for (const Request* q : order) {
        DonationDecision& d = out.decisions[q->decision];
        const Rank r = d.target;
        const double w_r = in.steps_estimate[d.block] * in.d_a[r];
        if (in.memory_capacity > 0 && held[r] + 1 > in.memory_capacity) {
            d.reason = "capacity";
        } else if (in.strategy == Strategy::rl_donation &&
                   load[r] + w_r > cost_a[d.donor] - q->ctx.block_workload) {
            d.reason = "would_exceed_donor";
        } else {
            d.accepted = true;
            d.reason = "accepted";
            load[r] += w_r;
            ++held[r];
            --held[d.donor];
            out.assignment.owner[d.block] = r;
        }
    }
    return out;
}

// ---- simulator ------------------------------------------------------------

class Simulator {
  public:
    explicit Simulator(SimConfig cfg)
        : cfg_(std::move(cfg)), decomp_(make_decomposition(cfg_)),
          assignment_(round_robin_assign(decomp_.block_count(), cfg_.n_p)),
          net_rng_(cfg_.seed, 0x6e6574), trees_(), rates_(cfg_.n_p),
          comm_(cfg_.n_p, CommCostModel(cfg_.comm_capacity, cfg_.comm_prior)) {
        validate(cfg_);
        if (cfg_.tracing.h <= 0.0) cfg_.tracing.h = decomp_.min_edge(cfg_.field.spatial_dim()) / 16.0;
        const int nb = decomp_.block_count();
        memory_capacity_ = cfg_.memory_capacity > 0 ? cfg_.memory_capacity
                                                    : 4 * ((nb + cfg_.n_p - 1) / cfg_.n_p);
        for (BlockIndex b = 0; b < nb; ++b) trees_.emplace_back(b, cfg_.order);
        queue_.resize(nb);
        for (Rank r = 0; r < cfg_.n_p; ++r) {
            rank_rng_.emplace_back(cfg_.seed, 1 + static_cast<std::uint64_t>(r));
            PolicyParams p;
            p.optimizer = cfg_.optimizer;
            policies_.push_back(p);
        }
        loaded_.resize(cfg_.n_p);
        for (BlockIndex b = 0; b < nb; ++b) loaded_[assignment_.owner[b]].insert(b);

        pending_ = seed_batches(cfg_, decomp_);
        for (const auto& blocks : pending_)
            for (const auto& batch : blocks) seeds_total_ += static_cast<std::int64_t>(batch.size());

        report_.strategy = to_string(cfg_.strategy);
        report_.seed = cfg_.seed;
        report_.n_p = cfg_.n_p;
        report_.order = cfg_.order;
        report_.particles = seeds_total_;
        report_.ranks.assign(cfg_.n_p, {});
    }

    bool done() const {
        for (std::size_t b = 0; b < queue_.size(); ++b)
            if (!queue_[b].empty() || !pending_[b].empty()) return false;
        return true;
    }

    /// Runs rounds until all particles terminate or the round cap is hit.
    const MetricsReport& run() {
        while (!done() && round_ < cfg_.round_cap) step();
        report_.round_cap_exceeded = !done();
        return report_;
    }

    void step() {
        const int nb = decomp_.block_count();
        const int n_p = cfg_.n_p;
        const int order = cfg_.order;

        // Incoming work per block: queued particles plus the seed batch due now.
        std::vector<const std::vector<Particle>*> due(nb, nullptr);
        for (BlockIndex b = 0; b < nb; ++b)
            if (!pending_[b].empty()) due[b] = &pending_[b].front();
        ExchangedCounts counts = exchange_incoming_counts(queue_, due, order);
        const auto& incoming = counts.incoming;
        const auto& crossings = counts.crossings;
        std::vector<double> s_hat(nb);
        for (BlockIndex b = 0; b < nb; ++b) s_hat[b] = estimate_steps(trees_[b], incoming[b]);
        const std::vector<double> d_a = effective_rates();
        for (auto& m : comm_) m.refit_all();

        std::vector<double> comm(n_p, 0.0), busy(n_p, 0.0);
        auto charge = [&](const LinkModel& link, TransferKind send, TransferKind recv, Rank from,
                          Rank to, std::int64_t count) {
            if (count <= 0) return;
            const double y = simulate_transfer(link, count, net_rng_);
            comm[from] += y;
            comm[to] += y;
            comm_[from].record_event(send, static_cast<double>(count), y);
            comm_[to].record_event(recv, static_cast<double>(count), y);
        };

        if (cfg_.strategy == Strategy::rl_donation || cfg_.strategy == Strategy::greedy_donation) {
            std::vector<TransferCosts> costs(n_p);
            for (Rank r = 0; r < n_p; ++r)
                costs[r] = {comm_[r].per_entity_cost(TransferKind::block_send),
                            comm_[r].per_entity_cost(TransferKind::block_recv),
                            comm_[r].per_entity_cost(TransferKind::particle_send),
                            comm_[r].per_entity_cost(TransferKind::particle_recv)};
            DonationInput in{decomp_, assignment_, s_hat, d_a, costs, crossings, memory_capacity_,
                             cfg_.strategy};
            DonationOutcome outcome = donation_round(in, policies_, rank_rng_);
            last_decisions_ = outcome.decisions;
            for (const auto& d : outcome.decisions) {
                report_.donations.push_back(
                    {round_, d.donor, d.block, d.target, d.accepted, d.reason, d.reward});
                if (!d.accepted) continue;
                ++report_.migrations;
                charge(cfg_.network.block, TransferKind::block_send, TransferKind::block_recv,
                       d.donor, d.target, 1);
            }
            assignment_.owner = std::move(outcome.assignment.owner);
            ++assignment_.epoch;
            if (cfg_.strategy == Strategy::rl_donation)
                for (Rank r = 0; r < n_p; ++r)
                    report_.policy_trace.push_back({round_, r, policies_[r].theta});
        }

        // Seed batches are created by the block's current owner.
        for (BlockIndex b = 0; b < nb; ++b) {
            if (pending_[b].empty()) continue;
            for (auto& p : pending_[b].front()) queue_[b].push_back({std::move(p), assignment_.owner[b]});
            pending_[b].pop_front();
        }

        // Forward particles to block owners, one event per (holder, owner) pair.
        std::map<std::pair<Rank, Rank>, std::int64_t> forwards;
        for (BlockIndex b = 0; b < nb; ++b)
            for (auto& q : queue_[b])
                if (q.holder != assignment_.owner[b]) {
                    ++forwards[{q.holder, assignment_.owner[b]}];
                    q.holder = assignment_.owner[b];
                }
        for (const auto& [pair, n] : forwards)
            charge(cfg_.network.particle, TransferKind::particle_send, TransferKind::particle_recv,
                   pair.first, pair.second, n);

        // Tracer of every queued particle; work requesting may reassign some.
        std::vector<std::vector<Rank>> tracer(nb);
        for (BlockIndex b = 0; b < nb; ++b) tracer[b].assign(queue_[b].size(), assignment_.owner[b]);
        if (cfg_.strategy == Strategy::work_requesting) request_work(tracer, comm);

        struct Task {
            BlockIndex block;
            Rank tracer;
            std::vector<Particle> particles;
        };
        std::vector<Task> tasks;
        for (BlockIndex b = 0; b < nb; ++b) {
            std::set<Rank> ranks(tracer[b].begin(), tracer[b].end());
            for (Rank r : ranks) {
                Task t{b, r, {}};
                for (std::size_t k = 0; k < queue_[b].size(); ++k)
                    if (tracer[b][k] == r) t.particles.push_back(queue_[b][k].particle);
                tasks.push_back(std::move(t));
            }
        }

        std::vector<TraceResult> results(tasks.size());
        auto work = [&](std::size_t first, std::size_t stride) {
            for (std::size_t k = first; k < tasks.size(); k += stride)
                results[k] = trace_in_block(cfg_.field, decomp_, tasks[k].block, tasks[k].particles,
                                            cfg_.tracing, cfg_.rank_speed(tasks[k].tracer));
        };
        const std::size_t threads = std::min<std::size_t>(cfg_.threads, tasks.size());
        if (threads > 1) {
            std::vector<std::thread> pool;
            for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(work, t, threads);
            for (auto& t : pool) t.join();
        } else {
            work(0, 1);
        }

        std::vector<std::vector<QueuedParticle>> next(nb);
        std::vector<double> actual(nb, 0.0);
        std::int64_t traced = 0;
        for (std::size_t k = 0; k < tasks.size(); ++k) {
            const Task& t = tasks[k];
            const TraceResult& res = results[k];
            busy[t.tracer] += res.wall_seconds_charged;
            rates_[t.tracer].record(res.total_steps, res.wall_seconds_charged);
            report_.ranks[t.tracer].steps += res.total_steps;
            report_.total_steps += res.total_steps;
            actual[t.block] += res.wall_seconds_charged;
            traced += static_cast<std::int64_t>(res.particles.size());
            for (std::size_t i = 0; i < res.particles.size(); ++i) {
                const Particle& in = t.particles[i];
                const TracedParticle& outp = res.particles[i];
                trees_[t.block].record_advection(in.history.path(order, in.seed_block),
                                                 outp.steps_in_block);
                if (outp.exit_target >= 0) {
                    next[outp.exit_target].push_back({outp.particle, t.tracer});
                    continue;
                }
                switch (outp.particle.status) {
                case ParticleStatus::out_of_domain: ++report_.status.out_of_domain; break;
                case ParticleStatus::max_steps: ++report_.status.max_steps; break;
                default: ++report_.status.stopped; break;
                }
            }
        }
        for (auto& t : trees_)
            if (t.stale()) t.aggregate();
        queue_ = std::move(next);

        RoundRecord rr;
        rr.round = round_;
        rr.particles_traced = traced;
        for (BlockIndex b = 0; b < nb; ++b) {
            const double w = s_hat[b] * d_a[assignment_.owner[b]];
            rr.estimated += w;
            rr.actual += actual[b];
            rr.abs_error += std::abs(w - actual[b]);
        }

        double wall = 0.0;
        for (Rank r = 0; r < n_p; ++r) wall = std::max(wall, comm[r] + busy[r]);
        for (Rank r = 0; r < n_p; ++r) {
            const double t0 = clock_, t1 = t0 + comm[r], t2 = t1 + busy[r], t3 = clock_ + wall;
            if (t1 > t0) report_.activity.push_back({r, ActivityKind::comm, t0, t1});
            if (t2 > t1) report_.activity.push_back({r, ActivityKind::compute, t1, t2});
            if (t3 > t2) report_.activity.push_back({r, ActivityKind::idle, t2, t3});
            auto& c = report_.ranks[r];
            c.comm += comm[r];
            c.busy += busy[r];
            c.idle += wall - comm[r] - busy[r];
        }
        rr.wall = wall;
        report_.round_log.push_back(rr);
        clock_ += wall;
        report_.makespan = clock_;
        ++round_;
        report_.rounds = round_;
    }

    /// Seconds per step used for a rank's estimates: its own history, else
    /// the mean over ranks that have traced, else 0.
    std::vector<double> effective_rates() const {
        std::vector<double> d(cfg_.n_p, 0.0);
        double sum = 0.0;
        int known = 0;
        for (const auto& r : rates_)
            if (r.has_history()) {
                sum += r.d_a();
                ++known;
            }
        const double fallback = known > 0 ? sum / known : 0.0;
        for (Rank r = 0; r < cfg_.n_p; ++r) d[r] = rates_[r].has_history() ? rates_[r].d_a() : fallback;
        return d;
    }

    const SimConfig& config() const { return cfg_; }
    const Decomposition& decomposition() const { return decomp_; }
    const BlockAssignment& assignment() const { return assignment_; }
    const std::vector<std::vector<QueuedParticle>>& queues() const { return queue_; }
    const std::vector<std::deque<std::vector<Particle>>>& pending_seeds() const { return pending_; }
    const std::vector<TrajectoriesTree>& trees() const { return trees_; }
    const std::vector<PolicyParams>& policies() const { return policies_; }
    const std::vector<CommCostModel>& comm_models() const { return comm_; }
    const MetricsReport& report() const { return report_; }
    /// Decisions of the most recent donation round.
    const std::vector<DonationDecision>& last_decisions() const { return last_decisions_; }
    std::int64_t seeds_total() const { return seeds_total_; }
    std::int64_t round() const { return round_; }
    double clock() const { return clock_; }
    int memory_capacity() const { return memory_capacity_; }

    std::int64_t queued_particles() const {
        std::int64_t n = 0;
        for (const auto& q : queue_) n += static_cast<std::int64_t>(q.size());
        return n;
    }
    std::int64_t pending_particles() const {
        std::int64_t n = 0;
        for (const auto& blocks : pending_)
            for (const auto& batch : blocks) n += static_cast<std::int64_t>(batch.size());
        return n;
    }

  private:
    /// Idle ranks take the back half of a random friend's queued particles.
    void request_work(std::vector<std::vector<Rank>>& tracer, std::vector<double>& comm) {
        const int n_p = cfg_.n_p;
        std::vector<std::vector<std::pair<BlockIndex, std::size_t>>> work(n_p);
        for (BlockIndex b = 0; b < static_cast<BlockIndex>(queue_.size()); ++b)
            for (std::size_t k = 0; k < queue_[b].size(); ++k)
                work[assignment_.owner[b]].emplace_back(b, k);
        std::vector<bool> idle(n_p);
        for (Rank r = 0; r < n_p; ++r) idle[r] = work[r].empty();

        for (Rank r = 0; r < n_p; ++r) {
            if (!idle[r]) continue;
            const auto friends = friend_set(r, n_p);
            if (friends.empty()) continue;
            const Rank victim = friends[rank_rng_[r].below(friends.size())];
            auto& list = work[victim];
            const std::size_t take = list.size() / 2;
            if (take == 0) continue;
            std::set<BlockIndex> blocks;
            for (std::size_t k = list.size() - take; k < list.size(); ++k) {
                const auto [b, idx] = list[k];
                tracer[b][idx] = r;
                blocks.insert(b);
            }
            list.resize(list.size() - take);
            for (BlockIndex b : blocks)
                if (loaded_[r].insert(b).second) comm[r] += cfg_.block_load_seconds;
            const double y = simulate_transfer(cfg_.network.particle, static_cast<std::int64_t>(take),
                                               net_rng_);
            comm[victim] += y;
            comm[r] += y;
            comm_[victim].record_event(TransferKind::particle_send, static_cast<double>(take), y);
            comm_[r].record_event(TransferKind::particle_recv, static_cast<double>(take), y);
        }
    }

    SimConfig cfg_;
    Decomposition decomp_;
    BlockAssignment assignment_;
    Rng net_rng_;
    std::vector<TrajectoriesTree> trees_;
    std::vector<AdvectionRateTracker> rates_;
    std::vector<CommCostModel> comm_;
    std::vector<PolicyParams> policies_;
    std::vector<Rng> rank_rng_;
    std::vector<std::set<BlockIndex>> loaded_;
    std::vector<std::vector<QueuedParticle>> queue_;
    std::vector<std::deque<std::vector<Particle>>> pending_;
    MetricsReport report_;
    std::vector<DonationDecision> last_decisions_;
    int memory_capacity_ = 0;
    std::int64_t seeds_total_ = 0;
    std::int64_t round_ = 0;
    double clock_ = 0.0;
};

inline MetricsReport run_simulation(const SimConfig& cfg) {
    Simulator sim(cfg);
    return sim.run();
}

} // namespace flowlb
