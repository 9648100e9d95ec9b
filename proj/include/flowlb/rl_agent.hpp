#pragma once

// Per-process work donation agent.
//
// A donor considers one sampled block i and the candidate targets
// friend_set(l) + {l}. Each target gets a three-component feature vector
// (workload gap, block transfer cost, particle transfer cost saving); the
// policy is a softmax over (phi . theta) / w_i and theta is trained by
// REINFORCE with RMSProp, projected onto theta >= 0.

#include "flowlb/domain_decomp.hpp"
#include "flowlb/errors.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace flowlb {

using Feature = std::array<double, 3>;
using BlockSet = std::set<BlockIndex>;

/// Particles crossing between neighbouring blocks, keyed (from, to).
/// counts.at({i, j}) is the number of particles leaving i for j.
using BoundaryCounts = std::map<std::pair<BlockIndex, BlockIndex>, std::uint64_t>;

inline std::uint64_t crossing(const BoundaryCounts& counts, BlockIndex from, BlockIndex to) {
    auto it = counts.find({from, to});
    return it == counts.end() ? 0 : it->second;
}

struct TransferCosts {
    double block_send = 0.0;
    double block_recv = 0.0;
    double particle_send = 0.0;
    double particle_recv = 0.0;
};

struct RmsPropConfig {
    double learning_rate = 0.01;
    double decay = 0.99;
    double epsilon = 1e-8;
};

struct PolicyParams {
    Feature theta{1.0, 1.0, 1.0};
    Feature sq_avg{0.0, 0.0, 0.0};
    RmsPropConfig optimizer;
};

struct Action {
    BlockIndex block = 0;
    Rank target = 0;
};

/// What a donor observes when deciding about one block.
struct DecisionContext {
    Rank owner = 0;
    BlockIndex block = 0;
    double block_workload = 0.0; ///< w_i, seconds
    /// cost_a of the owner and each friend, seconds.
    std::map<Rank, double> workloads;
    TransferCosts costs;
    /// (j, owner of j) for every j in the block's neighborhood.
    std::vector<std::pair<BlockIndex, Rank>> neighbor_owners;
    /// n~(i|j): particles about to enter the block from neighbor j.
    std::map<BlockIndex, std::uint64_t> incoming_from;
};

// ---- cost functions -------------------------------------------------------

inline double advection_cost(const BlockSet& blocks, const std::map<BlockIndex, double>& w) {
    double sum = 0.0;
    for (BlockIndex b : blocks)
        if (auto it = w.find(b); it != w.end()) sum += it->second;
    return sum;
}

inline double block_transfer_cost(const BlockSet& before, const BlockSet& after, double d_send,
                                  double d_recv) {
    std::size_t sent = 0, received = 0;
    for (BlockIndex b : before)
        if (!after.contains(b)) ++sent;
    for (BlockIndex b : after)
        if (!before.contains(b)) ++received;
    return static_cast<double>(sent) * d_send + static_cast<double>(received) * d_recv;
}

/// Particle forwarding cost of a process whose blocks change from `before`
/// to `after`: particles leaving an old block for a block it will not own are
/// sent; particles entering a new-owned block from a block it did not own are
/// received.
inline double particle_transfer_cost(const BlockSet& before, const BlockSet& after,
                                     const Decomposition& decomp, const BoundaryCounts& counts,
                                     double d_send, double d_recv) {
    double cost = 0.0;
    for (BlockIndex i : before)
        for (BlockIndex j : decomp.neighbors(i))
            if (!after.contains(j)) cost += static_cast<double>(crossing(counts, i, j)) * d_send;
    for (BlockIndex i : after)
        for (BlockIndex j : decomp.neighbors(i))
            if (!before.contains(j)) cost += static_cast<double>(crossing(counts, j, i)) * d_recv;
    return cost;
}

inline double process_cost(const BlockSet& before, const BlockSet& after,
                           const std::map<BlockIndex, double>& estimates,
                           const Decomposition& decomp, const BoundaryCounts& counts,
                           const TransferCosts& c) {
    return advection_cost(after, estimates) +
           block_transfer_cost(before, after, c.block_send, c.block_recv) +
           particle_transfer_cost(before, after, decomp, counts, c.particle_send,
                                  c.particle_recv);
}

/// max + population standard deviation over a neighborhood's costs.
inline double local_exec_cost(std::span<const double> costs) {
    if (costs.empty()) throw EmptyNeighborhood("local execution cost needs at least one process");
    const double n = static_cast<double>(costs.size());
    const double mean = std::accumulate(costs.begin(), costs.end(), 0.0) / n;
    double var = 0.0;
    for (double c : costs) var += (c - mean) * (c - mean);
    return *std::max_element(costs.begin(), costs.end()) + std::sqrt(var / n);
}

inline double local_exec_cost(const std::map<Rank, double>& costs) {
    std::vector<double> v;
    v.reserve(costs.size());
    for (const auto& [r, c] : costs) v.push_back(c);
    return local_exec_cost(v);
}

inline double reward(const std::map<Rank, double>& before, const std::map<Rank, double>& after) {
    if (before == after) return 0.0;
    return local_exec_cost(before) - local_exec_cost(after);
}

// ---- policy ---------------------------------------------------------------

inline Feature feature_vector(const DecisionContext& ctx, const Action& a) {
    Feature phi{0.0, 0.0, 0.0};
    if (a.target != ctx.owner) {
        phi[0] = (ctx.workloads.at(ctx.owner) - ctx.block_workload) - ctx.workloads.at(a.target);
        phi[1] = -(ctx.costs.block_send + ctx.costs.block_recv);
    }
    const double per_particle = ctx.costs.particle_send + ctx.costs.particle_recv;
    double gained = 0.0, lost = 0.0;
    for (const auto& [j, owner_j] : ctx.neighbor_owners) {
        auto it = ctx.incoming_from.find(j);
        if (it == ctx.incoming_from.end()) continue;
        const double n = static_cast<double>(it->second) * per_particle;
        if (owner_j == a.target) gained += n;
        if (owner_j == ctx.owner) lost += n;
    }
    phi[2] = gained - lost;
    return phi;
}

inline double latent(const Feature& theta, const Feature& phi, double block_workload) {
    if (!(block_workload > 0.0)) throw ZeroWorkload("latent needs a positive block workload");
    return (phi[0] * theta[0] + phi[1] * theta[1] + phi[2] * theta[2]) / block_workload;
}

inline std::vector<double> softmax(std::span<const double> z) {
    std::vector<double> p(z.size());
    if (z.empty()) return p;
    const double zmax = *std::max_element(z.begin(), z.end());
    double sum = 0.0;
    for (std::size_t k = 0; k < z.size(); ++k) sum += (p[k] = std::exp(z[k] - zmax));
    for (double& v : p) v /= sum;
    return p;
}

/// Candidate targets for a donor: its friends and itself, ascending.
inline std::vector<Rank> candidate_targets(Rank owner, int n_p) {
    auto c = friend_set(owner, n_p);
    c.push_back(owner);
    std::sort(c.begin(), c.end());
    return c;
}

/// Action probabilities aligned with `candidates`.
inline std::vector<double> policy(const Feature& theta, const DecisionContext& ctx,
                                  std::span<const Rank> candidates) {
    std::vector<double> z;
    z.reserve(candidates.size());
    for (Rank t : candidates)
        z.push_back(latent(theta, feature_vector(ctx, {ctx.block, t}), ctx.block_workload));
    return softmax(z);
}

/// d/dtheta ln pi(action): (phi(a) - sum_a' p(a') phi(a')) / w_i.
inline Feature log_policy_gradient(const DecisionContext& ctx, std::span<const Rank> candidates,
                                   const Action& action, std::span<const double> probs) {
    Feature expected{0.0, 0.0, 0.0};
    for (std::size_t k = 0; k < candidates.size(); ++k) {
        const Feature phi = feature_vector(ctx, {ctx.block, candidates[k]});
        for (int c = 0; c < 3; ++c) expected[c] += probs[k] * phi[c];
    }
    const Feature taken = feature_vector(ctx, action);
    Feature g;
    for (int c = 0; c < 3; ++c) g[c] = (taken[c] - expected[c]) / ctx.block_workload;
    return g;
}

/// One RMSProp ascent step on reward * gradient, then theta >= 0.
inline PolicyParams update_policy(PolicyParams params, const Feature& gradient, double reward) {
    if (reward == 0.0) return params;
    const auto& opt = params.optimizer;
    for (int c = 0; c < 3; ++c) {
        const double g = gradient[c] * reward;
        params.sq_avg[c] = opt.decay * params.sq_avg[c] + (1.0 - opt.decay) * g * g;
        params.theta[c] += opt.learning_rate * g / (std::sqrt(params.sq_avg[c]) + opt.epsilon);
        params.theta[c] = std::max(params.theta[c], 0.0);
    }
    return params;
}

/// Index drawn from a discrete distribution given u in [0, 1).
inline std::size_t sample_index(std::span<const double> probs, double u) {
    double acc = 0.0;
    for (std::size_t k = 0; k < probs.size(); ++k) {
        acc += probs[k];
        if (u < acc) return k;
    }
    return probs.empty() ? 0 : probs.size() - 1;
}

/// Structured-text snapshot of an agent's parameters.
inline std::string dump_policy(const PolicyParams& p) {
    std::ostringstream out;
    out.precision(17);
    out << "theta = " << p.theta[0] << ' ' << p.theta[1] << ' ' << p.theta[2] << '\n'
        << "sq_avg = " << p.sq_avg[0] << ' ' << p.sq_avg[1] << ' ' << p.sq_avg[2] << '\n'
        << "learning_rate = " << p.optimizer.learning_rate << '\n'
        << "decay = " << p.optimizer.decay << '\n'
        << "epsilon = " << p.optimizer.epsilon << '\n';
    return out.str();
}

} // namespace flowlb
