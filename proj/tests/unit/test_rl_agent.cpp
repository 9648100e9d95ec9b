#include "flowlb/rl_agent.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace flowlb;

namespace {

Decomposition line(int blocks) { return Decomposition(Box{1, {0}, {1}}, {blocks}, 1); }

// Donor 0 owns block 1 of a 2x2 grid; neighbours 0, 2, 3 owned as given.
DecisionContext small_context(double w_block = 2.0) {
    DecisionContext ctx;
    ctx.owner = 0;
    ctx.block = 1;
    ctx.block_workload = w_block;
    ctx.workloads = {{0, 6.0 + w_block}, {1, 2.0}};
    ctx.costs = {0.02, 0.03, 1e-4, 2e-4};
    ctx.neighbor_owners = {{0, 0}, {2, 1}, {3, 1}};
    ctx.incoming_from = {{0, 10}, {2, 4}};
    return ctx;
}

} // namespace

TEST(AdvectionCost, SumsOwnedEstimates) {
    EXPECT_EQ(advection_cost({}, {{0, 1.0}}), 0.0);
    EXPECT_DOUBLE_EQ(advection_cost({0, 1}, {{0, 2.0}, {1, 3.5}}), 5.5);
    EXPECT_DOUBLE_EQ(advection_cost({0, 1, 2}, {{0, 2.0}, {1, 3.5}, {2, 0.0}}), 5.5);
}

TEST(BlockTransferCost, Examples) {
    EXPECT_EQ(block_transfer_cost({1, 2}, {1, 2}, 0.02, 0.03), 0.0);
    EXPECT_DOUBLE_EQ(block_transfer_cost({1, 2}, {1}, 0.02, 0.03), 0.02);
    EXPECT_DOUBLE_EQ(block_transfer_cost({1}, {1, 2}, 0.02, 0.03), 0.03);
}

TEST(ParticleTransferCost, AllNeighboursLocalIsFree) {
    const auto d = line(3);
    const BoundaryCounts c{{{0, 1}, 7}, {{1, 2}, 3}, {{2, 1}, 9}};
    EXPECT_EQ(particle_transfer_cost({0, 1, 2}, {0, 1, 2}, d, c, 1e-4, 1e-4), 0.0);
}

TEST(ParticleTransferCost, SendIntoForeignNeighbour) {
    const auto d = line(2);
    const BoundaryCounts c{{{0, 1}, 10}};
    EXPECT_DOUBLE_EQ(particle_transfer_cost({0}, {0}, d, c, 1e-4, 5.0), 1e-3);
}

TEST(ParticleTransferCost, TwoProcessChain) {
    const auto d = line(2);
    const BoundaryCounts c{{{0, 1}, 5}, {{1, 0}, 5}};
    EXPECT_NEAR(particle_transfer_cost({0}, {0}, d, c, 1e-4, 1e-4), 1e-3, 1e-15);
    EXPECT_NEAR(particle_transfer_cost({1}, {1}, d, c, 1e-4, 1e-4), 1e-3, 1e-15);
}

TEST(ProcessCost, Examples) {
    const auto d = line(3);
    const TransferCosts tc{0.02, 0.03, 1e-4, 1e-4};
    EXPECT_DOUBLE_EQ(process_cost({0, 1}, {0, 1}, {{0, 2.0}, {1, 3.0}}, d, {}, tc), 5.0);
    EXPECT_EQ(process_cost({}, {}, {{0, 2.0}}, d, {}, tc), 0.0);

    // Donor owns {0, 1} with w = 3 and 2 and gives away block 1. Send terms
    // run over the old set: 0 -> 1 (4) and 1 -> 2 (8). Receive terms need a
    // neighbour outside the old set, and there is none for block 0.
    const BoundaryCounts c{{{0, 1}, 4}, {{1, 0}, 6}, {{1, 2}, 8}};
    const double got = process_cost({0, 1}, {0}, {{0, 3.0}, {1, 2.0}}, d, c, tc);
    EXPECT_NEAR(got, 3.0 + 0.02 + (4 + 8) * 1e-4, 1e-15);
}

TEST(LocalExecCost, Examples) {
    EXPECT_DOUBLE_EQ(local_exec_cost(std::vector<double>{4, 4, 4}), 4.0);
    EXPECT_DOUBLE_EQ(local_exec_cost(std::vector<double>{2, 6}), 8.0);
    EXPECT_DOUBLE_EQ(local_exec_cost(std::map<Rank, double>{{3, 3.0}}), 3.0);
    EXPECT_THROW(local_exec_cost(std::vector<double>{}), EmptyNeighborhood);
}

TEST(Reward, Examples) {
    const std::map<Rank, double> same{{0, 3.0}, {1, 1.0}};
    EXPECT_EQ(reward(same, same), 0.0);
    EXPECT_DOUBLE_EQ(reward({{0, 5.0}, {1, 4.0}}, {{0, 3.0}, {1, 7.0}}), -3.5);

    const double dt = 0.01, dt2 = 0.02;
    const double r = reward({{0, 8.0}, {1, 0.0}}, {{0, 4.0 + dt}, {1, 4.0 + dt2}});
    EXPECT_NEAR(r, (8.0 + 4.0) - (4.0 + dt2 + (dt2 - dt) / 2), 1e-12);
    EXPECT_GT(r, 0.0);
}

TEST(FeatureVector, KeepActionIsZero) {
    const auto ctx = small_context();
    const Feature phi = feature_vector(ctx, {ctx.block, ctx.owner});
    EXPECT_EQ(phi[0], 0.0);
    EXPECT_EQ(phi[1], 0.0);
    EXPECT_EQ(phi[2], 0.0);
}

TEST(FeatureVector, DonationFeatures) {
    const auto ctx = small_context();
    const Feature phi = feature_vector(ctx, {ctx.block, 1});
    EXPECT_DOUBLE_EQ(phi[0], 4.0);
    EXPECT_DOUBLE_EQ(phi[1], -0.05);
    // Gains the 4 particles from block 2, loses the 10 from block 0.
    EXPECT_NEAR(phi[2], (4.0 - 10.0) * 3e-4, 1e-15);
}

TEST(Latent, Examples) {
    EXPECT_DOUBLE_EQ(latent({1, 1, 1}, {4, -0.05, 0}, 2), 1.975);
    EXPECT_EQ(latent({1, 2, 3}, {0, 0, 0}, 2), 0.0);
    EXPECT_THROW(latent({1, 1, 1}, {4, -0.05, 0}, 0), ZeroWorkload);
}

TEST(Softmax, Examples) {
    const std::vector<double> z{0.0, std::log(3.0)};
    const auto p = softmax(z);
    EXPECT_NEAR(p[0], 0.25, 1e-15);
    EXPECT_NEAR(p[1], 0.75, 1e-15);
    const auto u = softmax(std::vector<double>{2, 2, 2, 2});
    for (double v : u) EXPECT_DOUBLE_EQ(v, 0.25);
    EXPECT_DOUBLE_EQ(softmax(std::vector<double>{-40})[0], 1.0);
}

TEST(Softmax, SumsToOneForExtremeLatents) {
    Rng rng(1, 0);
    for (int k = 0; k < 500; ++k) {
        std::vector<double> z(1 + rng.below(30));
        for (double& v : z) v = rng.uniform(-700, 700);
        double s = 0.0;
        for (double p : softmax(z)) s += p;
        EXPECT_NEAR(s, 1.0, 1e-12);
    }
}

TEST(Policy, CandidatesAreFriendsAndSelf) {
    EXPECT_EQ(candidate_targets(0, 4), (std::vector<Rank>{0, 1, 2}));
    EXPECT_EQ(candidate_targets(5, 6), (std::vector<Rank>{1, 4, 5}));
    EXPECT_EQ(candidate_targets(0, 1), (std::vector<Rank>{0}));
}

TEST(Policy, ScalingWorkloadKeepsArgmax) {
    Rng rng(2, 0);
    for (int k = 0; k < 100; ++k) {
        const auto r = oracle::random_decision(rng);
        std::vector<double> z1, z2;
        for (Rank t : r.candidates) {
            const Feature phi = feature_vector(r.ctx, {r.ctx.block, t});
            z1.push_back(latent(r.theta, phi, r.ctx.block_workload));
            z2.push_back(latent(r.theta, phi, r.ctx.block_workload * 3.7));
        }
        const auto p1 = softmax(z1);
        const auto p2 = softmax(z2);
        EXPECT_EQ(std::max_element(p1.begin(), p1.end()) - p1.begin(),
                  std::max_element(p2.begin(), p2.end()) - p2.begin());
    }
}

TEST(Gradient, IdenticalFeaturesGiveZero) {
    DecisionContext ctx;
    ctx.owner = 0;
    ctx.block = 0;
    ctx.block_workload = 1.0;
    ctx.workloads = {{0, 1.0}, {1, 0.0}, {2, 0.0}};
    const std::vector<Rank> cand{1, 2};
    const auto probs = policy({1, 1, 1}, ctx, cand);
    const Feature g = log_policy_gradient(ctx, cand, {0, 1}, probs);
    for (double v : g) EXPECT_NEAR(v, 0.0, 1e-15);
}

TEST(Gradient, DeterministicLimitVanishes) {
    auto ctx = small_context(0.01);
    const std::vector<Rank> cand{0, 1};
    const Feature theta{50, 0, 0};
    const auto probs = policy(theta, ctx, cand);
    ASSERT_GT(probs[1], 1 - 1e-12);
    const Feature g = log_policy_gradient(ctx, cand, {ctx.block, 1}, probs);
    for (double v : g) EXPECT_NEAR(v, 0.0, 1e-6);
}

TEST(Gradient, MatchesFiniteDifferences) {
    Rng rng(4, 0);
    for (int k = 0; k < 300; ++k) {
        auto r = oracle::random_decision(rng);
        const auto probs = policy(r.theta, r.ctx, r.candidates);
        const Rank a = r.candidates[rng.below(r.candidates.size())];
        const Feature g = log_policy_gradient(r.ctx, r.candidates, {r.ctx.block, a}, probs);
        const Feature fd = oracle::finite_difference_gradient(r.theta, r.ctx, r.candidates, a);
        for (int c = 0; c < 3; ++c) EXPECT_NEAR(g[c], fd[c], 1e-6);
    }
}

TEST(UpdatePolicy, ZeroRewardChangesNothing) {
    PolicyParams p;
    p.sq_avg = {0.5, 0.25, 0.1};
    const auto q = update_policy(p, {1.0, -2.0, 3.0}, 0.0);
    EXPECT_EQ(q.theta, p.theta);
    EXPECT_EQ(q.sq_avg, p.sq_avg);
}

TEST(UpdatePolicy, AscentDirection) {
    PolicyParams p;
    const auto q = update_policy(p, {0.3, 0.0, -0.2}, 2.0);
    EXPECT_GT(q.theta[0], p.theta[0]);
    EXPECT_EQ(q.theta[1], p.theta[1]);
    EXPECT_LT(q.theta[2], p.theta[2]);
}

TEST(UpdatePolicy, ClampsAtZero) {
    PolicyParams p;
    p.theta = {0.001, 1.0, 1.0};
    p.optimizer.learning_rate = 0.5;
    const auto q = update_policy(p, {-1.0, 0.0, 0.0}, 1.0);
    EXPECT_EQ(q.theta[0], 0.0);
}

TEST(UpdatePolicy, ThetaStaysNonNegative) {
    Rng rng(9, 0);
    PolicyParams p;
    p.optimizer.learning_rate = 0.2;
    for (int k = 0; k < 2000; ++k) {
        p = update_policy(p, {rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)},
                          rng.uniform(-5, 5));
        for (double v : p.theta) ASSERT_GE(v, 0.0);
    }
}

TEST(SampleIndex, FollowsCumulativeMass) {
    const std::vector<double> p{0.2, 0.5, 0.3};
    EXPECT_EQ(sample_index(p, 0.0), 0u);
    EXPECT_EQ(sample_index(p, 0.19), 0u);
    EXPECT_EQ(sample_index(p, 0.21), 1u);
    EXPECT_EQ(sample_index(p, 0.75), 2u);
    EXPECT_EQ(sample_index(p, 0.999999), 2u);
}
