#include "flowlb/comm_model.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

using namespace flowlb;

TEST(RecordEvent, StoresValidRecords) {
    CommCostModel m;
    m.record_event(TransferKind::particle_send, 100, 0.011);
    ASSERT_EQ(m.records(TransferKind::particle_send).size(), 1u);
    EXPECT_EQ(m.records(TransferKind::particle_send).front().x, 100);
    EXPECT_TRUE(m.records(TransferKind::block_send).empty());
}

TEST(RecordEvent, RejectsBadRecords) {
    CommCostModel m;
    EXPECT_THROW(m.record_event(TransferKind::block_send, 0, 0.1), InvalidRecord);
    EXPECT_THROW(m.record_event(TransferKind::block_send, 1, -0.1), InvalidRecord);
    EXPECT_THROW(m.record_event(TransferKind::block_send, 0.5, 0.1), InvalidRecord);
}

TEST(RecordEvent, EvictsOldestBeyondCapacity) {
    CommCostModel m(1000);
    for (int k = 0; k < 1001; ++k) m.record_event(TransferKind::block_recv, 1 + k, 0.0);
    const auto& q = m.records(TransferKind::block_recv);
    EXPECT_EQ(q.size(), 1000u);
    EXPECT_EQ(q.front().x, 2);
    EXPECT_EQ(q.back().x, 1001);
}

TEST(Fit, TwoPointsAreExact) {
    CommCostModel m;
    m.record_event(TransferKind::block_send, 10, 1.1);
    m.record_event(TransferKind::block_send, 20, 2.1);
    const auto f = m.fit(TransferKind::block_send);
    EXPECT_NEAR(f.d, 0.1, 1e-12);
    EXPECT_NEAR(f.e, 0.1, 1e-12);
    EXPECT_FALSE(f.degenerate);
}

TEST(Fit, SingleDistinctXIsDegenerate) {
    CommCostModel m;
    m.record_event(TransferKind::particle_recv, 5, 0.5);
    m.record_event(TransferKind::particle_recv, 5, 0.7);
    const auto f = m.fit(TransferKind::particle_recv);
    EXPECT_DOUBLE_EQ(f.d, 0.0);
    EXPECT_DOUBLE_EQ(f.e, 0.6);
    EXPECT_TRUE(f.degenerate);
    EXPECT_DOUBLE_EQ(m.per_entity_cost(TransferKind::particle_recv), 0.6 / 5);
}

TEST(Fit, NoRecordsThrows) {
    CommCostModel m;
    EXPECT_THROW(m.fit(TransferKind::block_recv), NoData);
    std::vector<TransferRecord> none;
    EXPECT_THROW(fit_linear(none), NoData);
}

TEST(Fit, NegativeSlopeIsClamped) {
    const std::vector<TransferRecord> rs{{TransferKind::block_send, 1, 3.0},
                                         {TransferKind::block_send, 3, 1.0}};
    const auto f = fit_linear(rs);
    EXPECT_EQ(f.d, 0.0);
    EXPECT_DOUBLE_EQ(f.e, 2.0);
}

TEST(Predict, UsesFittedSlope) {
    CommCostModel m;
    m.record_event(TransferKind::block_send, 10, 1.0);
    m.record_event(TransferKind::block_send, 20, 2.0);
    m.refit_all();
    EXPECT_NEAR(m.predict(TransferKind::block_send, 7), 0.7, 1e-12);
    EXPECT_EQ(m.predict(TransferKind::block_send, 0), 0.0);
}

TEST(Predict, PriorBeforeAnyFit) {
    CommCostModel m(16, CommPrior{2e-2, 3e-6, 5e-4});
    EXPECT_DOUBLE_EQ(m.per_entity_cost(TransferKind::block_send), 2e-2);
    EXPECT_DOUBLE_EQ(m.per_entity_cost(TransferKind::block_recv), 2e-2);
    EXPECT_DOUBLE_EQ(m.per_entity_cost(TransferKind::particle_send), 3e-6);
    EXPECT_DOUBLE_EQ(m.latency(TransferKind::particle_recv), 5e-4);
    m.record_event(TransferKind::particle_send, 1, 1.0);
    EXPECT_DOUBLE_EQ(m.per_entity_cost(TransferKind::particle_send), 3e-6);
}

TEST(Recovery, NoiseFreeEventsRecoverTruth) {
    const double d_true = 1e-5, e_true = 1e-3;
    CommCostModel m;
    Rng rng(5, 0);
    for (int k = 0; k < 50; ++k) {
        const double x = 1.0 + static_cast<double>(rng.below(2000));
        m.record_event(TransferKind::particle_send, x, e_true + d_true * x);
    }
    const auto f = m.fit(TransferKind::particle_send);
    EXPECT_NEAR(f.d, d_true, 1e-9);
    EXPECT_NEAR(f.e, e_true, 1e-9);
    EXPECT_NEAR(m.predict(TransferKind::particle_send, 100), 1e-3, 1e-9);
}

TEST(Recovery, AgreesWithNormalEquations) {
    Rng rng(6, 0);
    std::vector<TransferRecord> rs;
    for (int k = 0; k < 300; ++k) {
        const double x = 1.0 + static_cast<double>(rng.below(500));
        rs.push_back({TransferKind::block_send, x, 0.02 + 0.003 * x + rng.uniform(-0.01, 0.01)});
    }
    const auto f = fit_linear(rs);
    const auto [d, e] = oracle::normal_equations_fit(rs);
    EXPECT_TRUE(oracle::close_rel(f.d, d, 1e-9));
    EXPECT_TRUE(oracle::close_rel(f.e, e, 1e-9));
}

TEST(Recovery, FivePercentNoiseKeepsSlopeWithinTenPercent) {
    const double d_true = 2e-3, e_true = 1e-2;
    CommCostModel m;
    Rng rng(2024, 0);
    for (int k = 0; k < 200; ++k) {
        const double x = 1.0 + static_cast<double>(rng.below(100));
        const double y = e_true + d_true * x;
        m.record_event(TransferKind::block_recv, x, y * (1.0 + 0.05 * rng.normal()));
    }
    const auto f = m.fit(TransferKind::block_recv);
    EXPECT_NEAR(f.d, d_true, 0.1 * d_true);
}

TEST(Predict, LinearAndNonNegative) {
    CommCostModel m;
    Rng rng(8, 0);
    for (int k = 0; k < 30; ++k) {
        const double x = 1.0 + static_cast<double>(rng.below(50));
        m.record_event(TransferKind::particle_recv, x, rng.uniform(0, 1e-3) + 1e-6 * x);
    }
    m.refit_all();
    for (double x : {0.0, 1.0, 10.0, 1000.0}) {
        EXPECT_GE(m.predict(TransferKind::particle_recv, x), 0.0);
        EXPECT_NEAR(m.predict(TransferKind::particle_recv, 2 * x),
                    2 * m.predict(TransferKind::particle_recv, x), 1e-15);
    }
}
