#include "flowlb/domain_decomp.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <algorithm>

using namespace flowlb;

namespace {
Box box1(double lo, double hi) { return Box{1, {lo}, {hi}}; }
Box box2(double x0, double y0, double x1, double y1) { return Box{2, {x0, y0}, {x1, y1}}; }
Box box3(double hi) { return Box{3, {0, 0, 0}, {hi, hi, hi}}; }
} // namespace

TEST(Decompose, OneDimensionalQuarters) {
    const auto blocks = decompose(box1(0, 1), {4}, 1);
    ASSERT_EQ(blocks.size(), 4u);
    const double edges[] = {0, 0.25, 0.5, 0.75, 1};
    for (int k = 0; k < 4; ++k) {
        EXPECT_DOUBLE_EQ(blocks[k].lo[0], edges[k]);
        EXPECT_DOUBLE_EQ(blocks[k].hi[0], edges[k + 1]);
    }
}

TEST(Decompose, TwoByTwoOnRectangle) {
    const auto blocks = decompose(box2(0, 0, 2, 1), {2, 2}, 4);
    ASSERT_EQ(blocks.size(), 4u);
    for (const auto& b : blocks) {
        EXPECT_DOUBLE_EQ(b.hi[0] - b.lo[0], 1.0);
        EXPECT_DOUBLE_EQ(b.hi[1] - b.lo[1], 0.5);
    }
}

TEST(Decompose, TooFewBlocks) {
    EXPECT_THROW(decompose(box3(1), {2, 2, 2}, 16), TooFewBlocks);
}

TEST(Decompose, CellAlignedSizesDifferByAtMostOneCell) {
    // 10 cells over 3 blocks -> 4, 3, 3 cells.
    Decomposition d(box1(0, 10), {3}, 1, {10});
    const auto& e = d.edges(0);
    std::vector<double> widths;
    for (int k = 0; k < 3; ++k) widths.push_back(e[k + 1] - e[k]);
    EXPECT_LE(*std::max_element(widths.begin(), widths.end()) -
                  *std::min_element(widths.begin(), widths.end()),
              1.0 + 1e-12);
}

TEST(Decompose, BlocksTileTheDomain) {
    const auto blocks = decompose(box3(2), {3, 2, 4}, 1);
    double volume = 0;
    for (const auto& b : blocks) volume += (b.hi[0] - b.lo[0]) * (b.hi[1] - b.lo[1]) * (b.hi[2] - b.lo[2]);
    EXPECT_NEAR(volume, 8.0, 1e-12);
}

TEST(Decomposition, IndexCoordsBijection) {
    Decomposition d(box3(1), {3, 4, 5}, 1);
    for (BlockIndex i = 0; i < d.block_count(); ++i) EXPECT_EQ(d.index_of(d.coords_of(i)), i);
    EXPECT_EQ(d.coords_of(1)[0], 1); // axis 0 varies fastest
}

TEST(Locate, InteriorFaceGoesToLowerBlock) {
    Decomposition d(box1(0, 1), {8}, 1);
    EXPECT_EQ(d.locate({0.5}), 3); // face between blocks 3 and 4
}

TEST(Locate, DomainMaximumIsLastBlock) {
    Decomposition d(box3(1), {2, 2, 2}, 1);
    EXPECT_EQ(d.locate({1, 1, 1}), 7);
}

TEST(Locate, OutsideThrows) {
    Decomposition d(box3(1), {2, 2, 2}, 1);
    EXPECT_THROW(d.locate({1.01, 0.5, 0.5}), OutOfDomain);
}

TEST(Locate, DirectedTieFollowsMotion) {
    Decomposition d(box1(0, 1), {4}, 1);
    EXPECT_EQ(d.locate_directed({0.25}, {+1}), 1);
    EXPECT_EQ(d.locate_directed({0.25}, {-1}), 0);
    EXPECT_EQ(d.locate_directed({1.5}, {+1}), -1);
}

TEST(Neighbors, CornerOf4x4) {
    Decomposition d(box2(0, 0, 1, 1), {4, 4}, 1);
    EXPECT_EQ(d.neighbors(0).size(), 3u);
}

TEST(Neighbors, InteriorOf4x4) {
    Decomposition d(box2(0, 0, 1, 1), {4, 4}, 1);
    EXPECT_EQ(d.neighbors(d.index_of({1, 1})).size(), 8u);
}

TEST(Neighbors, InteriorOf4x4x4) {
    Decomposition d(box3(1), {4, 4, 4}, 1);
    EXPECT_EQ(d.neighbors(d.index_of({1, 2, 1})).size(), 26u);
}

TEST(Neighbors, SymmetricAndMatchCoordinateScan) {
    Decomposition d(Box{4, {0, 0, 0, 0}, {1, 1, 1, 1}}, {3, 2, 3, 2}, 1);
    for (BlockIndex i = 0; i < d.block_count(); ++i) {
        EXPECT_EQ(d.neighbors(i), oracle::brute_neighbors(d, i));
        for (BlockIndex j : d.neighbors(i)) EXPECT_TRUE(d.are_neighbors(j, i));
    }
}

TEST(FriendSet, Examples) {
    EXPECT_EQ(friend_set(0, 8), (std::vector<Rank>{1, 2, 4}));
    EXPECT_EQ(friend_set(5, 8), (std::vector<Rank>{1, 4, 7}));
    EXPECT_EQ(friend_set(5, 6), (std::vector<Rank>{1, 4}));
    EXPECT_TRUE(friend_set(0, 1).empty());
}

TEST(FriendSet, SymmetricAndMatchesBitEnumeration) {
    for (int n_p = 1; n_p <= 40; ++n_p)
        for (Rank l = 0; l < n_p; ++l) {
            EXPECT_EQ(friend_set(l, n_p), oracle::brute_friends(l, n_p));
            for (Rank f : friend_set(l, n_p)) {
                const auto back = friend_set(f, n_p);
                EXPECT_TRUE(std::find(back.begin(), back.end(), l) != back.end());
            }
        }
}

TEST(RoundRobin, Examples) {
    const auto a = round_robin_assign(8, 2);
    EXPECT_EQ(a.blocks_of(0), (std::vector<BlockIndex>{0, 2, 4, 6}));
    EXPECT_EQ(a.epoch, 0u);
    const auto b = round_robin_assign(128, 16);
    for (int c : b.block_counts()) EXPECT_EQ(c, 8);
    const auto c = round_robin_assign(3, 2);
    EXPECT_EQ(c.blocks_of(0), (std::vector<BlockIndex>{0, 2}));
    EXPECT_EQ(c.blocks_of(1), (std::vector<BlockIndex>{1}));
}

TEST(RoundRobin, PartitionValidity) {
    auto a = round_robin_assign(10, 3);
    EXPECT_TRUE(a.valid(10));
    a.owner[4] = 3;
    EXPECT_FALSE(a.valid(10));
    EXPECT_FALSE(round_robin_assign(9, 3).valid(10));
}
