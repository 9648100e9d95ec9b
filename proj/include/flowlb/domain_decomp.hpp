#pragma once

// Axis-aligned block decomposition of a space or spacetime domain, the
// block-to-process assignment, and the block-neighbor / process-friend
// relations used by estimation and donation.

#include "flowlb/errors.hpp"

#include <algorithm>
#include <array>
#include <cstdint>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

namespace flowlb {

using BlockIndex = std::int32_t;
using Rank = std::int32_t;

inline constexpr int kMaxAxes = 4;

/// A point in the decomposed domain: spatial coordinates followed by time
/// when the field is unsteady.
using DomainPoint = std::array<double, kMaxAxes>;

struct Box {
    int axes = 0;
    DomainPoint lo{};
    DomainPoint hi{};
};

struct Block {
    BlockIndex id = 0;
    std::array<int, kMaxAxes> coords{};
    DomainPoint lo{};
    DomainPoint hi{};
    int ghost_width = 1;
};

/// Block grid over a Box. Indices are row-major with axis 0 fastest.
///
/// A point lying on an interior face belongs to the lower-indexed block;
/// locate_directed() instead resolves face ties toward the direction of
/// motion, which is what exit detection uses.
class Decomposition {
  public:
    Decomposition() = default;

    /// `cells_per_axis`, when given, aligns block faces to cell boundaries so
    /// per-axis block extents differ by at most one cell.
    Decomposition(const Box& domain, std::vector<int> blocks_per_axis, int n_p,
                  std::vector<int> cells_per_axis = {}, int ghost_width = 1)
        : domain_(domain), per_axis_(std::move(blocks_per_axis)), ghost_width_(ghost_width) {
        if (domain_.axes < 1 || domain_.axes > kMaxAxes)
            throw ConfigError("domain must have between 1 and 4 axes");
        if (static_cast<int>(per_axis_.size()) != domain_.axes)
            throw ConfigError("blocks_per_axis needs one entry per domain axis");
        long long total = 1;
        for (int a = 0; a < domain_.axes; ++a) {
            if (per_axis_[a] < 1) throw ConfigError("blocks_per_axis entries must be >= 1");
            if (!(domain_.lo[a] < domain_.hi[a]))
                throw ConfigError("domain bounds are empty on axis " + std::to_string(a));
            total *= per_axis_[a];
        }
        if (total < n_p)
            throw TooFewBlocks(std::to_string(total) + " blocks for " + std::to_string(n_p) +
                               " processes");
        count_ = static_cast<int>(total);

        for (int a = 0; a < domain_.axes; ++a) {
            const int n = per_axis_[a];
            auto& e = edges_[a];
            e.resize(n + 1);
            const double lo = domain_.lo[a], hi = domain_.hi[a];
            const bool cells = a < static_cast<int>(cells_per_axis.size()) && cells_per_axis[a] > 0;
            if (cells && cells_per_axis[a] < n)
                throw ConfigError("fewer cells than blocks on axis " + std::to_string(a));
            int start = 0;
            for (int k = 0; k <= n; ++k) {
                if (k == n) {
                    e[k] = hi;
                } else if (cells) {
                    const int c = cells_per_axis[a];
                    e[k] = lo + (hi - lo) * start / c;
                    start += c / n + (k < c % n ? 1 : 0);
                } else {
                    e[k] = lo + (hi - lo) * k / n;
                }
            }
        }

        blocks_.resize(count_);
        for (BlockIndex i = 0; i < count_; ++i) {
            Block& b = blocks_[i];
            b.id = i;
            b.coords = coords_of(i);
            b.ghost_width = ghost_width_;
            for (int a = 0; a < domain_.axes; ++a) {
                b.lo[a] = edges_[a][b.coords[a]];
                b.hi[a] = edges_[a][b.coords[a] + 1];
            }
        }
        build_neighbors();
    }

    int axes() const { return domain_.axes; }
    int block_count() const { return count_; }
    const Box& domain() const { return domain_; }
    const std::vector<int>& blocks_per_axis() const { return per_axis_; }
    const std::vector<Block>& blocks() const { return blocks_; }
    const Block& block(BlockIndex i) const { return blocks_.at(i); }
    const std::vector<double>& edges(int axis) const { return edges_[axis]; }

    std::array<int, kMaxAxes> coords_of(BlockIndex i) const {
        std::array<int, kMaxAxes> c{};
        for (int a = 0; a < domain_.axes; ++a) {
            c[a] = i % per_axis_[a];
            i /= per_axis_[a];
        }
        return c;
    }

    BlockIndex index_of(const std::array<int, kMaxAxes>& c) const {
        BlockIndex i = 0;
        for (int a = domain_.axes - 1; a >= 0; --a) i = i * per_axis_[a] + c[a];
        return i;
    }

    bool contains(const DomainPoint& p) const {
        for (int a = 0; a < domain_.axes; ++a)
            if (!(p[a] >= domain_.lo[a] && p[a] <= domain_.hi[a])) return false;
        return true;
    }

    /// Block containing p; face ties go to the lower-indexed block.
    BlockIndex locate(const DomainPoint& p) const {
        const BlockIndex i = locate_directed(p, DomainPoint{});
        if (i < 0) throw OutOfDomain("point lies outside the decomposed domain");
        return i;
    }

    /// Block containing p, with face ties resolved along `motion`: a positive
    /// component picks the upper block on that axis. Returns -1 outside.
    BlockIndex locate_directed(const DomainPoint& p, const DomainPoint& motion) const noexcept {
        if (!contains(p)) return -1;
        std::array<int, kMaxAxes> c{};
        for (int a = 0; a < domain_.axes; ++a) {
            const auto& e = edges_[a];
            const int n = per_axis_[a];
            auto it = std::lower_bound(e.begin(), e.end(), p[a]);
            int k = static_cast<int>(it - e.begin()) - 1;
            if (it != e.end() && *it == p[a] && motion[a] > 0) ++k;
            c[a] = std::clamp(k, 0, n - 1);
        }
        return index_of(c);
    }

    /// Full 3^d - 1 stencil, sorted ascending.
    const std::vector<BlockIndex>& neighbors(BlockIndex i) const { return neighbors_.at(i); }

    bool are_neighbors(BlockIndex i, BlockIndex j) const {
        const auto& n = neighbors_.at(i);
        return std::binary_search(n.begin(), n.end(), j);
    }

    /// Smallest block extent over the first `spatial_axes` axes.
    double min_edge(int spatial_axes) const {
        double m = std::numeric_limits<double>::infinity();
        for (int a = 0; a < std::min(spatial_axes, domain_.axes); ++a)
            for (std::size_t k = 0; k + 1 < edges_[a].size(); ++k)
                m = std::min(m, edges_[a][k + 1] - edges_[a][k]);
        return m;
    }

  private:
    void build_neighbors() {
        neighbors_.assign(count_, {});
        int stencil = 1;
        for (int a = 0; a < domain_.axes; ++a) stencil *= 3;
        for (BlockIndex i = 0; i < count_; ++i) {
            const auto c = coords_of(i);
            for (int s = 0; s < stencil; ++s) {
                std::array<int, kMaxAxes> d = c;
                bool self = true, inside = true;
                int code = s;
                for (int a = 0; a < domain_.axes; ++a) {
                    const int off = code % 3 - 1;
                    code /= 3;
                    if (off != 0) self = false;
                    d[a] += off;
                    if (d[a] < 0 || d[a] >= per_axis_[a]) inside = false;
                }
                if (!self && inside) neighbors_[i].push_back(index_of(d));
            }
            std::sort(neighbors_[i].begin(), neighbors_[i].end());
        }
    }

    Box domain_;
    std::vector<int> per_axis_;
    int ghost_width_ = 1;
    int count_ = 0;
    std::array<std::vector<double>, kMaxAxes> edges_;
    std::vector<Block> blocks_;
    std::vector<std::vector<BlockIndex>> neighbors_;
};

/// Blocks of a domain, in index order.
inline std::vector<Block> decompose(const Box& domain, std::vector<int> blocks_per_axis, int n_p,
                                    std::vector<int> cells_per_axis = {}) {
    return Decomposition(domain, std::move(blocks_per_axis), n_p, std::move(cells_per_axis))
        .blocks();
}

/// Lifeline friends: ranks differing from `l` in exactly one bit, ascending.
inline std::vector<Rank> friend_set(Rank l, int n_p) {
    std::vector<Rank> out;
    for (Rank bit = 1; bit > 0 && bit < 2 * std::max(n_p, 1); bit <<= 1) {
        const Rank f = l ^ bit;
        if (f < n_p) out.push_back(f);
    }
    std::sort(out.begin(), out.end());
    return out;
}

struct BlockAssignment {
    std::vector<Rank> owner;
    std::uint64_t epoch = 0;
    int n_p = 0;

    std::vector<BlockIndex> blocks_of(Rank r) const {
        std::vector<BlockIndex> out;
        for (BlockIndex i = 0; i < static_cast<BlockIndex>(owner.size()); ++i)
            if (owner[i] == r) out.push_back(i);
        return out;
    }

    std::vector<int> block_counts() const {
        std::vector<int> c(n_p, 0);
        for (Rank r : owner) ++c.at(r);
        return c;
    }

    /// Every block has exactly one owner and every owner is a valid rank.
    bool valid(int block_count) const {
        if (static_cast<int>(owner.size()) != block_count) return false;
        return std::all_of(owner.begin(), owner.end(),
                           [&](Rank r) { return r >= 0 && r < n_p; });
    }
};

inline BlockAssignment round_robin_assign(int block_count, int n_p) {
    BlockAssignment a;
    a.n_p = n_p;
    a.owner.resize(block_count);
    for (int i = 0; i < block_count; ++i) a.owner[i] = i % n_p;
    return a;
}

} // namespace flowlb
