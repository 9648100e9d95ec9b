#pragma once

#include "flowlb/domain_decomp.hpp"

#include <array>
#include <compare>
#include <cstdint>
#include <stdexcept>

namespace flowlb {

inline constexpr int kMaxOrder = 8;

/// The r blocks a particle visited before its current one, most recent first.
/// Entry 0 is the immediate predecessor; entry r-1 the oldest.
struct BlockPath {
    std::array<BlockIndex, kMaxOrder> ids{};
    std::uint8_t len = 0;

    BlockPath() = default;
    BlockPath(std::initializer_list<BlockIndex> blocks) {
        if (blocks.size() > kMaxOrder) throw std::length_error("BlockPath longer than kMaxOrder");
        for (BlockIndex b : blocks) ids[len++] = b;
    }

    int size() const { return len; }
    BlockIndex operator[](int k) const { return ids[k]; }
    void push_back(BlockIndex b) { ids[len++] = b; }

    friend bool operator==(const BlockPath& a, const BlockPath& b) {
        if (a.len != b.len) return false;
        for (int k = 0; k < a.len; ++k)
            if (a.ids[k] != b.ids[k]) return false;
        return true;
    }
    friend std::strong_ordering operator<=>(const BlockPath& a, const BlockPath& b) {
        for (int k = 0; k < std::min(a.len, b.len); ++k)
            if (auto c = a.ids[k] <=> b.ids[k]; c != 0) return c;
        return a.len <=> b.len;
    }
};

/// Ring buffer of the most recently exited blocks of one particle.
class BlockHistory {
  public:
    void push(BlockIndex b) {
        head_ = (head_ + 1) % kMaxOrder;
        ring_[head_] = b;
        if (size_ < kMaxOrder) ++size_;
    }

    int size() const { return size_; }

    /// k = 0 is the most recently exited block.
    BlockIndex recent(int k) const { return ring_[(head_ - k + kMaxOrder) % kMaxOrder]; }

    /// Length-r path padded with `seed` where the history is shorter than r.
    BlockPath path(int r, BlockIndex seed) const {
        BlockPath p;
        for (int k = 0; k < r; ++k) p.push_back(k < size_ ? recent(k) : seed);
        return p;
    }

  private:
    std::array<BlockIndex, kMaxOrder> ring_{};
    int head_ = kMaxOrder - 1;
    int size_ = 0;
};

} // namespace flowlb
