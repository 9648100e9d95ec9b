#pragma once

// High-order blockwise workload estimation.
//
// Every block keeps a trajectories tree of depth r. A leaf is keyed by the
// r blocks a particle visited before this one (most recent first) and holds
// the count n and mean advection steps omega of historical particles with
// that path. Interior nodes aggregate their children. A new particle is
// estimated from the deepest node that matches its path.

#include "flowlb/block_path.hpp"
#include "flowlb/domain_decomp.hpp"
#include "flowlb/errors.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace flowlb {

/// Per-path counts of particles about to enter one block.
using IncomingCounts = std::map<BlockPath, std::uint64_t>;

class TrajectoriesTree {
  public:
    struct Node {
        std::uint64_t n = 0;
        double omega = 0.0;
        /// (block, node index) sorted by block.
        std::vector<std::pair<BlockIndex, std::uint32_t>> children;

        friend bool operator==(const Node&, const Node&) = default;
    };

    TrajectoriesTree() : TrajectoriesTree(0, 0) {}
    TrajectoriesTree(BlockIndex root_block, int order) : root_block_(root_block), order_(order) {
        if (order < 0 || order > kMaxOrder)
            throw std::invalid_argument("trajectories tree order must be in [0, 8]");
        nodes_.emplace_back();
    }

    BlockIndex root_block() const { return root_block_; }
    int order() const { return order_; }
    const std::vector<Node>& nodes() const { return nodes_; }
    const Node& root() const { return nodes_.front(); }
    bool empty() const { return nodes_.front().n == 0 && nodes_.size() == 1; }
    bool stale() const { return stale_; }

    /// Index of the child of `node` keyed by `block`, or -1.
    std::int64_t child(std::uint32_t node, BlockIndex block) const {
        const auto& c = nodes_[node].children;
        auto it = std::lower_bound(c.begin(), c.end(), block,
                                   [](const auto& e, BlockIndex b) { return e.first < b; });
        return (it != c.end() && it->first == block) ? static_cast<std::int64_t>(it->second) : -1;
    }

    /// Node reached by following `prefix` from the root, or nullptr.
    const Node* find(const BlockPath& prefix) const {
        std::uint32_t at = 0;
        for (int k = 0; k < prefix.size(); ++k) {
            const auto next = child(at, prefix[k]);
            if (next < 0) return nullptr;
            at = static_cast<std::uint32_t>(next);
        }
        return &nodes_[at];
    }

    /// Adds one particle's steps to the leaf for `path`. Interior nodes stay
    /// stale until aggregate().
    void record_advection(const BlockPath& path, std::int64_t steps) {
        if (path.size() != order_)
            throw std::invalid_argument("record path length " + std::to_string(path.size()) +
                                        " does not match tree order " + std::to_string(order_));
        std::uint32_t at = 0;
        for (int k = 0; k < path.size(); ++k) at = child_or_create(at, path[k]);
        Node& leaf = nodes_[at];
        leaf.n += 1;
        leaf.omega += (static_cast<double>(steps) - leaf.omega) / static_cast<double>(leaf.n);
        if (order_ > 0) stale_ = true;
    }

    /// Bottom-up recomputation of every interior node: n is the sum of the
    /// children's n and omega their count-weighted mean.
    void aggregate() {
        if (order_ > 0) aggregate_node(0, 0);
        stale_ = false;
    }

    /// Structural equality: same keys, counts and means along every path,
    /// independent of node storage order.
    friend bool operator==(const TrajectoriesTree& a, const TrajectoriesTree& b) {
        if (a.root_block_ != b.root_block_ || a.order_ != b.order_ ||
            a.nodes_.size() != b.nodes_.size())
            return false;
        auto same = [&](auto&& self, std::uint32_t x, std::uint32_t y) -> bool {
            const Node& u = a.nodes_[x];
            const Node& v = b.nodes_[y];
            if (u.n != v.n || u.omega != v.omega || u.children.size() != v.children.size())
                return false;
            for (std::size_t k = 0; k < u.children.size(); ++k)
                if (u.children[k].first != v.children[k].first ||
                    !self(self, u.children[k].second, v.children[k].second))
                    return false;
            return true;
        };
        return same(same, 0, 0);
    }

  private:
    friend TrajectoriesTree deserialize_tree(std::span<const std::byte>);

    std::uint32_t child_or_create(std::uint32_t node, BlockIndex block) {
        auto& c = nodes_[node].children;
        auto it = std::lower_bound(c.begin(), c.end(), block,
                                   [](const auto& e, BlockIndex b) { return e.first < b; });
        if (it != c.end() && it->first == block) return it->second;
        const auto fresh = static_cast<std::uint32_t>(nodes_.size());
        c.insert(it, {block, fresh});
        nodes_.emplace_back();
        return fresh;
    }

    void aggregate_node(std::uint32_t node, int depth) {
        if (depth == order_) return;
        std::uint64_t n = 0;
        double weighted = 0.0;
        // Index-based: children vectors are not modified here.
        for (std::size_t k = 0; k < nodes_[node].children.size(); ++k) {
            const std::uint32_t c = nodes_[node].children[k].second;
            aggregate_node(c, depth + 1);
            n += nodes_[c].n;
            weighted += static_cast<double>(nodes_[c].n) * nodes_[c].omega;
        }
        nodes_[node].n = n;
        nodes_[node].omega = n > 0 ? weighted / static_cast<double>(n) : 0.0;
    }

    BlockIndex root_block_;
    int order_;
    std::vector<Node> nodes_;
    bool stale_ = false;
};

/// Mean steps for one incoming path: the deepest node along the path's
/// longest recorded prefix, the root when nothing below it matches, zero for
/// an empty tree.
inline double matched_omega(const TrajectoriesTree& tree, const BlockPath& path) {
    if (tree.stale()) throw std::logic_error("estimate on a stale trajectories tree");
    const auto& nodes = tree.nodes();
    if (nodes.front().n == 0) return 0.0;
    std::uint32_t at = 0;
    for (int k = 0; k < path.size(); ++k) {
        const auto next = tree.child(at, path[k]);
        if (next < 0 || nodes[next].n == 0) break;
        at = static_cast<std::uint32_t>(next);
    }
    return nodes[at].omega;
}

/// Expected advection steps of all incoming particles (w / d_a).
inline double estimate_steps(const TrajectoriesTree& tree, const IncomingCounts& incoming) {
    double steps = 0.0;
    for (const auto& [path, count] : incoming)
        if (count > 0) steps += static_cast<double>(count) * matched_omega(tree, path);
    return steps;
}

/// Estimated advection seconds of a block: sum over paths of n~ * d_a * omega*.
inline double estimate(const TrajectoriesTree& tree, const IncomingCounts& incoming,
                       double seconds_per_step) {
    double w = 0.0;
    for (const auto& [path, count] : incoming)
        if (count > 0)
            w += static_cast<double>(count) * seconds_per_step * matched_omega(tree, path);
    return w;
}

/// Historical seconds per advection step of one process.
struct AdvectionRateTracker {
    std::int64_t total_steps = 0;
    double total_seconds = 0.0;

    void record(std::int64_t steps, double seconds) {
        total_steps += steps;
        total_seconds += seconds;
    }
    bool has_history() const { return total_steps > 0; }
    double d_a() const {
        return total_seconds / static_cast<double>(std::max<std::int64_t>(total_steps, 1));
    }
};

/// sum |w_i - a_i| / sum a_i over the union of both key sets.
inline double relative_error(const std::map<BlockIndex, double>& estimates,
                             const std::map<BlockIndex, double>& actuals) {
    double diff = 0.0, total = 0.0;
    for (const auto& [block, a] : actuals) {
        total += a;
        auto it = estimates.find(block);
        diff += std::abs((it == estimates.end() ? 0.0 : it->second) - a);
    }
    for (const auto& [block, w] : estimates)
        if (!actuals.contains(block)) diff += std::abs(w);
    if (!(total > 0.0)) throw DivideByZero("total actual advection time is zero");
    return diff / total;
}

// Binary layout (little-endian), version 1:
//   "TTRE" u16 version u8 order i32 root_block u32 node_count
//   then nodes in pre-order: i32 key (-1 for the root) u64 n f64 omega u32 child_count
inline constexpr std::uint16_t kTreeFormatVersion = 1;

namespace detail {

template <class T> void put_le(std::vector<std::byte>& out, T value) {
    auto bits = std::bit_cast<std::array<std::byte, sizeof(T)>>(value);
    if constexpr (std::endian::native == std::endian::big) std::reverse(bits.begin(), bits.end());
    out.insert(out.end(), bits.begin(), bits.end());
}

class ByteReader {
  public:
    explicit ByteReader(std::span<const std::byte> in) : in_(in) {}
    template <class T> T get() {
        if (in_.size() - pos_ < sizeof(T)) throw MalformedTree("truncated tree payload");
        std::array<std::byte, sizeof(T)> bits;
        std::memcpy(bits.data(), in_.data() + pos_, sizeof(T));
        pos_ += sizeof(T);
        if constexpr (std::endian::native == std::endian::big)
            std::reverse(bits.begin(), bits.end());
        return std::bit_cast<T>(bits);
    }
    bool done() const { return pos_ == in_.size(); }

  private:
    std::span<const std::byte> in_;
    std::size_t pos_ = 0;
};

} // namespace detail

inline std::vector<std::byte> serialize_tree(const TrajectoriesTree& tree) {
    std::vector<std::byte> out;
    for (char c : {'T', 'T', 'R', 'E'}) out.push_back(static_cast<std::byte>(c));
    detail::put_le<std::uint16_t>(out, kTreeFormatVersion);
    detail::put_le<std::uint8_t>(out, static_cast<std::uint8_t>(tree.order()));
    detail::put_le<std::int32_t>(out, tree.root_block());
    detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(tree.nodes().size()));

    const auto& nodes = tree.nodes();
    auto emit = [&](auto&& self, std::uint32_t at, BlockIndex key) -> void {
        const auto& node = nodes[at];
        detail::put_le<std::int32_t>(out, key);
        detail::put_le<std::uint64_t>(out, node.n);
        detail::put_le<double>(out, node.omega);
        detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(node.children.size()));
        for (const auto& [block, child] : node.children) self(self, child, block);
    };
    emit(emit, 0, -1);
    return out;
}

inline TrajectoriesTree deserialize_tree(std::span<const std::byte> bytes) {
    detail::ByteReader in(bytes);
    for (char c : {'T', 'T', 'R', 'E'})
        if (in.get<std::uint8_t>() != static_cast<std::uint8_t>(c))
            throw MalformedTree("bad magic");
    if (in.get<std::uint16_t>() != kTreeFormatVersion) throw MalformedTree("unsupported version");
    const int order = in.get<std::uint8_t>();
    if (order > kMaxOrder) throw MalformedTree("order out of range");
    const BlockIndex root_block = in.get<std::int32_t>();
    const std::uint32_t count = in.get<std::uint32_t>();
    if (count == 0 || count > bytes.size()) throw MalformedTree("implausible node count");

    TrajectoriesTree tree(root_block, order);
    tree.nodes_.clear();
    tree.nodes_.reserve(count);

    // Returns (key, node index) of the subtree read.
    auto read = [&](auto&& self, int depth) -> std::pair<BlockIndex, std::uint32_t> {
        const BlockIndex key = in.get<std::int32_t>();
        if (depth == 0 && key != -1) throw MalformedTree("root key must be -1");
        if (depth > 0 && key < 0) throw MalformedTree("negative block key");
        const auto at = static_cast<std::uint32_t>(tree.nodes_.size());
        if (at >= count) throw MalformedTree("more nodes than declared");
        tree.nodes_.emplace_back();
        tree.nodes_[at].n = in.get<std::uint64_t>();
        tree.nodes_[at].omega = in.get<double>();
        if (!(tree.nodes_[at].omega >= 0.0)) throw MalformedTree("negative or NaN omega");
        const std::uint32_t kids = in.get<std::uint32_t>();
        if (kids > 0 && depth >= order) throw MalformedTree("node deeper than tree order");
        if (kids > count) throw MalformedTree("implausible child count");
        BlockIndex last = -1;
        for (std::uint32_t k = 0; k < kids; ++k) {
            const auto [child_key, child] = self(self, depth + 1);
            if (child_key <= last) throw MalformedTree("children not sorted");
            last = child_key;
            tree.nodes_[at].children.emplace_back(child_key, child);
        }
        return {key, at};
    };
    read(read, 0);
    if (tree.nodes_.size() != count) throw MalformedTree("fewer nodes than declared");
    if (!in.done()) throw MalformedTree("trailing bytes");
    return tree;
}

} // namespace flowlb
