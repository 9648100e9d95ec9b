#pragma once

// Linear transmission cost model: y = d * x + e per transfer event kind,
// fitted by least squares over a bounded window of observed events.

#include "flowlb/errors.hpp"

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <optional>
#include <string>

namespace flowlb {

enum class TransferKind : std::uint8_t { block_send, block_recv, particle_send, particle_recv };

inline constexpr std::array<TransferKind, 4> kTransferKinds = {
    TransferKind::block_send, TransferKind::block_recv, TransferKind::particle_send,
    TransferKind::particle_recv};

inline const char* to_string(TransferKind k) {
    switch (k) {
    case TransferKind::block_send: return "block_send";
    case TransferKind::block_recv: return "block_recv";
    case TransferKind::particle_send: return "particle_send";
    case TransferKind::particle_recv: return "particle_recv";
    }
    return "?";
}

inline bool is_block_kind(TransferKind k) {
    return k == TransferKind::block_send || k == TransferKind::block_recv;
}

struct TransferRecord {
    TransferKind kind;
    double x; ///< entities moved
    double y; ///< seconds
};

struct LinearFit {
    double d = 0.0; ///< seconds per entity
    double e = 0.0; ///< seconds per event
    double mean_x = 0.0;
    /// Slope not identifiable (one distinct x) or clamped at zero.
    bool degenerate = false;
};

/// Costs used before any event of a kind has been observed.
struct CommPrior {
    double block_per_entity = 1e-2;
    double particle_per_entity = 1e-6;
    double latency = 1e-4;
};

/// Ordinary least squares on (x, y) with d >= 0 and e >= 0.
///
/// One distinct x gives d = 0, e = mean(y). A negative slope is replaced by
/// the constrained optimum d = 0, e = mean(y).
template <class Range> LinearFit fit_linear(const Range& records) {
    double n = 0.0, mx = 0.0, my = 0.0;
    for (const auto& r : records) {
        n += 1.0;
        mx += r.x;
        my += r.y;
    }
    if (n == 0.0) throw NoData("no transfer records to fit");
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0;
    for (const auto& r : records) {
        sxx += (r.x - mx) * (r.x - mx);
        sxy += (r.x - mx) * (r.y - my);
    }
    LinearFit fit;
    fit.mean_x = mx;
    if (sxx == 0.0) {
        fit.d = 0.0;
        fit.e = my;
        fit.degenerate = true;
    } else {
        fit.d = sxy / sxx;
        fit.e = my - fit.d * mx;
        if (fit.d < 0.0) {
            fit.d = 0.0;
            fit.e = my;
            fit.degenerate = true;
        }
    }
    if (fit.e < 0.0) fit.e = 0.0;
    return fit;
}

class CommCostModel {
  public:
    explicit CommCostModel(std::size_t capacity = 1024, CommPrior prior = {})
        : capacity_(capacity), prior_(prior) {}

    void record_event(TransferKind kind, double x, double y) {
        if (!(x >= 1.0) || !std::isfinite(x))
            throw InvalidRecord("entity count must be >= 1, got " + std::to_string(x));
        if (!(y >= 0.0) || !std::isfinite(y))
            throw InvalidRecord("duration must be finite and >= 0");
        auto& q = records_[slot(kind)];
        q.push_back({kind, x, y});
        while (q.size() > capacity_) q.pop_front();
    }

    /// Refits one kind from its stored records and caches the result.
    LinearFit fit(TransferKind kind) {
        const auto& q = records_[slot(kind)];
        if (q.empty()) throw NoData(std::string("no records of kind ") + to_string(kind));
        fits_[slot(kind)] = fit_linear(q);
        return *fits_[slot(kind)];
    }

    void refit_all() {
        for (TransferKind k : kTransferKinds)
            if (!records_[slot(k)].empty()) fit(k);
    }

    const std::optional<LinearFit>& fitted(TransferKind kind) const { return fits_[slot(kind)]; }
    const std::deque<TransferRecord>& records(TransferKind kind) const {
        return records_[slot(kind)];
    }
    std::size_t capacity() const { return capacity_; }
    const CommPrior& prior() const { return prior_; }

    /// Marginal seconds per entity fed to the agent's cost functions: the
    /// fitted slope, or the mean per-entity event cost when the slope is not
    /// identifiable, or the prior before any fit.
    double per_entity_cost(TransferKind kind) const {
        const auto& f = fits_[slot(kind)];
        if (!f) return is_block_kind(kind) ? prior_.block_per_entity : prior_.particle_per_entity;
        if (f->degenerate) return (f->d * f->mean_x + f->e) / f->mean_x;
        return f->d;
    }

    double latency(TransferKind kind) const {
        const auto& f = fits_[slot(kind)];
        return f ? f->e : prior_.latency;
    }

    /// Marginal cost of moving x entities (per-event latency excluded).
    double predict(TransferKind kind, double x) const { return per_entity_cost(kind) * x; }

  private:
    static std::size_t slot(TransferKind k) { return static_cast<std::size_t>(k); }

    std::size_t capacity_;
    CommPrior prior_;
    std::array<std::deque<TransferRecord>, 4> records_;
    std::array<std::optional<LinearFit>, 4> fits_;
};

} // namespace flowlb
