#pragma once

// Fixed-step RK4 advection of particles inside one block. Step counts
// produced here are the ground-truth work that drives both simulated
// compute time and estimator training.

#include "flowlb/block_path.hpp"
#include "flowlb/domain_decomp.hpp"
#include "flowlb/vec.hpp"
#include "flowlb/vector_field.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace flowlb {

enum class ParticleStatus : std::uint8_t { active, out_of_domain, max_steps, stopped };

struct Particle {
    std::int64_t id = 0;
    Vec3 pos;
    double time = 0.0;
    std::int64_t steps_taken = 0;
    BlockHistory history;
    BlockIndex seed_block = 0;
    ParticleStatus status = ParticleStatus::active;
};

struct TracingParams {
    double h = 0.0;
    std::int64_t max_steps = 1024;
    double v_eps = 1e-12;
};

/// Maps a particle state onto the decomposition's axes (space, then time for
/// unsteady fields).
inline DomainPoint domain_point(const FieldSpec& field, const Vec3& pos, double t) {
    DomainPoint p{};
    const int sd = field.spatial_dim();
    for (int a = 0; a < sd; ++a) p[a] = pos[a];
    if (!field.steady()) p[sd] = t;
    return p;
}

/// Bounding box of a field in decomposition coordinates.
inline Box domain_box(const FieldSpec& field) {
    Box b;
    const int sd = field.spatial_dim();
    b.axes = sd + (field.steady() ? 0 : 1);
    for (int a = 0; a < sd; ++a) {
        b.lo[a] = field.domain_min()[a];
        b.hi[a] = field.domain_max()[a];
    }
    if (!field.steady()) {
        b.lo[sd] = field.t0();
        b.hi[sd] = field.t1();
    }
    return b;
}

/// One classical RK4 step.
///
/// Steady fields stop a particle whose speed is below v_eps at the start of
/// the step. A stage that samples outside the domain or time range marks the
/// particle out_of_domain without moving it.
inline Particle rk4_step(const FieldSpec& field, Particle p, double h, double v_eps = 1e-12) {
    if (p.status != ParticleStatus::active) return p;
    const bool steady = field.steady();
    const double t = p.time;

    Vec3 k1, k2, k3, k4;
    if (!try_eval(field, p.pos, t, k1)) {
        p.status = ParticleStatus::out_of_domain;
        return p;
    }
    if (steady && norm(k1) < v_eps) {
        p.status = ParticleStatus::stopped;
        return p;
    }
    const double th = steady ? t : t + 0.5 * h;
    const double tf = steady ? t : t + h;
    if (!try_eval(field, p.pos + (0.5 * h) * k1, th, k2) ||
        !try_eval(field, p.pos + (0.5 * h) * k2, th, k3) ||
        !try_eval(field, p.pos + h * k3, tf, k4)) {
        p.status = ParticleStatus::out_of_domain;
        return p;
    }
    p.pos += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    p.time = tf;
    ++p.steps_taken;
    return p;
}

struct TracedParticle {
    Particle particle;
    std::int64_t steps_in_block = 0;
    /// Block the particle moved into, or -1 when it terminated in this block.
    BlockIndex exit_target = -1;
};

struct TraceResult {
    std::vector<TracedParticle> particles;
    std::int64_t total_steps = 0;
    double wall_seconds_charged = 0.0;
};

/// Advects every particle until it leaves the block, leaves the domain, hits
/// the step cap, or stops at a critical point. Exiting particles get the
/// traced block appended to their history.
inline TraceResult trace_in_block(const FieldSpec& field, const Decomposition& decomp,
                                  BlockIndex block, std::span<const Particle> particles,
                                  const TracingParams& params, double seconds_per_step = 1e-6) {
    TraceResult result;
    result.particles.reserve(particles.size());
    const int axes = decomp.axes();

    for (const Particle& start : particles) {
        TracedParticle out{start, 0, -1};
        Particle& p = out.particle;
        while (p.status == ParticleStatus::active) {
            if (p.steps_taken >= params.max_steps) {
                p.status = ParticleStatus::max_steps;
                break;
            }
            const DomainPoint before = domain_point(field, p.pos, p.time);
            p = rk4_step(field, p, params.h, params.v_eps);
            if (p.status != ParticleStatus::active) break;
            ++out.steps_in_block;

            const DomainPoint after = domain_point(field, p.pos, p.time);
            DomainPoint motion{};
            for (int a = 0; a < axes; ++a) motion[a] = after[a] - before[a];
            const BlockIndex now = decomp.locate_directed(after, motion);
            if (now < 0) {
                p.status = ParticleStatus::out_of_domain;
                break;
            }
            if (p.steps_taken >= params.max_steps) {
                p.status = ParticleStatus::max_steps;
                break;
            }
            if (now != block) {
                out.exit_target = now;
                p.history.push(block);
                break;
            }
        }
        result.total_steps += out.steps_in_block;
        result.particles.push_back(out);
    }
    result.wall_seconds_charged = static_cast<double>(result.total_steps) * seconds_per_step;
    return result;
}

} // namespace flowlb
