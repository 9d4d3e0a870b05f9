#pragma once

// Synthetic workload generators shared by the unit and acceptance tests.

#include <algorithm>
#include <cstdint>
#include <random>
#include <vector>

#include "safebet/trace.hpp"

namespace safebet::testgen {

inline constexpr int kRegion = 1;
inline constexpr Addr kCodeBase = (Addr{1} << kRegionShift) + 0x1000;
inline constexpr Addr kDataBase = (Addr{1} << kRegionShift) + 0x0800'0000;

// Load-heavy single-region trace: no wrong path, no directives, dependency
// chains through load results, occasional well-predicted branches. Used for
// the policy-ordering property.
inline Trace load_heavy(std::uint64_t seed, std::size_t n_ops = 2000,
                        std::uint64_t working_set_bytes = 64 * 1024) {
    std::mt19937_64 rng(seed);
    TraceBuilder b;
    b.region(kRegion, Addr{1} << kRegionShift);
    b.data(kDataBase, kDataBase + working_set_bytes, kRegion);
    Addr pc = kCodeBase;
    const std::uint64_t lines = working_set_bytes / 64;
    Addr hot = kDataBase + (rng() % lines) * 64;
    int chain = 1;  // register carrying the current dependent value
    b.alu(pc, {}, chain);
    pc += 4;
    for (std::size_t i = 0; i < n_ops; ++i) {
        const std::uint64_t roll = rng() % 100;
        if (roll < 8) {
            b.branch(pc, {true, true, static_cast<std::uint32_t>(2 + rng() % 30)}, {chain});
        } else if (roll < 70) {
            // Locality: mostly revisit the hot neighborhood.
            if (rng() % 4 == 0) hot = kDataBase + (rng() % lines) * 64;
            const Addr ea = kDataBase + ((hot - kDataBase) / 64 + rng() % 8) % lines * 64;
            const int dst = 1 + static_cast<int>(rng() % 8);
            if (rng() % 2)
                b.load(pc, ea, 8, {chain}, dst);
            else
                b.load(pc, ea, 8, {}, dst);
            chain = dst;
        } else if (roll < 85) {
            b.store(pc, kDataBase + (rng() % lines) * 64, 8, {chain});
        } else {
            const int dst = 1 + static_cast<int>(rng() % 8);
            b.alu(pc, {chain}, dst);
            chain = dst;
        }
        pc += 4;
    }
    return b.take();
}

// Pointer-chase over a small working set: after the cold pass, every SMACT
// lookup hits, and every load feeds the next one's address.
inline Trace high_locality_chain(std::uint64_t seed, std::size_t n_loads = 400'000,
                                 std::uint64_t working_set_bytes = 16 * 1024) {
    std::mt19937_64 rng(seed);
    TraceBuilder b;
    b.region(kRegion, Addr{1} << kRegionShift);
    b.data(kDataBase, kDataBase + working_set_bytes, kRegion);
    Addr pc = kCodeBase;
    const std::uint64_t lines = working_set_bytes / 64;
    b.alu(pc, {}, 1);
    pc += 4;
    for (std::size_t i = 0; i < n_loads; ++i) {
        b.load(pc, kDataBase + (rng() % lines) * 64, 8, {1}, 1);
        pc += 4;
    }
    return b.take();
}

// Repeated sequential sweeps over `slabs` 4-KB slabs, `chunks_per_slab`
// chunks each; deterministic reuse for the bitmask and size-sweep checks.
inline Trace slab_sweep(std::uint64_t seed, std::uint32_t slabs, std::uint32_t chunks_per_slab,
                        std::uint32_t sweeps) {
    std::mt19937_64 rng(seed);
    TraceBuilder b;
    b.region(kRegion, Addr{1} << kRegionShift);
    b.data(kDataBase, kDataBase + static_cast<Addr>(slabs) * 4096, kRegion);
    Addr pc = kCodeBase;
    b.alu(pc, {}, 1);
    pc += 4;
    for (std::uint32_t s = 0; s < sweeps; ++s) {
        const std::uint32_t rot = static_cast<std::uint32_t>(rng() % chunks_per_slab);
        for (std::uint32_t slab = 0; slab < slabs; ++slab)
            for (std::uint32_t c = 0; c < chunks_per_slab; ++c) {
                const std::uint32_t chunk = (c + rot) % chunks_per_slab;
                // Chained: each lookup happens after the previous grant landed.
                b.load(pc, kDataBase + Addr{slab} * 4096 + Addr{chunk} * 64, 8, {1}, 1);
                pc += 4;
            }
    }
    return b.take();
}

// `static_loads` distinct load instructions all walking the same chunk set;
// instruction-granularity sources splinter their SMACT locality.
inline Trace shared_destinations(std::uint32_t static_loads, std::uint32_t chunks,
                                 std::uint32_t rounds) {
    TraceBuilder b;
    b.region(kRegion, Addr{1} << kRegionShift);
    b.data(kDataBase, kDataBase + Addr{chunks} * 64, kRegion);
    Addr pc = kCodeBase;
    b.alu(pc, {}, 1);
    for (std::uint32_t r = 0; r < rounds; ++r)
        for (std::uint32_t c = 0; c < chunks; ++c)
            for (std::uint32_t l = 0; l < static_loads; ++l)
                b.load(kCodeBase + 4 + 4 * l, kDataBase + Addr{c} * 64, 8, {1}, 1);
    return b.take();
}

// Dependent cold-miss loads (one memory round trip each) interleaved with
// small malloc/free pairs: a long trace whose handler overhead is tiny.
inline Trace long_latency_with_frees(std::size_t n_loads = 170'000,
                                     std::uint32_t n_free_pairs = 26'000) {
    TraceBuilder b;
    b.region(kRegion, Addr{1} << kRegionShift);
    b.data(kDataBase, kDataBase + Addr{n_loads} * 64 + 64, kRegion);
    Addr pc = kCodeBase;
    b.alu(pc, {}, 1);
    pc += 4;
    // All allocations first so the bump cursor is policy-independent (no
    // malloc ever races a quarantined block); frees spread over the loads.
    const Addr arena = AllocatorConfig{}.arena_base;
    for (std::uint32_t i = 0; i < n_free_pairs; ++i) b.malloc_directive(64);
    const std::size_t free_every = std::max<std::size_t>(1, n_loads / (n_free_pairs + 1));
    std::uint32_t freed = 0;
    for (std::size_t i = 0; i < n_loads; ++i) {
        b.load(pc, kDataBase + Addr{i} * 64, 8, {1}, 1);
        pc += 4;
        if (freed < n_free_pairs && i % free_every == free_every - 1) {
            b.free_directive(arena + Addr{freed} * 64);
            ++freed;
        }
    }
    return b.take();
}

// Benign confused-deputy shape: a visitor's buffer is repeatedly processed
// by the owner utility, whose accesses should ride 1LBTOS inheritance.
inline Trace benign_inheritance(std::uint64_t seed, std::uint32_t calls = 32,
                                std::uint32_t chunks = 16) {
    std::mt19937_64 rng(seed);
    const int V = 1, O = 2;
    TraceBuilder b;
    b.region(V, Addr{1} << kRegionShift);
    b.region(O, Addr{2} << kRegionShift, true);
    const Addr buf = (Addr{1} << kRegionShift) + 0x0800'0000;
    b.data(buf, buf + Addr{chunks} * 64, V);
    Addr pc_v = (Addr{1} << kRegionShift) + 0x1000;
    Addr pc_o = (Addr{2} << kRegionShift) + 0x1000;
    b.alu(pc_v, {}, 1);
    pc_v += 4;
    // Visitor touches its buffer non-speculatively, granting its instance.
    for (std::uint32_t c = 0; c < chunks; ++c) {
        b.load(pc_v, buf + Addr{c} * 64, 8, {}, 1);
        pc_v += 4;
    }
    for (std::uint32_t k = 0; k < calls; ++k) {
        b.transfer(OpKind::Call, pc_v);
        pc_v += 4;
        for (std::uint32_t c = 0; c < chunks; ++c) {
            b.load(pc_o, buf + Addr{c} * 64, 8, {1}, 2);
            b.alu(pc_o, {2}, 1);  // consume: gating must cost cycles
            pc_o += 4;
        }
        b.transfer(OpKind::Return, pc_o);
        pc_o += 4;
        const std::uint32_t pause = static_cast<std::uint32_t>(rng() % 3);
        for (std::uint32_t p = 0; p < pause; ++p) {
            b.alu(pc_v, {1}, 1);
            pc_v += 4;
        }
    }
    return b.take();
}

}  // namespace safebet::testgen
