#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "safebet/instance.hpp"
#include "safebet/lazyfree.hpp"
#include "safebet/memory.hpp"
#include "safebet/smact.hpp"
#include "safebet/trace.hpp"

namespace safebet {

enum class PolicyKind { Baseline, NdaRestrictive, NdaPermissive, SafeBet };

enum class SourceGranularity { Region, Instruction };

// Ablation switches; all enabled is the full mechanism.
struct SafeBetOptions {
    bool bitmask = true;       // off: one chunk per slab (64-B slabs)
    bool inheritance = true;   // off: no 1LBTOS pass-through for the owner
    bool instances = true;     // off: static per-region source keys
    bool revocation = true;    // off: frees reclaim immediately, no handler
    bool smact = true;         // off: no access gating at all
    SourceGranularity source = SourceGranularity::Region;

    bool operator==(const SafeBetOptions&) const = default;
};

struct PolicyConfig {
    PolicyKind kind = PolicyKind::Baseline;
    std::uint32_t nda_k = 0;  // NdaPermissive delay after last branch resolve
    SafeBetOptions safebet;

    std::string name() const;
    bool operator==(const PolicyConfig&) const = default;
};

// Parses names like "baseline", "nda-restrictive", "nda-permissive:4",
// "safebet", "safebet:nobitmask". Throws std::invalid_argument.
PolicyConfig parse_policy(const std::string& name);

struct CoreConfig {
    std::uint32_t width = 8;         // fetch/commit per cycle
    std::uint32_t iq_size = 64;
    std::uint32_t rob_size = 192;
    std::uint32_t retire_delay = 4;  // complete-to-commit latency at head
    std::uint32_t depth_limit = 64;  // instance stack frames
};

struct SimStats {
    std::uint64_t cycles = 0;
    std::uint64_t instructions = 0;  // committed, directives excluded
    std::uint64_t replays = 0;
    std::uint64_t handler_invocations = 0;
    std::uint64_t handler_cycles = 0;
    bool leaked = false;
    SmactCounters smact;
    CacheStats cache;
    AllocatorCounters allocator;

    double ipc() const { return cycles ? double(instructions) / double(cycles) : 0.0; }
    double l3_mpki() const {
        return instructions ? 1000.0 * double(cache.l3.misses) / double(instructions) : 0.0;
    }
    bool operator==(const SimStats&) const = default;
};

struct RunResult {
    SimStats stats;
    std::string smact_dump;
    std::string instance_dump;
};

// Analytical out-of-order core model: per-op dispatch/issue/complete/commit
// cycles computed in program order under fetch-width, IQ, ROB, and in-order
// commit constraints. Wrong-path runs execute until their mispredicting
// branch resolves, then squash. The leak verdict flags any op that issues
// with a secret-tainted source while speculative.
RunResult run_simulation(const Trace& trace, const PolicyConfig& policy,
                         const SmactGeometry& geometry, const CoreConfig& core = {},
                         const HierarchyConfig& memory = {}, const AllocatorConfig& alloc = {});

}  // namespace safebet
