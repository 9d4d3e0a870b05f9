#pragma once

#include <cstdint>
#include <vector>

#include "safebet/trace.hpp"

namespace safebet {

struct CacheLevelConfig {
    std::uint64_t size = 0;
    std::uint32_t ways = 0;
    std::uint32_t block = 64;
    std::uint32_t hit_latency = 0;
};

struct HierarchyConfig {
    CacheLevelConfig l1{32 * 1024, 8, 64, 4};
    CacheLevelConfig l2{256 * 1024, 16, 64, 14};
    CacheLevelConfig l3{2 * 1024 * 1024, 16, 64, 40};
    std::uint32_t mem_latency = 200;
};

enum class AccessKind { Load, Store, FillOnly };
enum class HitLevel { L1, L2, L3, MEM };

struct AccessResult {
    std::uint32_t latency = 0;
    HitLevel level = HitLevel::L1;
};

struct CacheStats {
    struct Level {
        std::uint64_t accesses = 0;
        std::uint64_t misses = 0;
        bool operator==(const Level&) const = default;
    };
    Level l1, l2, l3;
    bool operator==(const CacheStats&) const = default;
};

// Inclusive L1/L2/L3 + memory latency model, true LRU. A fill-only access
// walks and fills like a load; not forwarding the data is the caller's
// obligation (the hierarchy holds no values).
class MemoryHierarchy {
public:
    explicit MemoryHierarchy(const HierarchyConfig& cfg = {});

    AccessResult access(Addr addr, AccessKind kind, std::uint64_t now);

    const CacheStats& stats() const { return stats_; }
    std::uint32_t l1_hit_latency() const { return cfg_.l1.hit_latency; }

private:
    struct Level {
        std::uint32_t sets = 0;
        std::uint32_t ways = 0;
        std::uint32_t block_shift = 0;
        // tags[set] with LRU stamps; tag 0 with stamp 0 marks an empty way.
        std::vector<std::vector<std::pair<std::uint64_t, std::uint64_t>>> lines;

        bool probe_and_touch(Addr addr, std::uint64_t stamp);
        void fill(Addr addr, std::uint64_t stamp);
    };

    HierarchyConfig cfg_;
    Level l1_, l2_, l3_;
    CacheStats stats_;
    std::uint64_t tick_ = 0;
};

}  // namespace safebet
