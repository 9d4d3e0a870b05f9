#include "safebet/memory.hpp"

#include <bit>
#include <stdexcept>

namespace safebet {

namespace {

std::uint32_t log2_exact(std::uint64_t v) {
    if (!std::has_single_bit(v)) throw std::invalid_argument("cache parameter not a power of two");
    return static_cast<std::uint32_t>(std::countr_zero(v));
}

}  // namespace

MemoryHierarchy::MemoryHierarchy(const HierarchyConfig& cfg) : cfg_(cfg) {
    auto setup = [](Level& lvl, const CacheLevelConfig& c) {
        const std::uint64_t set_count = c.size / (static_cast<std::uint64_t>(c.ways) * c.block);
        lvl.sets = static_cast<std::uint32_t>(set_count);
        lvl.ways = c.ways;
        lvl.block_shift = log2_exact(c.block);
        log2_exact(set_count);
        lvl.lines.assign(lvl.sets, {});
    };
    setup(l1_, cfg_.l1);
    setup(l2_, cfg_.l2);
    setup(l3_, cfg_.l3);
}

bool MemoryHierarchy::Level::probe_and_touch(Addr addr, std::uint64_t stamp) {
    const std::uint64_t blk = addr >> block_shift;
    auto& set = lines[blk & (sets - 1)];
    for (auto& line : set) {
        if (line.first == blk) {
            line.second = stamp;
            return true;
        }
    }
    return false;
}

void MemoryHierarchy::Level::fill(Addr addr, std::uint64_t stamp) {
    const std::uint64_t blk = addr >> block_shift;
    auto& set = lines[blk & (sets - 1)];
    if (set.size() >= ways) {
        std::size_t victim = 0;
        for (std::size_t i = 1; i < set.size(); ++i)
            if (set[i].second < set[victim].second) victim = i;
        set.erase(set.begin() + static_cast<std::ptrdiff_t>(victim));
    }
    set.push_back({blk, stamp});
}

AccessResult MemoryHierarchy::access(Addr addr, AccessKind, std::uint64_t) {
    const std::uint64_t stamp = ++tick_;
    ++stats_.l1.accesses;
    if (l1_.probe_and_touch(addr, stamp)) return {cfg_.l1.hit_latency, HitLevel::L1};
    ++stats_.l1.misses;

    ++stats_.l2.accesses;
    if (l2_.probe_and_touch(addr, stamp)) {
        l1_.fill(addr, stamp);
        return {cfg_.l2.hit_latency, HitLevel::L2};
    }
    ++stats_.l2.misses;

    ++stats_.l3.accesses;
    if (l3_.probe_and_touch(addr, stamp)) {
        l2_.fill(addr, stamp);
        l1_.fill(addr, stamp);
        return {cfg_.l3.hit_latency, HitLevel::L3};
    }
    ++stats_.l3.misses;

    l3_.fill(addr, stamp);
    l2_.fill(addr, stamp);
    l1_.fill(addr, stamp);
    return {cfg_.mem_latency, HitLevel::MEM};
}

}  // namespace safebet
