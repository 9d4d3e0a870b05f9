#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "safebet/trace.hpp"

namespace safebet {

// Instance (or ablation source-key) identifiers. True instance IDs live in
// 22 bits; ablation modes may pack denser synthetic keys in here.
using InstID = std::uint32_t;
inline constexpr std::uint32_t kInstBits = 22;
inline constexpr InstID kInstMask = (1u << kInstBits) - 1;

struct SmactGeometry {
    std::uint32_t entries = 512;
    std::uint32_t ways = 8;  // 0 = unbounded ways (reference configuration)
    std::uint32_t slab_bytes = 4096;
    std::uint32_t chunk_bytes = 64;
    bool physical_tagged = false;  // reserved, not implemented

    std::uint32_t sets() const;
    std::uint32_t mask_width() const { return slab_bytes / chunk_bytes; }
    void validate() const;  // throws std::invalid_argument
    std::string label() const;
};

enum class Verdict { Hit, HitByInheritance, MissSlab, MissChunk, MissInstance };

inline bool is_hit(Verdict v) { return v == Verdict::Hit || v == Verdict::HitByInheritance; }
const char* verdict_name(Verdict v);

struct AddressSplit {
    std::uint64_t tag = 0;
    std::uint32_t index = 0;
    std::uint32_t slab_offset = 0;
    std::uint32_t chunk_bit = 0;

    bool operator==(const AddressSplit&) const = default;
};

AddressSplit split_address(Addr a, const SmactGeometry& g);

struct SmactEntry {
    std::uint64_t tag = 0;
    InstID inst = 0;
    std::uint64_t chunk_mask = 0;
    std::uint64_t lru = 0;  // access stamp; smallest in a set is the victim
};

struct SmactCounters {
    std::uint64_t hits = 0;
    std::uint64_t inherit_hits = 0;
    std::uint64_t miss_slab = 0;
    std::uint64_t miss_chunk = 0;
    std::uint64_t miss_instance = 0;
    std::uint64_t inserts = 0;
    std::uint64_t evictions = 0;
    std::uint64_t revoked_entries = 0;
    std::uint64_t flushes = 0;

    std::uint64_t total_misses() const { return miss_slab + miss_chunk + miss_instance; }
    bool operator==(const SmactCounters&) const = default;
};

// Speculative Memory Access Control Table: destination-indexed,
// instance-matched, per-slab chunk bitmasks, true LRU per set.
class Smact {
public:
    explicit Smact(SmactGeometry g);

    // Classifies the access and refreshes replacement state on hits.
    // Inheritance applies only when the accessor is the owner region.
    Verdict lookup(Addr a, InstID inst, std::optional<InstID> lbtos_inst, bool accessor_is_owner);

    // Commit-time permission grant; returns the evicted victim, if any.
    std::optional<SmactEntry> insert(Addr a, InstID inst);

    // Clears the chunk bits covered by [lo, lo+len) across all instances.
    // Returns the number of entries touched.
    std::uint64_t revoke_range(Addr lo, std::uint64_t len);

    void flush();

    const SmactGeometry& geometry() const { return geom_; }
    const SmactCounters& counters() const { return counters_; }
    std::uint64_t valid_entries() const;
    std::string dump() const;

private:
    SmactEntry* find(std::uint32_t set, std::uint64_t tag, InstID inst);

    SmactGeometry geom_;
    std::vector<std::vector<SmactEntry>> sets_;
    SmactCounters counters_;
    std::uint64_t tick_ = 0;
};

// Brute-force reference for the permission rule: the exact set of
// committed-and-not-revoked (chunk, instance) pairs. Deliberately kept
// free of any table mechanics so it can arbitrate them.
class PermissionOracle {
public:
    explicit PermissionOracle(std::uint32_t chunk_bytes = 64) : chunk_bytes_(chunk_bytes) {}

    void commit(Addr a, InstID inst) { pairs_.insert({a / chunk_bytes_, inst}); }
    void revoke_range(Addr lo, std::uint64_t len);
    bool permitted(Addr a, InstID inst, std::optional<InstID> lbtos_inst,
                   bool accessor_is_owner) const;

private:
    std::uint32_t chunk_bytes_;
    std::set<std::pair<std::uint64_t, InstID>> pairs_;
};

}  // namespace safebet
