#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "safebet/smact.hpp"
#include "safebet/trace.hpp"

namespace safebet {

struct AllocatorConfig {
    Addr arena_base = 0x1000'0000;
    std::uint64_t arena_size = 256ull * 1024 * 1024;
    std::uint64_t max_count = 25'000;         // strict >
    std::uint64_t max_bytes = 2ull << 20;     // strict >
    std::uint64_t handler_cost = 10'000;      // cycles per invocation
};

struct HandlerInvocation {
    std::vector<std::pair<Addr, std::uint64_t>> ranges;  // (base, rounded size)
};

struct HandlerResult {
    std::uint64_t cycles = 0;
    std::uint64_t entries_revoked = 0;
};

struct AllocatorCounters {
    std::uint64_t mallocs = 0;
    std::uint64_t frees = 0;
    std::uint64_t invocations = 0;
    bool operator==(const AllocatorCounters&) const = default;
};

// Bump allocator with 64-B minimum granularity and lazily batched frees.
// With the quarantine enabled, to-be-freed memory is reusable only after
// the revocation handler runs; without it, frees reclaim immediately.
class LazyFreeAllocator {
public:
    explicit LazyFreeAllocator(AllocatorConfig cfg = {}, bool quarantine = true);

    // 64-B aligned, size rounded up to a 64-B multiple. Distinct live
    // allocations never share a 64-B chunk. Throws on size 0 or exhaustion.
    Addr malloc64(std::uint64_t size);

    // Appends to the pending set; returns an invocation when a threshold
    // is exceeded. Throws on double free / unknown handle.
    std::optional<HandlerInvocation> lazy_free(Addr handle);

    // End-of-trace drain: one final invocation if anything is pending.
    std::optional<HandlerInvocation> drain();

    // Returns the quarantined ranges of a completed invocation to the pool.
    void reclaim(const HandlerInvocation& inv);

    std::uint64_t pending_count() const { return pending_.size(); }
    std::uint64_t pending_bytes() const { return freed_size_; }
    std::uint64_t live_count() const { return live_.size(); }
    const AllocatorCounters& counters() const { return counters_; }

private:
    std::optional<HandlerInvocation> take_pending();

    AllocatorConfig cfg_;
    bool quarantine_;
    Addr next_addr_;
    std::map<Addr, std::uint64_t> live_;                       // base -> rounded size
    std::vector<std::pair<Addr, std::uint64_t>> pending_;      // quarantined
    std::uint64_t freed_size_ = 0;
    std::multimap<std::uint64_t, Addr> pool_;                  // size -> base, reusable
    AllocatorCounters counters_;
};

// Invalidates every SMACT permission covering the pending ranges and
// charges the flat handler cost.
HandlerResult run_revocation_handler(Smact& smact, const HandlerInvocation& inv,
                                     std::uint64_t handler_cost);

}  // namespace safebet
