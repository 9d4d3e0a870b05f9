#include "safebet/lazyfree.hpp"

#include <stdexcept>
#include <utility>

namespace safebet {

namespace {

std::uint64_t round64(std::uint64_t size) { return (size + 63) & ~std::uint64_t{63}; }

}  // namespace

LazyFreeAllocator::LazyFreeAllocator(AllocatorConfig cfg, bool quarantine)
    : cfg_(cfg), quarantine_(quarantine), next_addr_(cfg.arena_base) {}

Addr LazyFreeAllocator::malloc64(std::uint64_t size) {
    if (size == 0) throw std::invalid_argument("malloc64: zero size");
    const std::uint64_t rounded = round64(size);
    ++counters_.mallocs;

    // Prefer recycling an exact-size block (LIFO within a size class).
    auto it = pool_.find(rounded);
    if (it != pool_.end()) {
        const Addr base = it->second;
        pool_.erase(it);
        live_.emplace(base, rounded);
        return base;
    }
    if (next_addr_ + rounded > cfg_.arena_base + cfg_.arena_size)
        throw std::runtime_error("malloc64: arena exhausted");
    const Addr base = next_addr_;
    next_addr_ += rounded;
    live_.emplace(base, rounded);
    return base;
}

std::optional<HandlerInvocation> LazyFreeAllocator::lazy_free(Addr handle) {
    auto it = live_.find(handle);
    if (it == live_.end()) throw std::invalid_argument("lazy_free: not a live allocation");
    const std::uint64_t rounded = it->second;
    live_.erase(it);
    ++counters_.frees;

    if (!quarantine_) {
        pool_.emplace(rounded, handle);  // immediate reclaim, no handler
        return std::nullopt;
    }
    pending_.push_back({handle, rounded});
    freed_size_ += rounded;
    if (pending_.size() > cfg_.max_count || freed_size_ > cfg_.max_bytes) return take_pending();
    return std::nullopt;
}

std::optional<HandlerInvocation> LazyFreeAllocator::drain() {
    if (pending_.empty()) return std::nullopt;
    return take_pending();
}

std::optional<HandlerInvocation> LazyFreeAllocator::take_pending() {
    ++counters_.invocations;
    HandlerInvocation inv;
    inv.ranges = std::exchange(pending_, {});
    freed_size_ = 0;
    return inv;
}

void LazyFreeAllocator::reclaim(const HandlerInvocation& inv) {
    // LIFO reuse: the most recently freed block of a size is handed out first.
    for (const auto& [base, size] : inv.ranges) pool_.emplace(size, base);
}

HandlerResult run_revocation_handler(Smact& smact, const HandlerInvocation& inv,
                                     std::uint64_t handler_cost) {
    HandlerResult r;
    r.cycles = handler_cost;
    for (const auto& [base, size] : inv.ranges) r.entries_revoked += smact.revoke_range(base, size);
    return r;
}

}  // namespace safebet
