#include "safebet/smact.hpp"

#include <algorithm>
#include <bit>
#include <sstream>
#include <stdexcept>

namespace safebet {

namespace {

std::uint32_t log2_exact(std::uint64_t v) {
    return static_cast<std::uint32_t>(std::countr_zero(v));
}

}  // namespace

std::uint32_t SmactGeometry::sets() const {
    if (ways == 0) return 64;  // unbounded ways keep the default split
    return entries / ways;
}

void SmactGeometry::validate() const {
    if (physical_tagged)
        throw std::invalid_argument("physically-tagged SMACT is unimplemented");
    if (slab_bytes == 0 || chunk_bytes == 0 || !std::has_single_bit(std::uint64_t{slab_bytes}) ||
        !std::has_single_bit(std::uint64_t{chunk_bytes}))
        throw std::invalid_argument("slab/chunk sizes must be powers of two");
    if (slab_bytes < chunk_bytes || slab_bytes / chunk_bytes > 64)
        throw std::invalid_argument("slab/chunk ratio must be in [1, 64]");
    if (ways != 0) {
        if (entries == 0 || ways > entries || entries % ways != 0)
            throw std::invalid_argument("entries must be a multiple of ways");
        if (!std::has_single_bit(std::uint64_t{entries / ways}))
            throw std::invalid_argument("set count must be a power of two");
    }
}

std::string SmactGeometry::label() const {
    std::ostringstream out;
    if (ways == 0)
        out << "unbounded";
    else
        out << entries << "e" << ways << "w";
    out << "-" << slab_bytes << "s" << chunk_bytes << "c";
    return out.str();
}

const char* verdict_name(Verdict v) {
    switch (v) {
        case Verdict::Hit: return "hit";
        case Verdict::HitByInheritance: return "hit-inherit";
        case Verdict::MissSlab: return "miss-slab";
        case Verdict::MissChunk: return "miss-chunk";
        case Verdict::MissInstance: return "miss-instance";
    }
    return "?";
}

AddressSplit split_address(Addr a, const SmactGeometry& g) {
    const std::uint32_t offset_bits = log2_exact(g.slab_bytes);
    const std::uint32_t index_bits = log2_exact(g.sets());
    AddressSplit s;
    s.slab_offset = static_cast<std::uint32_t>(a & (g.slab_bytes - 1));
    s.index = static_cast<std::uint32_t>((a >> offset_bits) & (g.sets() - 1));
    s.tag = a >> (offset_bits + index_bits);
    s.chunk_bit = s.slab_offset / g.chunk_bytes;
    return s;
}

Smact::Smact(SmactGeometry g) : geom_(g) {
    geom_.validate();
    sets_.resize(geom_.sets());
}

SmactEntry* Smact::find(std::uint32_t set, std::uint64_t tag, InstID inst) {
    for (auto& e : sets_[set])
        if (e.tag == tag && e.inst == inst) return &e;
    return nullptr;
}

Verdict Smact::lookup(Addr a, InstID inst, std::optional<InstID> lbtos_inst,
                      bool accessor_is_owner) {
    const AddressSplit s = split_address(a, geom_);
    const std::uint64_t bit = 1ull << s.chunk_bit;

    SmactEntry* own = find(s.index, s.tag, inst);
    if (own && (own->chunk_mask & bit)) {
        own->lru = ++tick_;
        ++counters_.hits;
        return Verdict::Hit;
    }
    // Inheritance from one level below TOS, owner accessor only.
    if (accessor_is_owner && lbtos_inst) {
        if (SmactEntry* e = find(s.index, s.tag, *lbtos_inst); e && (e->chunk_mask & bit)) {
            e->lru = ++tick_;
            ++counters_.inherit_hits;
            return Verdict::HitByInheritance;
        }
    }
    if (own) {
        ++counters_.miss_chunk;
        return Verdict::MissChunk;
    }
    // No matching-instance entry. Instance miss iff the chunk is present
    // under some other, non-inheritable instance.
    for (const auto& e : sets_[s.index]) {
        if (e.tag == s.tag && (e.chunk_mask & bit)) {
            ++counters_.miss_instance;
            return Verdict::MissInstance;
        }
    }
    ++counters_.miss_slab;
    return Verdict::MissSlab;
}

std::optional<SmactEntry> Smact::insert(Addr a, InstID inst) {
    const AddressSplit s = split_address(a, geom_);
    const std::uint64_t bit = 1ull << s.chunk_bit;
    ++counters_.inserts;

    if (SmactEntry* e = find(s.index, s.tag, inst)) {
        e->chunk_mask |= bit;
        e->lru = ++tick_;
        return std::nullopt;
    }
    auto& set = sets_[s.index];
    std::optional<SmactEntry> victim;
    if (geom_.ways != 0 && set.size() >= geom_.ways) {
        auto it = std::min_element(set.begin(), set.end(),
                                   [](const SmactEntry& x, const SmactEntry& y) {
                                       return x.lru < y.lru;
                                   });
        victim = *it;
        set.erase(it);
        ++counters_.evictions;
    }
    set.push_back({s.tag, inst, bit, ++tick_});
    return victim;
}

std::uint64_t Smact::revoke_range(Addr lo, std::uint64_t len) {
    if (len == 0) return 0;
    const Addr hi = lo + len;  // exclusive
    const Addr first_slab = lo & ~static_cast<Addr>(geom_.slab_bytes - 1);
    std::uint64_t touched = 0;

    for (Addr slab = first_slab; slab < hi; slab += geom_.slab_bytes) {
        const AddressSplit s = split_address(slab, geom_);
        // Chunk bits of this slab covered by [lo, hi).
        std::uint64_t kill = 0;
        for (std::uint32_t c = 0; c < geom_.mask_width(); ++c) {
            const Addr chunk_lo = slab + static_cast<Addr>(c) * geom_.chunk_bytes;
            if (chunk_lo + geom_.chunk_bytes > lo && chunk_lo < hi) kill |= 1ull << c;
        }
        if (kill == 0) continue;
        auto& set = sets_[s.index];
        for (auto it = set.begin(); it != set.end();) {
            if (it->tag == s.tag && (it->chunk_mask & kill)) {
                it->chunk_mask &= ~kill;
                ++touched;
                if (it->chunk_mask == 0) {
                    ++counters_.revoked_entries;
                    it = set.erase(it);
                    continue;
                }
            }
            ++it;
        }
    }
    return touched;
}

void Smact::flush() {
    for (auto& set : sets_) set.clear();
    ++counters_.flushes;
}

std::uint64_t Smact::valid_entries() const {
    std::uint64_t n = 0;
    for (const auto& set : sets_) n += set.size();
    return n;
}

std::string Smact::dump() const {
    std::ostringstream out;
    for (std::size_t set = 0; set < sets_.size(); ++set) {
        // Report ways in LRU-stamp order for a stable dump.
        auto sorted = sets_[set];
        std::sort(sorted.begin(), sorted.end(),
                  [](const SmactEntry& x, const SmactEntry& y) { return x.lru < y.lru; });
        for (std::size_t way = 0; way < sorted.size(); ++way) {
            char buf[128];
            std::snprintf(buf, sizeof buf, "set=%zu way=%zu tag=0x%llx inst=%u mask=0x%llx\n",
                          set, way, static_cast<unsigned long long>(sorted[way].tag),
                          sorted[way].inst,
                          static_cast<unsigned long long>(sorted[way].chunk_mask));
            out << buf;
        }
    }
    return out.str();
}

void PermissionOracle::revoke_range(Addr lo, std::uint64_t len) {
    if (len == 0) return;
    const std::uint64_t first = lo / chunk_bytes_;
    const std::uint64_t last = (lo + len - 1) / chunk_bytes_;
    for (auto it = pairs_.lower_bound({first, 0}); it != pairs_.end() && it->first <= last;)
        it = pairs_.erase(it);
}

bool PermissionOracle::permitted(Addr a, InstID inst, std::optional<InstID> lbtos_inst,
                                 bool accessor_is_owner) const {
    const std::uint64_t chunk = a / chunk_bytes_;
    if (pairs_.count({chunk, inst})) return true;
    if (accessor_is_owner && lbtos_inst && pairs_.count({chunk, *lbtos_inst})) return true;
    return false;
}

}  // namespace safebet
