#include "safebet/pipeline.hpp"

#include <algorithm>
#include <deque>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace safebet {

namespace {

constexpr std::uint64_t kNever = ~std::uint64_t{0} / 4;

struct Action {
    enum class Type { Insert, Transfer, Revoke, SetOwner };
    std::uint64_t cycle = 0;
    Type type = Type::Insert;
    // Insert
    Addr addr = 0;
    Addr pc = 0;
    std::optional<InstID> static_key;
    // Transfer
    OpKind kind = OpKind::Call;
    int from = 0;
    int to = 0;
    InstID decode_inst = 0;
    // Revoke
    std::vector<std::pair<Addr, std::uint64_t>> ranges;
    // SetOwner
    int region = 0;
};

int max_reg(const Trace& t) {
    int m = -1;
    for (const auto& op : t.ops) {
        for (int r : op.src_regs) m = std::max(m, r);
        if (op.dst_reg) m = std::max(m, *op.dst_reg);
    }
    return m;
}

}  // namespace

std::string PolicyConfig::name() const {
    switch (kind) {
        case PolicyKind::Baseline: return "baseline";
        case PolicyKind::NdaRestrictive: return "nda-restrictive";
        case PolicyKind::NdaPermissive: return "nda-permissive:" + std::to_string(nda_k);
        case PolicyKind::SafeBet: break;
    }
    std::string s = "safebet";
    if (!safebet.bitmask) s += ":nobitmask";
    if (safebet.source == SourceGranularity::Instruction) s += ":instr-source";
    if (!safebet.inheritance) s += ":noinherit";
    if (!safebet.instances) s += ":static-source";
    if (!safebet.revocation) s += ":norevoke";
    if (!safebet.smact) s += ":nosmact";
    return s;
}

PolicyConfig parse_policy(const std::string& name) {
    std::vector<std::string> parts;
    std::size_t pos = 0;
    while (pos <= name.size()) {
        const std::size_t colon = name.find(':', pos);
        parts.push_back(name.substr(pos, colon == std::string::npos ? colon : colon - pos));
        if (colon == std::string::npos) break;
        pos = colon + 1;
    }
    PolicyConfig p;
    if (parts[0] == "baseline") {
        if (parts.size() > 1) throw std::invalid_argument("baseline takes no options");
        return p;
    }
    if (parts[0] == "nda-restrictive") {
        if (parts.size() > 1) throw std::invalid_argument("nda-restrictive takes no options");
        p.kind = PolicyKind::NdaRestrictive;
        return p;
    }
    if (parts[0] == "nda-permissive") {
        if (parts.size() != 2) throw std::invalid_argument("nda-permissive requires a delay, e.g. nda-permissive:4");
        p.kind = PolicyKind::NdaPermissive;
        p.nda_k = static_cast<std::uint32_t>(std::stoul(parts[1]));
        return p;
    }
    if (parts[0] != "safebet") throw std::invalid_argument("unknown policy: " + name);
    p.kind = PolicyKind::SafeBet;
    for (std::size_t i = 1; i < parts.size(); ++i) {
        const std::string& o = parts[i];
        if (o == "nobitmask") p.safebet.bitmask = false;
        else if (o == "instr-source") p.safebet.source = SourceGranularity::Instruction;
        else if (o == "noinherit") p.safebet.inheritance = false;
        else if (o == "static-source") p.safebet.instances = false;
        else if (o == "norevoke") p.safebet.revocation = false;
        else if (o == "nosmact") p.safebet.smact = false;
        else throw std::invalid_argument("unknown safebet option: " + o);
    }
    return p;
}

RunResult run_simulation(const Trace& trace, const PolicyConfig& policy,
                         const SmactGeometry& geometry, const CoreConfig& core,
                         const HierarchyConfig& memory, const AllocatorConfig& alloc_cfg) {
    const bool is_safebet = policy.kind == PolicyKind::SafeBet;
    const SafeBetOptions& opt = policy.safebet;
    const bool gating = is_safebet && opt.smact;
    const bool inherit = gating && opt.inheritance && opt.instances &&
                         opt.source == SourceGranularity::Region;

    // Disabling the bitmask degenerates slabs to single chunks.
    SmactGeometry geom = geometry;
    if (is_safebet && !opt.bitmask) {
        geom.slab_bytes = geom.chunk_bytes;
    }
    geom.validate();

    Smact smact(geom);
    MemoryHierarchy hierarchy(memory);
    LazyFreeAllocator allocator(alloc_cfg, gating && opt.revocation);
    const int initial_region =
        trace.ops.empty() ? (trace.header.regions.empty() ? 0 : trace.header.regions.front().id)
                          : region_of(trace.ops.front().pc, trace.header.regions);
    InstanceTracker tracker(initial_region, trace.header.owner, core.depth_limit);

    const int nregs = max_reg(trace) + 1;
    std::vector<std::uint64_t> reg_ready(nregs, 0);
    std::vector<char> reg_taint(nregs, 0);

    // Dense keys for instruction-granularity sources.
    std::map<std::pair<InstID, Addr>, InstID> instr_keys;
    auto instr_key = [&](InstID inst, Addr pc) {
        auto [it, fresh] = instr_keys.try_emplace({inst, pc},
                                                  static_cast<InstID>(instr_keys.size() + 1));
        (void)fresh;
        return it->second;
    };

    // Commit-side effects, drained in commit-cycle order before each
    // gated lookup so a load sees exactly the permissions committed by
    // its issue cycle.
    std::deque<Action> actions;
    auto source_key = [&](InstID inst, Addr pc) -> InstID {
        if (!opt.instances) return static_cast<InstID>(region_of(pc, trace.header.regions));
        if (opt.source == SourceGranularity::Instruction) return instr_key(inst, pc);
        return inst;
    };
    auto drain_actions = [&](std::uint64_t up_to) {
        while (!actions.empty() && actions.front().cycle <= up_to) {
            const Action a = std::move(actions.front());
            actions.pop_front();
            switch (a.type) {
                case Action::Type::Insert: {
                    const InstID key = a.static_key
                                           ? *a.static_key
                                           : source_key(tracker.match_context().committed_tos, a.pc);
                    smact.insert(a.addr, key);
                    break;
                }
                case Action::Type::Transfer:
                    tracker.commit_transfer(a.kind, a.from, a.to, a.decode_inst);
                    break;
                case Action::Type::Revoke:
                    for (const auto& [lo, len] : a.ranges) smact.revoke_range(lo, len);
                    break;
                case Action::Type::SetOwner:
                    tracker.set_owner(a.region);
                    break;
            }
        }
    };

    // Per-op schedule state.
    std::vector<std::uint64_t> dispatch(trace.ops.size(), 0);
    std::vector<std::uint64_t> rob_exit(trace.ops.size(), 0);
    std::vector<std::uint64_t> iq_exit(trace.ops.size(), 0);
    std::vector<std::uint64_t> commit_hist;  // committed ops only
    std::uint64_t fetch_floor = 0;
    std::uint64_t last_dispatch = 0;
    std::uint64_t last_commit = 0;
    std::uint64_t commit_barrier = 0;
    std::uint64_t branch_resolve_max = 0;

    // Squash bookkeeping for the wrong-path run opened by the last
    // mispredicted branch.
    bool squash_pending = false;
    std::uint64_t squash_resolve = 0;
    std::vector<std::uint64_t> saved_ready;
    std::vector<char> saved_taint;
    std::uint64_t saved_resolve_max = 0;
    InstID saved_decode = 0;

    SimStats stats;

    for (std::size_t i = 0; i < trace.ops.size(); ++i) {
        const MicroOp& op = trace.ops[i];

        if (squash_pending && !op.wrong_path) {
            // Recover: wrong-path results and speculative decode state vanish.
            reg_ready = saved_ready;
            reg_taint = saved_taint;
            branch_resolve_max = saved_resolve_max;
            tracker.restore(saved_decode);
            fetch_floor = std::max(fetch_floor, squash_resolve + 1);
            squash_pending = false;
        }

        // Dispatch: fetch width, redirect floor, ROB and IQ occupancy.
        std::uint64_t d = std::max(last_dispatch, fetch_floor);
        if (i >= core.width) d = std::max(d, dispatch[i - core.width] + 1);
        if (i >= core.rob_size) d = std::max(d, rob_exit[i - core.rob_size]);
        if (i >= core.iq_size) d = std::max(d, iq_exit[i - core.iq_size]);
        dispatch[i] = d;
        last_dispatch = d;

        // Issue: operands ready.
        std::uint64_t issue = d + 1;
        bool tainted_src = false;
        for (int r : op.src_regs) {
            issue = std::max(issue, reg_ready[r]);
            tainted_src = tainted_src || reg_taint[r];
        }

        const bool executes = !op.wrong_path || issue < squash_resolve;
        const std::uint64_t nonspec_before = branch_resolve_max;

        if (executes && tainted_src && (op.wrong_path || nonspec_before > issue))
            stats.leaked = true;

        // Decode-side instance minting happens regardless of path and is
        // never rolled back.
        if (op.is_transfer()) {
            bool overflow = false;
            tracker.decode_transfer(overflow);
            if (overflow && gating) smact.flush();
        }

        std::uint64_t complete = issue + 1;
        std::uint64_t dst_ready = kNever;
        bool dst_taint = tainted_src;
        bool replay = false;       // SafeBet-gated committed load
        std::uint64_t fill_done = 0;

        if (!executes) {
            // Fetched but squashed before issuing: holds its slots only.
            iq_exit[i] = squash_resolve;
            rob_exit[i] = squash_resolve;
            if (op.dst_reg) {
                reg_ready[*op.dst_reg] = kNever;
                reg_taint[*op.dst_reg] = 0;
            }
            continue;
        }

        switch (op.kind) {
            case OpKind::Alu:
            case OpKind::Fence:
            case OpKind::Call:
            case OpKind::Return:
            case OpKind::Directive:
                complete = issue + 1;
                dst_ready = complete;
                break;
            case OpKind::Branch: {
                complete = issue + op.branch->resolve_after;
                branch_resolve_max = std::max(branch_resolve_max, complete);
                if (!op.wrong_path && op.branch->mispredicted()) {
                    squash_pending = true;
                    squash_resolve = complete;
                    saved_ready = reg_ready;
                    saved_taint = reg_taint;
                    saved_resolve_max = branch_resolve_max;
                    saved_decode = tracker.checkpoint();
                }
                break;
            }
            case OpKind::Store: {
                // Stores prefetch at issue and bypass any speculation gate;
                // the write itself lands at commit.
                hierarchy.access(*op.eff_addr, AccessKind::FillOnly, issue);
                complete = issue + 1;
                break;
            }
            case OpKind::Load: {
                bool gated = false;
                if (gating) {
                    drain_actions(issue);
                    const MatchContext m = tracker.match_context();
                    const int acc_region = region_of(op.pc, trace.header.regions);
                    const bool acc_is_owner = tracker.owner() && *tracker.owner() == acc_region;
                    const InstID key = source_key(tracker.decode_current(), op.pc);
                    std::optional<InstID> lbtos;
                    if (inherit && m.lbtos) lbtos = *m.lbtos;
                    gated = !is_hit(smact.lookup(*op.eff_addr, key, lbtos, acc_is_owner));
                }
                const AccessResult r = hierarchy.access(
                    *op.eff_addr, gated ? AccessKind::FillOnly : AccessKind::Load, issue);
                if (!gated) {
                    complete = issue + r.latency;
                    dst_ready = complete;
                    if (trace.header.secret_contains(*op.eff_addr) || op.secret_tag)
                        dst_taint = true;
                } else if (op.wrong_path) {
                    // Squashed before the fill could be used: never forwards.
                    complete = issue + r.latency;
                    dst_ready = kNever;
                    dst_taint = false;
                } else {
                    // Replay from the L1 once the load is at the ROB head.
                    replay = true;
                    fill_done = issue + r.latency;
                    complete = fill_done;
                    if (trace.header.secret_contains(*op.eff_addr) || op.secret_tag)
                        dst_taint = true;
                }
                break;
            }
        }

        // Wakeup restrictions that do not depend on the commit cycle.
        if (op.kind == OpKind::Load) {
            if (policy.kind == PolicyKind::NdaRestrictive && op.wrong_path)
                dst_ready = kNever;  // squashed loads never forward
            if (policy.kind == PolicyKind::NdaPermissive)
                dst_ready = std::max(dst_ready, nonspec_before + policy.nda_k);
        }

        if (op.wrong_path) {
            iq_exit[i] = std::min(issue, squash_resolve);
            rob_exit[i] = squash_resolve;
            if (op.dst_reg) {
                reg_ready[*op.dst_reg] = dst_ready;
                reg_taint[*op.dst_reg] = dst_taint;
            }
            continue;
        }

        // In-order commit, `width` per cycle, stalled by handler runs.
        std::uint64_t head = std::max(last_commit, commit_barrier);
        if (commit_hist.size() >= core.width)
            head = std::max(head, commit_hist[commit_hist.size() - core.width] + 1);
        std::uint64_t commit;
        if (replay) {
            // The replay is launched as the load nears the head, so its L1
            // access overlaps commit arbitration and stacks only on the fill.
            commit = std::max(head, fill_done + hierarchy.l1_hit_latency());
            ++stats.replays;
        } else {
            commit = std::max(head, complete + core.retire_delay);
        }
        commit_hist.push_back(commit);
        last_commit = commit;
        iq_exit[i] = issue;
        rob_exit[i] = commit;
        if (op.kind != OpKind::Directive) ++stats.instructions;

        // Commit-dependent wakeups: NDA-restrictive forwards loads only at
        // commit; a SafeBet replay forwards when the replay returns.
        if (op.kind == OpKind::Load) {
            if (policy.kind == PolicyKind::NdaRestrictive) dst_ready = commit;
            if (policy.kind == PolicyKind::SafeBet && replay) dst_ready = commit;
        }
        if (op.dst_reg) {
            reg_ready[*op.dst_reg] = dst_ready;
            reg_taint[*op.dst_reg] = dst_taint;
        }

        // Commit-side effects.
        if (op.is_transfer()) {
            if (i + 1 < trace.ops.size()) {
                Action a;
                a.cycle = commit;
                a.type = Action::Type::Transfer;
                a.kind = op.kind;
                a.from = region_of(op.pc, trace.header.regions);
                a.to = region_of(trace.ops[i + 1].pc, trace.header.regions);
                a.decode_inst = tracker.decode_current();
                actions.push_back(std::move(a));
            }
        } else if (op.is_memory() && gating) {
            Action a;
            a.cycle = commit;
            a.type = Action::Type::Insert;
            a.addr = *op.eff_addr;
            a.pc = op.pc;
            if (!opt.instances) a.static_key = source_key(0, op.pc);
            actions.push_back(std::move(a));
        } else if (op.kind == OpKind::Directive) {
            const Directive& dir = *op.directive;
            switch (dir.kind) {
                case DirectiveKind::Malloc:
                    allocator.malloc64(dir.size);
                    break;
                case DirectiveKind::Free: {
                    auto inv = allocator.lazy_free(dir.addr);
                    if (inv) {
                        stats.handler_cycles += alloc_cfg.handler_cost;
                        commit_barrier = std::max(commit_barrier, commit) + alloc_cfg.handler_cost;
                        if (opt.revocation) {
                            Action a;
                            a.cycle = commit;
                            a.type = Action::Type::Revoke;
                            a.ranges = inv->ranges;
                            actions.push_back(std::move(a));
                        }
                        allocator.reclaim(*inv);
                    }
                    break;
                }
                case DirectiveKind::SetOwner: {
                    Action a;
                    a.cycle = commit;
                    a.type = Action::Type::SetOwner;
                    a.region = dir.region;
                    actions.push_back(std::move(a));
                    break;
                }
            }
        }
    }

    drain_actions(kNever);
    if (auto inv = allocator.drain()) {
        stats.handler_cycles += alloc_cfg.handler_cost;
        commit_barrier = std::max(commit_barrier, last_commit) + alloc_cfg.handler_cost;
        if (opt.revocation)
            for (const auto& [lo, len] : inv->ranges) smact.revoke_range(lo, len);
        allocator.reclaim(*inv);
    }

    stats.cycles = std::max(last_commit, commit_barrier);
    stats.handler_invocations = allocator.counters().invocations;
    stats.smact = smact.counters();
    stats.cache = hierarchy.stats();
    stats.allocator = allocator.counters();

    RunResult result;
    result.stats = stats;
    result.smact_dump = smact.dump();
    result.instance_dump = tracker.dump();
    return result;
}

}  // namespace safebet
