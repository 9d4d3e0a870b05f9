#include "safebet/scenario.hpp"

#include <random>
#include <stdexcept>

#include "safebet/lazyfree.hpp"
#include "safebet/trace.hpp"

namespace safebet {

namespace {

constexpr Addr region_base(int id) { return static_cast<Addr>(id) << kRegionShift; }

// Generator-side state: per-region program counters plus a seeded RNG that
// perturbs offsets, filler counts, and the secret byte.
struct Gen {
    TraceBuilder b;
    std::mt19937_64 rng;
    Addr pc_cursor[8] = {};

    explicit Gen(std::uint64_t seed) : rng(seed) {}

    Addr pc(int region) {
        Addr p = region_base(region) + 0x1000 + pc_cursor[region];
        pc_cursor[region] += 4;
        return p;
    }
    std::uint64_t pick(std::uint64_t lo, std::uint64_t hi) {  // inclusive
        return lo + rng() % (hi - lo + 1);
    }
    void fill(int region, std::uint64_t n, int dst = 31) {
        for (std::uint64_t i = 0; i < n; ++i) b.alu(pc(region), {}, dst);
    }
    // Two dependent first-touch loads: the result register is ready only
    // after roughly two memory round trips, which holds the wrong-path
    // window open until earlier commits have landed in the SMACT.
    void delay_chain(int region, Addr line_a, Addr line_b, int dst) {
        b.load(pc(region), line_a, 8, {}, dst);
        b.load(pc(region), line_b, 8, {dst}, dst);
    }
};

constexpr std::uint32_t kAttackResolve = 900;
constexpr std::uint64_t kOobIndex = 1048557;

Trace gen_spectre_v1(const ScenarioSpec& s, bool store_bypass) {
    Gen g(s.seed);
    const int A = 1;
    const Addr X = region_base(A) + 0x0100'0000 + g.pick(0, 255) * 64;
    const Addr L = region_base(A) + 0x0200'0000 + g.pick(0, 255) * 64;
    g.b.region(A, region_base(A));
    g.b.data(X, X + s.array_len, A);
    g.b.data(L, L + 256 * 64, A);
    g.b.secret(X + kOobIndex, 1);

    g.fill(A, g.pick(2, 9));
    for (std::uint32_t i = 0; i < s.mistrain_iters; ++i) {
        g.b.branch(g.pc(A), {true, true, 8});
        g.b.load(g.pc(A), X + i % s.array_len, 1, {}, 1);
        g.b.load(g.pc(A), L + 64 * (i % 4), 8, {1}, 2);
    }
    if (store_bypass) g.b.store(g.pc(A), X + g.pick(0, s.array_len - 1), 1, {});

    g.b.branch(g.pc(A), {true, false, kAttackResolve});
    if (store_bypass) g.b.store(g.pc(A), X, 1, {}).wrong_path = true;
    g.b.load(g.pc(A), X + kOobIndex, 1, {}, 1).wrong_path = true;
    g.b.load(g.pc(A), L + 64 * s.secret_byte, 8, {1}, 2).wrong_path = true;
    g.b.alu(g.pc(A), {2}, 3).wrong_path = true;

    g.fill(A, g.pick(2, 9));
    return g.b.take();
}

// Committed victim loads grant the secret chunk to the victim's instance;
// the poisoned transfer then runs the gadget in the victim's region on the
// wrong path under a fresh instance.
Trace gen_spectre_v2(const ScenarioSpec& s, bool rsb) {
    Gen g(s.seed);
    const int A = 1, V = 2;
    const Addr S = region_base(V) + 0x0100'0000 + g.pick(0, 255) * 64;
    const Addr P = region_base(A) + 0x0200'0000 + g.pick(0, 255) * 64;
    const Addr D = region_base(A) + 0x0300'0000;
    const std::uint32_t secret_chunk = static_cast<std::uint32_t>(g.pick(0, 7));
    g.b.region(A, region_base(A));
    g.b.region(V, region_base(V));
    g.b.data(S, S + 8 * 64, V);
    g.b.data(P, P + 256 * 64, A);
    g.b.data(D, D + 2 * 64, A);
    g.b.secret(S + 64 * secret_chunk, 64);

    g.fill(A, g.pick(2, 9));
    g.b.transfer(OpKind::Call, g.pc(A));
    for (std::uint32_t j = 0; j < 8; ++j) g.b.load(g.pc(V), S + 64 * j, 8, {}, 9);
    g.b.transfer(OpKind::Return, g.pc(V));
    // After the victim's grants: their commits must land before the
    // wrong-path gadget issues.
    g.delay_chain(A, D, D + 64, 3);
    g.fill(A, g.pick(2, 9));

    g.b.branch(g.pc(A), {true, false, kAttackResolve});
    if (rsb) {
        // Poisoned return speculatively lands on a gadget elsewhere in the
        // victim; encode it as a wrong-path return into V.
        g.b.transfer(OpKind::Call, g.pc(A)).wrong_path = true;
        g.b.transfer(OpKind::Return, g.pc(V)).wrong_path = true;
    } else {
        g.b.transfer(OpKind::Call, g.pc(A)).wrong_path = true;
    }
    g.b.load(g.pc(V), S + 64 * secret_chunk, 1, {3}, 1).wrong_path = true;
    g.b.load(g.pc(V), P + 64 * s.secret_byte, 8, {1}, 2).wrong_path = true;

    g.fill(A, g.pick(2, 9));
    return g.b.take();
}

// The victim commits a store to its own chunk; the attacker's wrong-path
// load reads the stale-permission address from attacker code.
Trace gen_spectre_v4(const ScenarioSpec& s) {
    Gen g(s.seed);
    const int A = 1, V = 2;
    const Addr SD = region_base(V) + 0x0100'0000 + g.pick(0, 255) * 64;
    const Addr P = region_base(A) + 0x0200'0000 + g.pick(0, 255) * 64;
    const Addr D = region_base(A) + 0x0300'0000;
    g.b.region(A, region_base(A));
    g.b.region(V, region_base(V));
    g.b.data(SD, SD + 4 * 64, V);
    g.b.data(P, P + 256 * 64, A);
    g.b.data(D, D + 2 * 64, A);
    g.b.secret(SD, 64);

    g.fill(A, g.pick(2, 9));
    g.b.transfer(OpKind::Call, g.pc(A));
    g.b.store(g.pc(V), SD, 8, {});
    g.b.store(g.pc(V), SD + 64, 8, {});
    g.b.transfer(OpKind::Return, g.pc(V));
    g.delay_chain(A, D, D + 64, 3);
    g.fill(A, g.pick(2, 9));

    g.b.branch(g.pc(A), {true, false, kAttackResolve});
    g.b.load(g.pc(A), SD, 1, {3}, 1).wrong_path = true;
    g.b.load(g.pc(A), P + 64 * s.secret_byte, 8, {1}, 2).wrong_path = true;

    g.fill(A, g.pick(2, 9));
    return g.b.take();
}

// Owner utility commits a key load for visitor 1; visitor 2's call runs the
// same utility whose wrong-path ops touch the key under a new instance.
Trace gen_confused_deputy(const ScenarioSpec& s) {
    Gen g(s.seed);
    const int V1 = 1, V2 = 2, O = 3;
    const Addr K = region_base(O) + 0x0100'0000 + g.pick(0, 255) * 64;
    const Addr P = region_base(V2) + 0x0200'0000 + g.pick(0, 255) * 64;
    const Addr D = region_base(V1) + 0x0300'0000;
    g.b.region(V1, region_base(V1));
    g.b.region(V2, region_base(V2));
    g.b.region(O, region_base(O), true);
    g.b.data(K, K + 64, O);
    g.b.data(P, P + 256 * 64, V2);
    g.b.data(D, D + 2 * 64, V1);
    g.b.secret(K, 64);

    g.fill(V1, g.pick(2, 9));
    g.b.transfer(OpKind::Call, g.pc(V1));
    g.b.load(g.pc(O), K, 8, {}, 9);
    g.b.alu(g.pc(O));
    g.b.transfer(OpKind::Return, g.pc(O));
    g.delay_chain(V1, D, D + 64, 3);
    g.fill(V1, g.pick(1, 4));
    g.b.transfer(OpKind::Call, g.pc(V1));
    g.fill(V2, g.pick(1, 4));
    g.b.transfer(OpKind::Call, g.pc(V2));
    g.b.alu(g.pc(O));

    g.b.branch(g.pc(O), {true, false, kAttackResolve});
    g.b.load(g.pc(O), K, 1, {3}, 1).wrong_path = true;
    g.b.load(g.pc(O), P + 64 * s.secret_byte, 8, {1}, 2).wrong_path = true;

    g.b.alu(g.pc(O));
    g.b.transfer(OpKind::Return, g.pc(O));
    g.fill(V2, g.pick(2, 9));
    return g.b.take();
}

// Commit a load of a chunk, free past the byte threshold (revoking it),
// reallocate the same address to hold a secret, then wrong-path-load it.
Trace gen_stale_permission(const ScenarioSpec& s) {
    Gen g(s.seed);
    const int A = 1;
    const std::uint64_t big = 3ull << 20;  // single free above the 2-MB bound
    const AllocatorConfig acfg;
    const Addr Pq = acfg.arena_base;  // bump allocator: first block lands here
    const Addr L = region_base(A) + 0x0200'0000 + g.pick(0, 255) * 64;
    g.b.region(A, region_base(A));
    g.b.data(Pq, Pq + big, A);
    g.b.data(L, L + 256 * 64, A);
    g.b.secret(Pq, 64);

    g.fill(A, g.pick(2, 9));
    g.b.malloc_directive(big);
    g.b.load(g.pc(A), Pq, 8, {}, 9);  // grants the chunk pre-free
    g.fill(A, g.pick(2, 5));
    g.b.free_directive(Pq);           // > 2 MB: handler fires immediately
    g.b.malloc_directive(big);        // reuses the same base for the secret
    g.delay_chain(A, L + 128 * 64, L + 129 * 64, 3);
    g.fill(A, g.pick(2, 5));

    g.b.branch(g.pc(A), {true, false, kAttackResolve});
    g.b.load(g.pc(A), Pq, 1, {3}, 1).wrong_path = true;
    g.b.load(g.pc(A), L + 64 * s.secret_byte, 8, {1}, 2).wrong_path = true;

    g.fill(A, g.pick(2, 9));
    return g.b.take();
}

}  // namespace

const char* scenario_kind_name(ScenarioKind k) {
    switch (k) {
        case ScenarioKind::SpectreV1: return "spectre_v1";
        case ScenarioKind::SpectreV1_1: return "spectre_v1_1";
        case ScenarioKind::SpectreV2: return "spectre_v2";
        case ScenarioKind::SpectreRsb: return "spectre_rsb";
        case ScenarioKind::SpectreV4: return "spectre_v4";
        case ScenarioKind::ConfusedDeputy: return "confused_deputy";
        case ScenarioKind::StalePermission: return "stale_permission";
    }
    return "?";
}

ScenarioKind parse_scenario_kind(const std::string& name) {
    for (ScenarioKind k : kAllScenarios)
        if (name == scenario_kind_name(k)) return k;
    throw std::invalid_argument("unknown scenario kind: " + name);
}

Trace generate_scenario(const ScenarioSpec& spec) {
    if (spec.array_len == 0 || spec.mistrain_iters == 0)
        throw std::invalid_argument("scenario requires nonzero array_len and mistrain_iters");
    switch (spec.kind) {
        case ScenarioKind::SpectreV1: return gen_spectre_v1(spec, false);
        case ScenarioKind::SpectreV1_1: return gen_spectre_v1(spec, true);
        case ScenarioKind::SpectreV2: return gen_spectre_v2(spec, false);
        case ScenarioKind::SpectreRsb: return gen_spectre_v2(spec, true);
        case ScenarioKind::SpectreV4: return gen_spectre_v4(spec);
        case ScenarioKind::ConfusedDeputy: return gen_confused_deputy(spec);
        case ScenarioKind::StalePermission: return gen_stale_permission(spec);
    }
    throw std::invalid_argument("unknown scenario kind");
}

}  // namespace safebet
