// Acceptance gate: one check per criterion, one PASS/FAIL line each.

#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "safebet/lazyfree.hpp"
#include "safebet/pipeline.hpp"
#include "safebet/report.hpp"
#include "safebet/scenario.hpp"
#include "safebet/smact.hpp"
#include "trace_builders.hpp"

using namespace safebet;

namespace {

int g_failures = 0;
std::ostringstream g_detail;

void expect(bool ok, const std::string& what) {
    if (!ok) g_detail << "    unmet: " << what << "\n";
}

void criterion(const char* name, const std::function<void()>& body) {
    g_detail.str("");
    body();
    const std::string detail = g_detail.str();
    std::printf("%s %s\n", detail.empty() ? "PASS" : "FAIL", name);
    if (!detail.empty()) {
        std::fputs(detail.c_str(), stdout);
        ++g_failures;
    }
}

SimStats run(const Trace& t, const std::string& policy,
             SmactGeometry geom = SmactGeometry{}) {
    return run_simulation(t, parse_policy(policy), geom).stats;
}

Trace scenario(ScenarioKind k, std::uint64_t seed) {
    ScenarioSpec s;
    s.kind = k;
    s.seed = seed;
    s.secret_byte = static_cast<std::uint8_t>(1 + seed % 251);
    return generate_scenario(s);
}

// 1. Every scenario kind, >= 20 seeds: Baseline leaks; full SafeBet,
//    NdaRestrictive, NdaPermissive(0) never do.
void security_matrix() {
    for (ScenarioKind k : kAllScenarios) {
        for (std::uint64_t seed = 1; seed <= 20; ++seed) {
            const Trace t = scenario(k, seed);
            const std::string tag =
                std::string(scenario_kind_name(k)) + "#" + std::to_string(seed);
            expect(run(t, "baseline").leaked, "baseline leaks " + tag);
            expect(!run(t, "safebet").leaked, "safebet blocks " + tag);
            expect(!run(t, "nda-restrictive").leaked, "nda-restrictive blocks " + tag);
            expect(!run(t, "nda-permissive:0").leaked, "nda-permissive:0 blocks " + tag);
        }
    }
}

// 2. Ablation map: static sources leak v2/rsb/confused_deputy only (of
//    those that full SafeBet blocks); no revocation leaks stale_permission
//    only.
void ablation_map() {
    for (ScenarioKind k : kAllScenarios) {
        for (std::uint64_t seed = 1; seed <= 5; ++seed) {
            const Trace t = scenario(k, seed);
            const std::string tag =
                std::string(scenario_kind_name(k)) + "#" + std::to_string(seed);
            const bool static_should_leak = k == ScenarioKind::SpectreV2 ||
                                            k == ScenarioKind::SpectreRsb ||
                                            k == ScenarioKind::ConfusedDeputy;
            expect(run(t, "safebet:static-source").leaked == static_should_leak,
                   "static-source verdict on " + tag);
            expect(run(t, "safebet:norevoke").leaked == (k == ScenarioKind::StalePermission),
                   "norevoke verdict on " + tag);
            expect(run(t, "safebet:nosmact").leaked, "nosmact leaks " + tag);
        }
    }
}

// 3. 100 random streams of 1e5 memory ops: unbounded-way SMACT == oracle
//    exactly; the finite SMACT has zero false positives.
void oracle_equivalence() {
    std::uint64_t disagreements = 0, false_positives = 0, lookups = 0;
    for (std::uint64_t trace_id = 0; trace_id < 100; ++trace_id) {
        std::mt19937_64 rng(1000 + trace_id);
        SmactGeometry unbounded;
        unbounded.ways = 0;
        Smact table{unbounded};
        Smact finite{SmactGeometry{}};
        PermissionOracle oracle{64};
        for (int step = 0; step < 100'000; ++step) {
            const Addr a = (rng() % 8192) * 64;
            const InstID inst = 1 + rng() % 8;
            const std::uint64_t roll = rng() % 100;
            if (roll < 45) {
                table.insert(a, inst);
                finite.insert(a, inst);
                oracle.commit(a, inst);
            } else if (roll < 92) {
                const bool owner = rng() % 2;
                std::optional<InstID> lbtos;
                if (rng() % 2) lbtos = 1 + rng() % 8;
                const bool expected = oracle.permitted(a, inst, lbtos, owner);
                ++lookups;
                if (is_hit(table.lookup(a, inst, lbtos, owner)) != expected) ++disagreements;
                if (is_hit(finite.lookup(a, inst, lbtos, owner)) && !expected) ++false_positives;
            } else {
                const std::uint64_t len = (1 + rng() % 64) * 64;
                table.revoke_range(a, len);
                finite.revoke_range(a, len);
                oracle.revoke_range(a, len);
            }
        }
    }
    expect(lookups > 1'000'000, "enough lookups exercised");
    expect(disagreements == 0,
           "unbounded SMACT disagreed " + std::to_string(disagreements) + " times");
    expect(false_positives == 0,
           "finite SMACT false-positive " + std::to_string(false_positives) + " times");
}

// 4. Cycle-count ordering on 50 random traces, plus the directional
//    high-locality slowdown split.
void policy_ordering() {
    for (std::uint64_t seed = 1; seed <= 50; ++seed) {
        const Trace t = testgen::load_heavy(seed, 2000);
        const std::uint64_t base = run(t, "baseline").cycles;
        const std::uint64_t sb = run(t, "safebet").cycles;
        const std::uint64_t nda0 = run(t, "nda-permissive:0").cycles;
        const std::uint64_t nda4 = run(t, "nda-permissive:4").cycles;
        const std::uint64_t ndar = run(t, "nda-restrictive").cycles;
        const std::string tag = "trace " + std::to_string(seed);
        expect(base <= sb && sb <= ndar, "baseline<=safebet<=ndar on " + tag);
        expect(nda0 <= nda4 && nda4 <= ndar, "nda ordering on " + tag);
    }
    const Trace hot = testgen::high_locality_chain(7);
    const SimStats base = run(hot, "baseline");
    const SimStats sb = run(hot, "safebet");
    const SimStats ndar = run(hot, "nda-restrictive");
    const double miss_mpki = 1000.0 * double(sb.smact.total_misses()) / double(sb.instructions);
    expect(miss_mpki < 1.0, "SMACT miss MPKI < 1 (got " + format_double(miss_mpki) + ")");
    const double sb_over = double(sb.cycles) / double(base.cycles);
    const double ndar_over = double(ndar.cycles) / double(base.cycles);
    expect(sb_over <= 1.10, "SafeBet within 10% (got " + format_double(sb_over) + ")");
    expect(ndar_over >= 1.30, "NdaRestrictive >= 30% over (got " + format_double(ndar_over) + ")");
}

// 5. Lazy-free: exact threshold counts, flat 10K-cycle charge, < 1%
//    overhead on a >= 32M-cycle trace.
void lazy_free_thresholds() {
    LazyFreeAllocator a;
    std::vector<Addr> ptrs;
    for (int i = 0; i < 25'001; ++i) ptrs.push_back(a.malloc64(8));
    bool early = false;
    for (int i = 0; i < 25'000; ++i) early = early || a.lazy_free(ptrs[i]).has_value();
    expect(!early, "no invocation through the 25,000th free");
    const auto inv = a.lazy_free(ptrs[25'000]);
    expect(inv && inv->ranges.size() == 25'001, "invocation exactly at the 25,001st free");

    LazyFreeAllocator a2;
    const Addr big = a2.malloc64(3ull << 20);
    expect(a2.lazy_free(big).has_value(), "single >2MB free invokes immediately");

    const Trace t = testgen::long_latency_with_frees();
    const SimStats s = run(t, "safebet");
    expect(s.handler_invocations == 2,
           "one threshold invocation plus the end-of-trace drain (got " +
               std::to_string(s.handler_invocations) + ")");
    expect(s.handler_cycles == 2 * 10'000, "10K cycles charged per invocation");
    expect(s.cycles >= 32'000'000,
           "trace long enough (got " + std::to_string(s.cycles) + " cycles)");
    const double overhead = double(s.handler_cycles) / double(s.cycles);
    expect(overhead < 0.01, "handler overhead < 1% (got " + format_double(overhead) + ")");
}

// 6. Disabling the chunk bitmask at least doubles SMACT misses on a
//    multi-chunk-per-slab working set.
void bitmask_isolation() {
    const Trace t = testgen::slab_sweep(11, 256, 4, 4);  // 4 chunks/slab touched
    const std::uint64_t with_mask = run(t, "safebet").smact.total_misses();
    const std::uint64_t without = run(t, "safebet:nobitmask").smact.total_misses();
    expect(without >= 2 * with_mask, "nobitmask misses " + std::to_string(without) +
                                         " vs " + std::to_string(with_mask));
}

// 7. Instruction-granularity sources splinter locality >= 4x when many
//    static loads share destinations.
void source_coarsening() {
    const Trace t = testgen::shared_destinations(12, 32, 4);  // 12 static loads
    const std::uint64_t region = run(t, "safebet").smact.total_misses();
    const std::uint64_t instr = run(t, "safebet:instr-source").smact.total_misses();
    expect(instr >= 4 * region,
           "instr-source misses " + std::to_string(instr) + " vs " + std::to_string(region));
}

// 8. Inheritance strictly reduces MissInstance and cycles on the benign
//    owner-utility trace, and never changes a leak verdict.
void inheritance_isolation() {
    const Trace t = testgen::benign_inheritance(3);
    const SimStats with_inh = run(t, "safebet");
    const SimStats without = run(t, "safebet:noinherit");
    expect(with_inh.smact.inherit_hits > 0, "inheritance hits occur");
    expect(with_inh.smact.miss_instance < without.smact.miss_instance,
           "strictly fewer MissInstance with inheritance");
    expect(with_inh.cycles < without.cycles, "strictly fewer cycles with inheritance");
    for (ScenarioKind k : kAllScenarios) {
        const Trace a = scenario(k, 2);
        expect(run(a, "safebet").leaked == run(a, "safebet:noinherit").leaked,
               std::string("verdict unchanged by inheritance on ") + scenario_kind_name(k));
    }
}

// 9. SMACT misses monotone non-increasing over {128, 512, 2048} entries;
//    a <= 512-KB working set sees < 1% cycle difference across the sweep.
void size_sensitivity() {
    const std::uint32_t slab_counts[] = {40, 96, 200, 400};
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
        for (std::uint32_t slabs : slab_counts) {
            const Trace t = testgen::slab_sweep(seed, slabs, 4, 3);
            std::uint64_t prev = ~std::uint64_t{0};
            for (std::uint32_t entries : {128u, 512u, 2048u}) {
                SmactGeometry g;
                g.entries = entries;
                const std::uint64_t misses = run(t, "safebet", g).smact.total_misses();
                expect(misses <= prev, "monotone misses, " + std::to_string(slabs) +
                                           " slabs seed " + std::to_string(seed) + " at " +
                                           std::to_string(entries) + " entries");
                prev = misses;
            }
        }
    }
    // 96 slabs x 4 KB = 384 KB working set: inside the 128-entry reach.
    const Trace small = testgen::slab_sweep(5, 96, 8, 4);
    SmactGeometry g128, g2048;
    g128.entries = 128;
    g2048.entries = 2048;
    const double c128 = double(run(small, "safebet", g128).cycles);
    const double c2048 = double(run(small, "safebet", g2048).cycles);
    const double rel = c128 > c2048 ? c128 / c2048 - 1.0 : c2048 / c128 - 1.0;
    expect(rel < 0.01, "cycle difference < 1% (got " + format_double(rel) + ")");
}

// 10. Byte-identical CSV on a re-run of the full matrix; serialize/parse
//     identity on every scenario trace.
void determinism_and_format() {
    std::string config =
        "policy = baseline\npolicy = safebet\npolicy = nda-restrictive\n"
        "policy = nda-permissive:4\n"
        "geometry = 512,8,4096,64\ngeometry = 128,8,4096,64\n"
        "seed = 1\nseed = 2\nseed = 3\n";
    for (ScenarioKind k : kAllScenarios)
        config += "scenario = " + std::string(scenario_kind_name(k)) + "\n";
    const Report r1 = run_experiment(parse_config_string(config));
    const Report r2 = run_experiment(parse_config_string(config));
    expect(!r1.any_error(), "matrix runs cleanly");
    expect(!r1.full_safebet_leak(), "full SafeBet never leaks in the matrix");
    expect(report_csv(r1) == report_csv(r2), "CSV byte-identical across runs");
    expect(report_from_json(report_json(r1)) == r1, "JSON round trip");

    for (ScenarioKind k : kAllScenarios) {
        for (std::uint64_t seed = 1; seed <= 5; ++seed) {
            const Trace t = scenario(k, seed);
            expect(parse_trace_string(serialize_trace(t)) == t,
                   std::string("trace round trip ") + scenario_kind_name(k));
        }
    }
}

}  // namespace

int main() {
    criterion("1. security matrix (7 scenarios x 20 seeds x 4 policies)", security_matrix);
    criterion("2. ablation mechanism map", ablation_map);
    criterion("3. oracle equivalence (100 x 1e5 ops)", oracle_equivalence);
    criterion("4. policy cycle ordering + directional slowdowns", policy_ordering);
    criterion("5. lazy-free thresholds and overhead budget", lazy_free_thresholds);
    criterion("6. bitmask isolation (>= 2x misses without)", bitmask_isolation);
    criterion("7. source-coarsening isolation (>= 4x misses)", source_coarsening);
    criterion("8. inheritance isolation on the benign-deputy trace", inheritance_isolation);
    criterion("9. SMACT size sensitivity", size_sensitivity);
    criterion("10. determinism and report format", determinism_and_format);
    if (g_failures) {
        std::printf("%d criterion(s) failed\n", g_failures);
        return 1;
    }
    std::printf("all criteria passed\n");
    return 0;
}
