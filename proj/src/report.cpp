#include "safebet/report.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

#include "safebet/trace.hpp"

namespace safebet {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::string basename(const std::string& path) {
    const auto slash = path.find_last_of('/');
    return slash == std::string::npos ? path : path.substr(slash + 1);
}

bool is_full_safebet(const PolicyConfig& p) {
    return p.kind == PolicyKind::SafeBet && p.safebet == SafeBetOptions{};
}

}  // namespace

SmactGeometry parse_geometry(const std::string& text) {
    SmactGeometry g;
    unsigned entries = 0, ways = 0, slab = 0, chunk = 0;
    char extra = 0;
    if (std::sscanf(text.c_str(), "%u,%u,%u,%u%c", &entries, &ways, &slab, &chunk, &extra) != 4)
        throw std::invalid_argument("geometry must be entries,ways,slab,chunk: " + text);
    g.entries = entries;
    g.ways = ways;
    g.slab_bytes = slab;
    g.chunk_bytes = chunk;
    g.validate();
    return g;
}

ExperimentConfig parse_config(std::istream& in) {
    ExperimentConfig cfg;
    std::vector<std::uint64_t> seeds;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config line " + std::to_string(line_no) +
                                        ": expected key=value");
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));
        try {
            if (key == "trace") cfg.trace_files.push_back(val);
            else if (key == "scenario") cfg.scenarios.push_back(parse_scenario_kind(val));
            else if (key == "seed") seeds.push_back(std::stoull(val));
            else if (key == "policy") cfg.policies.push_back(parse_policy(val));
            else if (key == "geometry") cfg.geometries.push_back(parse_geometry(val));
            else if (key == "width") cfg.core.width = std::stoul(val);
            else if (key == "iq_size") cfg.core.iq_size = std::stoul(val);
            else if (key == "rob_size") cfg.core.rob_size = std::stoul(val);
            else throw std::invalid_argument("unknown key '" + key + "'");
        } catch (const std::exception& e) {
            throw std::invalid_argument("config line " + std::to_string(line_no) + ": " +
                                        e.what());
        }
    }
    if (!seeds.empty()) cfg.seeds = seeds;
    if (cfg.trace_files.empty() && cfg.scenarios.empty())
        throw std::invalid_argument("config declares no trace or scenario");
    if (cfg.policies.empty()) throw std::invalid_argument("config declares no policy");
    if (cfg.geometries.empty()) cfg.geometries.push_back(SmactGeometry{});
    return cfg;
}

ExperimentConfig parse_config_string(const std::string& text) {
    std::istringstream in(text);
    return parse_config(in);
}

ExperimentConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open config: " + path);
    return parse_config(in);
}

bool Report::any_error() const {
    return std::any_of(runs.begin(), runs.end(), [](const RunRecord& r) { return !r.ok(); });
}

bool Report::full_safebet_leak() const {
    for (const RunRecord& r : runs)
        if (r.ok() && r.stats.leaked && is_full_safebet(parse_policy(r.policy))) return true;
    return false;
}

Report run_experiment(const ExperimentConfig& cfg) {
    struct Input {
        std::string label;
        Trace trace;
        std::string error;
    };
    std::vector<Input> inputs;
    for (const std::string& path : cfg.trace_files) {
        Input in;
        in.label = basename(path);
        try {
            in.trace = parse_trace_file(path);
        } catch (const std::exception& e) {
            in.error = e.what();
        }
        inputs.push_back(std::move(in));
    }
    for (ScenarioKind kind : cfg.scenarios) {
        for (std::uint64_t seed : cfg.seeds) {
            Input in;
            in.label = std::string(scenario_kind_name(kind)) + "#" + std::to_string(seed);
            ScenarioSpec spec;
            spec.kind = kind;
            spec.seed = seed;
            spec.secret_byte = static_cast<std::uint8_t>(1 + seed % 251);
            in.trace = generate_scenario(spec);
            inputs.push_back(std::move(in));
        }
    }

    Report rep;
    for (const Input& in : inputs) {
        for (const SmactGeometry& geom : cfg.geometries) {
            // The Baseline run anchors normalization for this (trace, geometry).
            double baseline_cycles = 0.0;
            std::vector<RunRecord> group;
            for (const PolicyConfig& pol : cfg.policies) {
                RunRecord rec;
                rec.trace = in.label;
                rec.policy = pol.name();
                rec.geometry = geom.label();
                if (!in.error.empty()) {
                    rec.error = in.error;
                } else {
                    try {
                        rec.stats = run_simulation(in.trace, pol, geom, cfg.core).stats;
                        if (pol.kind == PolicyKind::Baseline)
                            baseline_cycles = double(rec.stats.cycles);
                    } catch (const std::exception& e) {
                        rec.error = e.what();
                    }
                }
                group.push_back(std::move(rec));
            }
            for (RunRecord& rec : group) {
                if (rec.ok() && baseline_cycles > 0.0)
                    rec.norm_time = double(rec.stats.cycles) / baseline_cycles;
                rep.runs.push_back(std::move(rec));
            }
        }
    }
    std::sort(rep.runs.begin(), rep.runs.end(), [](const RunRecord& a, const RunRecord& b) {
        return std::tie(a.trace, a.policy, a.geometry) < std::tie(b.trace, b.policy, b.geometry);
    });
    return rep;
}

std::string format_double(double v) {
    char buf[40];
    for (int prec = 1; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof buf, "%.*g", prec, v);
        if (std::strtod(buf, nullptr) == v) return buf;
    }
    return buf;
}

std::string report_csv(const Report& r) {
    std::ostringstream out;
    out << "trace,policy,geometry,cycles,instructions,ipc,norm_time,smact_miss_slab,"
           "smact_miss_chunk,smact_miss_instance,smact_miss_total,replays,l3_mpki,"
           "handler_invocations,handler_cycles,leaked\n";
    for (const RunRecord& rec : r.runs) {
        if (!rec.ok()) continue;
        const SimStats& s = rec.stats;
        out << rec.trace << ',' << rec.policy << ',' << rec.geometry << ',' << s.cycles << ','
            << s.instructions << ',' << format_double(s.ipc()) << ','
            << format_double(rec.norm_time) << ',' << s.smact.miss_slab << ','
            << s.smact.miss_chunk << ',' << s.smact.miss_instance << ','
            << s.smact.total_misses() << ',' << s.replays << ',' << format_double(s.l3_mpki())
            << ',' << s.handler_invocations << ',' << s.handler_cycles << ','
            << (s.leaked ? "true" : "false") << '\n';
    }
    return out.str();
}

namespace {

using nlohmann::json;

json stats_json(const SimStats& s) {
    return json{
        {"cycles", s.cycles},
        {"instructions", s.instructions},
        {"replays", s.replays},
        {"handler_invocations", s.handler_invocations},
        {"handler_cycles", s.handler_cycles},
        {"leaked", s.leaked},
        {"smact",
         {{"hits", s.smact.hits},
          {"inherit_hits", s.smact.inherit_hits},
          {"miss_slab", s.smact.miss_slab},
          {"miss_chunk", s.smact.miss_chunk},
          {"miss_instance", s.smact.miss_instance},
          {"inserts", s.smact.inserts},
          {"evictions", s.smact.evictions},
          {"revoked_entries", s.smact.revoked_entries},
          {"flushes", s.smact.flushes}}},
        {"cache",
         {{"l1", {{"accesses", s.cache.l1.accesses}, {"misses", s.cache.l1.misses}}},
          {"l2", {{"accesses", s.cache.l2.accesses}, {"misses", s.cache.l2.misses}}},
          {"l3", {{"accesses", s.cache.l3.accesses}, {"misses", s.cache.l3.misses}}}}},
        {"allocator",
         {{"mallocs", s.allocator.mallocs},
          {"frees", s.allocator.frees},
          {"invocations", s.allocator.invocations}}},
    };
}

SimStats stats_from_json(const json& j) {
    SimStats s;
    s.cycles = j.at("cycles");
    s.instructions = j.at("instructions");
    s.replays = j.at("replays");
    s.handler_invocations = j.at("handler_invocations");
    s.handler_cycles = j.at("handler_cycles");
    s.leaked = j.at("leaked");
    const json& sm = j.at("smact");
    s.smact.hits = sm.at("hits");
    s.smact.inherit_hits = sm.at("inherit_hits");
    s.smact.miss_slab = sm.at("miss_slab");
    s.smact.miss_chunk = sm.at("miss_chunk");
    s.smact.miss_instance = sm.at("miss_instance");
    s.smact.inserts = sm.at("inserts");
    s.smact.evictions = sm.at("evictions");
    s.smact.revoked_entries = sm.at("revoked_entries");
    s.smact.flushes = sm.at("flushes");
    const json& c = j.at("cache");
    s.cache.l1.accesses = c.at("l1").at("accesses");
    s.cache.l1.misses = c.at("l1").at("misses");
    s.cache.l2.accesses = c.at("l2").at("accesses");
    s.cache.l2.misses = c.at("l2").at("misses");
    s.cache.l3.accesses = c.at("l3").at("accesses");
    s.cache.l3.misses = c.at("l3").at("misses");
    const json& a = j.at("allocator");
    s.allocator.mallocs = a.at("mallocs");
    s.allocator.frees = a.at("frees");
    s.allocator.invocations = a.at("invocations");
    return s;
}

}  // namespace

std::string report_json(const Report& r) {
    json runs = json::array();
    for (const RunRecord& rec : r.runs) {
        json j{{"trace", rec.trace},
               {"policy", rec.policy},
               {"geometry", rec.geometry},
               {"norm_time", rec.norm_time}};
        if (rec.ok())
            j["stats"] = stats_json(rec.stats);
        else
            j["error"] = rec.error;
        runs.push_back(std::move(j));
    }
    return json{{"runs", runs}}.dump(2) + "\n";
}

Report report_from_json(const std::string& text) {
    const json root = json::parse(text);
    Report r;
    for (const json& j : root.at("runs")) {
        RunRecord rec;
        rec.trace = j.at("trace");
        rec.policy = j.at("policy");
        rec.geometry = j.at("geometry");
        rec.norm_time = j.at("norm_time");
        if (j.contains("error"))
            rec.error = j.at("error");
        else
            rec.stats = stats_from_json(j.at("stats"));
        r.runs.push_back(std::move(rec));
    }
    return r;
}

bool operator==(const RunRecord& a, const RunRecord& b) {
    return a.trace == b.trace && a.policy == b.policy && a.geometry == b.geometry &&
           a.stats == b.stats && a.norm_time == b.norm_time && a.error == b.error;
}

bool operator==(const Report& a, const Report& b) { return a.runs == b.runs; }

}  // namespace safebet
