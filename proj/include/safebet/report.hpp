#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "safebet/pipeline.hpp"
#include "safebet/scenario.hpp"
#include "safebet/smact.hpp"

namespace safebet {

// Parses "entries,ways,slab,chunk", e.g. "512,8,4096,64". Throws.
SmactGeometry parse_geometry(const std::string& text);

struct ExperimentConfig {
    std::vector<std::string> trace_files;
    std::vector<ScenarioKind> scenarios;
    std::vector<std::uint64_t> seeds{1};  // applied to each scenario
    std::vector<PolicyConfig> policies;
    std::vector<SmactGeometry> geometries;
    CoreConfig core;

    bool operator==(const ExperimentConfig&) const = default;
};

// Flat key=value config; '#' starts a comment, keys repeat to form lists:
//   trace = path/to/file.trace
//   scenario = spectre_v1
//   seed = 7
//   policy = safebet
//   geometry = 512,8,4096,64
// Throws std::invalid_argument with a line reference on bad input.
ExperimentConfig parse_config(std::istream& in);
ExperimentConfig parse_config_string(const std::string& text);
ExperimentConfig parse_config_file(const std::string& path);

struct RunRecord {
    std::string trace;     // file name or "<kind>#<seed>"
    std::string policy;
    std::string geometry;  // SmactGeometry::label()
    SimStats stats;
    double norm_time = 0.0;  // cycles / baseline cycles, same (trace, geometry)
    std::string error;       // nonempty: the run failed and stats are void

    bool ok() const { return error.empty(); }
};

struct Report {
    std::vector<RunRecord> runs;  // sorted by (trace, policy, geometry)

    bool any_error() const;
    bool full_safebet_leak() const;  // SafeBet with every feature on leaked
};

// Executes the full (trace x policy x geometry) matrix; per-run failures
// are recorded, config-level problems throw.
Report run_experiment(const ExperimentConfig& cfg);

// Shortest decimal form that parses back to exactly the same double.
std::string format_double(double v);

std::string report_csv(const Report& r);
std::string report_json(const Report& r);
Report report_from_json(const std::string& text);

bool operator==(const RunRecord& a, const RunRecord& b);
bool operator==(const Report& a, const Report& b);

}  // namespace safebet
