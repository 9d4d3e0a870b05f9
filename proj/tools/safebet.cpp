#include <exception>
#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "safebet/pipeline.hpp"
#include "safebet/report.hpp"
#include "safebet/scenario.hpp"
#include "safebet/trace.hpp"

namespace {

constexpr const char* kVersion = "1.0.0";

// Exit codes: 0 ok, 1 config/usage error, 2 run failure, 3 full-SafeBet leak.
int cmd_run(const std::string& config_path, const std::string& csv_path,
            const std::string& json_path) {
    safebet::ExperimentConfig cfg;
    try {
        cfg = safebet::parse_config_file(config_path);
    } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    }
    const safebet::Report rep = safebet::run_experiment(cfg);
    const std::string csv = safebet::report_csv(rep);
    if (csv_path.empty()) {
        std::cout << csv;
    } else {
        std::ofstream out(csv_path);
        if (!out) {
            std::cerr << "cannot write " << csv_path << "\n";
            return 2;
        }
        out << csv;
    }
    if (!json_path.empty()) {
        std::ofstream out(json_path);
        if (!out) {
            std::cerr << "cannot write " << json_path << "\n";
            return 2;
        }
        out << safebet::report_json(rep);
    }
    for (const auto& run : rep.runs)
        if (!run.ok())
            std::cerr << "run failed: " << run.trace << " " << run.policy << " " << run.geometry
                      << ": " << run.error << "\n";
    if (rep.full_safebet_leak()) {
        std::cerr << "security verdict failure: SafeBet leaked\n";
        return 3;
    }
    return rep.any_error() ? 2 : 0;
}

int cmd_scenario(const std::string& kind_name, std::uint64_t seed, const std::string& out_path) {
    safebet::ScenarioSpec spec;
    try {
        spec.kind = safebet::parse_scenario_kind(kind_name);
    } catch (const std::exception& e) {
        std::cerr << e.what() << "\n";
        return 1;
    }
    spec.seed = seed;
    spec.secret_byte = static_cast<std::uint8_t>(1 + seed % 251);
    const std::string text = safebet::serialize_trace(safebet::generate_scenario(spec));
    if (out_path.empty()) {
        std::cout << text;
    } else {
        std::ofstream out(out_path);
        if (!out) {
            std::cerr << "cannot write " << out_path << "\n";
            return 2;
        }
        out << text;
    }
    return 0;
}

int cmd_dump_smact(const std::string& trace_path, const std::string& policy_name,
                   const std::string& geometry_text) {
    safebet::PolicyConfig policy;
    safebet::SmactGeometry geom;
    try {
        policy = safebet::parse_policy(policy_name);
        if (!geometry_text.empty()) geom = safebet::parse_geometry(geometry_text);
    } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    }
    try {
        const safebet::Trace trace = safebet::parse_trace_file(trace_path);
        const safebet::RunResult r = safebet::run_simulation(trace, policy, geom);
        std::cout << r.smact_dump << r.instance_dump << "\n";
    } catch (const std::exception& e) {
        std::cerr << "run failed: " << e.what() << "\n";
        return 2;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"SafeBet speculative-access-control simulator"};
    app.require_subcommand(1);

    auto* run = app.add_subcommand("run", "Run an experiment matrix from a config file");
    std::string config_path, csv_path, json_path;
    run->add_option("--config", config_path, "Experiment config file")->required();
    run->add_option("--csv", csv_path, "Write the CSV report here instead of stdout");
    run->add_option("--json", json_path, "Also write a full JSON report");

    auto* scenario = app.add_subcommand("scenario", "Generate an attack-scenario trace");
    std::string kind_name, out_path;
    std::uint64_t seed = 1;
    scenario->add_option("kind", kind_name, "Scenario kind, e.g. spectre_v1")->required();
    scenario->add_option("--seed", seed, "Generator seed");
    scenario->add_option("--out", out_path, "Output trace file (default stdout)");

    auto* dump = app.add_subcommand("dump-smact", "Run a trace and dump the final SMACT state");
    std::string trace_path, policy_name = "safebet", geometry_text;
    dump->add_option("trace", trace_path, "Trace file")->required();
    dump->add_option("--policy", policy_name, "Policy name (default safebet)");
    dump->add_option("--geometry", geometry_text, "entries,ways,slab,chunk");

    auto* version = app.add_subcommand("version", "Print the version");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }

    if (version->parsed()) {
        std::cout << "safebet " << kVersion << "\n";
        return 0;
    }
    if (run->parsed()) return cmd_run(config_path, csv_path, json_path);
    if (scenario->parsed()) return cmd_scenario(kind_name, seed, out_path);
    if (dump->parsed()) return cmd_dump_smact(trace_path, policy_name, geometry_text);
    return 1;
}
