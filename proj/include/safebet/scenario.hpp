#pragma once

#include <cstdint>
#include <string>

#include "safebet/trace.hpp"

namespace safebet {

enum class ScenarioKind {
    SpectreV1,
    SpectreV1_1,
    SpectreV2,
    SpectreRsb,
    SpectreV4,
    ConfusedDeputy,
    StalePermission,
};

inline constexpr ScenarioKind kAllScenarios[] = {
    ScenarioKind::SpectreV1,      ScenarioKind::SpectreV1_1,    ScenarioKind::SpectreV2,
    ScenarioKind::SpectreRsb,     ScenarioKind::SpectreV4,      ScenarioKind::ConfusedDeputy,
    ScenarioKind::StalePermission,
};

const char* scenario_kind_name(ScenarioKind k);
ScenarioKind parse_scenario_kind(const std::string& name);  // throws std::invalid_argument

struct ScenarioSpec {
    ScenarioKind kind = ScenarioKind::SpectreV1;
    std::uint8_t secret_byte = 42;
    std::uint32_t array_len = 16;
    std::uint32_t mistrain_iters = 5;
    std::uint64_t seed = 1;
};

// Deterministic attack-trace generation. The produced trace always
// validates, declares exactly one secret range, and opens a wrong-path
// window long enough for the access/transmit gadget pair.
Trace generate_scenario(const ScenarioSpec& spec);

}  // namespace safebet
