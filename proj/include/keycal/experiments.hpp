#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "keycal/biaslab.hpp"
#include "keycal/pipeline.hpp"

namespace keycal {

struct AblationRow {
    std::string id;
    PipelineConfig config;
    Roi roi;
};

/// Configuration grid of the top-down (rows A-I: FT, UCST, SNOOP, EC,
/// UKFT-CCRF, UKFT-CF) or bottom-up (rows A-J: HNOR, UCST, UKFT-CF, RNO)
/// ablations. Throws std::invalid_argument for an unknown preset.
std::vector<AblationRow> ablation_preset(const std::string& name);

struct CheckResult {
    std::string name;
    bool passed = false;
    std::string detail;
};

/// Transform identities, codec round trips and Monte Carlo vs closed-form
/// checks. `n` trials per Monte Carlo check.
std::vector<CheckResult> run_verification(std::int64_t n, std::uint64_t seed, int jobs = 1);

}  // namespace keycal
