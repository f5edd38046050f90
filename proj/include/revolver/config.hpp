#pragma once

#include <string>

#include "revolver/env_sim.hpp"
#include "revolver/policy_gradient.hpp"
#include "revolver/td3.hpp"
#include "revolver/transfer.hpp"

namespace revolver {

// Everything a run needs, resolved from one config file. Family-conditional
// defaults (net sizes, learning rates, batch, backend) are applied before the
// file's own overrides.
struct RunConfig {
    std::string source_path;
    std::string target_path;
    EnvFamily family;
    TransferConfig transfer;
    Td3Config td3;
    PgConfig pg;
    RunMode mode = RunMode::Revolver;
    std::string expert_checkpoint;
    std::string raw_text;  // exact config bytes, for the manifest hash
};

struct ConfigError : std::runtime_error {
    int line;
    ConfigError(const std::string& msg, int line_no);
};

RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);

}  // namespace revolver
