#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "uavdt/channel.hpp"
#include "uavdt/env.hpp"
#include "uavdt/ledger.hpp"
#include "uavdt/ppo.hpp"
#include "uavdt/scene.hpp"

namespace uavdt {

// Parameters of the scripted ledger-sim workload (tasks driven end to end).
struct LedgerSimConfig {
    int users = 3;
    int nodes = 5;
    double fault_rate = 0.0; // fraction of nodes flagged dishonest
    int tasks = 100;
    int positions_per_task = 5;
    Token initial_balance = 1'000'000;
    Token node_stake = 1'000;
    int node_capacity = 2;
    Token payment = 50;
    std::int64_t gas_limit = 1'000;
    std::uint64_t seed = 1;
};

struct OutputConfig {
    std::filesystem::path dir = "out";
    std::uint64_t seed = 1; // master seed: training, jitter, ledger workload
};

// Union of every configurable field, grouped by owning module. Section and
// key names in the config file match the field names here.
struct RunConfig {
    GridSceneParams scene;
    std::string scene_file; // when set, load this scene instead of generating
    RadioConfig radio;

    double step_size_m = 5.0;
    int episode_length = 50;
    RewardScale reward_scale = RewardScale::DbSum;
    double start_jitter_m = 0.0;

    MlpShape shape;
    PpoHyperparams ppo;

    LedgerConfig ledger;
    LedgerSimConfig sim;

    OutputConfig output;
};

// INI-style file: [section] headers, key = value lines, # or ; comments.
// Unknown sections or keys are ConfigError; values are validated against the
// owning module's invariants by validate_config.
RunConfig parse_config_text(const std::string& text, const std::string& origin = "<config>");
RunConfig load_config_file(const std::filesystem::path& path);

void validate_config(const RunConfig& cfg); // throws ConfigError naming the field

// Flag > file > default.
void apply_seed_override(RunConfig& cfg, std::uint64_t seed);
void apply_out_override(RunConfig& cfg, const std::filesystem::path& dir);

// Builds the environment from the config: loads scene_file when given,
// otherwise generates the grid scene.
Environment make_environment(const RunConfig& cfg);

} // namespace uavdt
