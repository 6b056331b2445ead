#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "uavdt/config.hpp"
#include "uavdt/env.hpp"
#include "uavdt/ledger.hpp"
#include "uavdt/ppo.hpp"

namespace uavdt {

// ---- sweep (brute-force oracle) ----

struct SweepPoint {
    int ix = 0, iy = 0, iz = 0;
    Vec3 pos;
    double reward = 0.0;
    std::vector<double> sinr_db;
};

struct SweepResult {
    int nx = 0, ny = 0, nz = 0;
    std::vector<SweepPoint> points; // linear index (iz*ny + iy)*nx + ix, ix fastest
    std::size_t best_index = 0;     // argmax reward, lowest linear index on ties
};

SweepResult run_sweep(const Environment& env, int nx, int ny, int nz);
void write_sweep_csv(const std::filesystem::path& path, const SweepResult& sweep);

// ---- episodes.csv ----

std::string episodes_csv_header(int receivers);
std::string episodes_csv_row(const EpisodeMetrics& m);

// ---- complexity probe ----

struct ProbeSample {
    double value = 0.0;         // swept variable value
    std::uint64_t counter = 0;  // dominant counter at that value
    double seconds = 0.0;       // wall clock of the dominant phase
};

struct ProbeReport {
    std::string variable;     // E | T | R | W
    std::string counter_name; // path_candidates | mlp_macs
    std::vector<ProbeSample> samples;
    double slope = 0.0; // log-log least-squares fit
};

double loglog_slope(std::span<const ProbeSample> samples);
ProbeReport run_probe(const RunConfig& cfg, const std::string& variable,
                      const std::vector<int>& values);

// ---- ledger-sim ----

struct LedgerSimReport {
    int tasks = 0;
    int settled = 0;
    int refunded = 0;
    bool conservation_ok = false;
    bool no_unverified_pay_ok = false;
    bool replay_ok = false;
    std::filesystem::path log_path;
    std::filesystem::path timeline_path;
};

LedgerSimReport run_ledger_sim(const RunConfig& cfg, std::ostream& out);

// ---- commands (throw on failure; run_cli maps exceptions to exit codes) ----

void cmd_scene_gen(const RunConfig& cfg, std::ostream& out);
void cmd_train(const RunConfig& cfg, std::ostream& out);
void cmd_eval(const RunConfig& cfg, const std::filesystem::path& checkpoint, std::ostream& out);
void cmd_sweep(const RunConfig& cfg, int nx, int ny, int nz, std::ostream& out);
void cmd_ledger_sim(const RunConfig& cfg, std::ostream& out);
void cmd_probe(const RunConfig& cfg, const std::string& variable, std::vector<int> values,
               std::ostream& out);

// Exit codes: 0 ok, 2 config error, 3 runtime error, 4 invariant violation.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace uavdt
