#pragma once

#include <optional>
#include <span>
#include <vector>

#include "uavdt/scene.hpp"

namespace uavdt {

inline constexpr double kSpeedOfLight = 299'792'458.0; // m/s
inline constexpr double kBoltzmann = 1.380649e-23;     // J/K

struct RadioConfig {
    double carrier_frequency_hz = 2.4e9;
    double bandwidth_hz = 20e6;
    double tx_power_w = 1.0; // 30 dBm
    double noise_figure_db = 7.0;
    double reference_temperature_k = 290.0;
    int max_reflection_order = 1; // fixed at 1 in this version
    double sinr_floor_db = -40.0;
    double sinr_ceiling_db = 60.0;
    bool coherent = false; // phase-coherent power combining
};

enum class PathKind { Los, Reflected };

struct PropagationPath {
    PathKind kind = PathKind::Los;
    int face_id = kGroundFace; // candidate-face index for reflected paths
    double length_m = 0.0;
    double delay_s = 0.0; // length / c
    double power_gain = 0.0; // linear, in (0, 1]
    double phase_rad = 0.0;  // -2*pi*length/lambda folded into [0, 2*pi)
};

struct ChannelImpulseResponse {
    Vec3 tx_pos;
    Vec3 rx_pos;
    std::vector<PropagationPath> paths; // sorted by ascending delay
};

struct LinkReport {
    int receiver = 0;
    double received_power_w = 0.0;
    double sinr_linear = 0.0;
    double sinr_db = 0.0; // clamped to [floor, ceiling]
    double capacity_bps = 0.0;
};

// Specular point on the face for the tx->rx bounce, by mirroring tx across
// the face plane. Absent when tx and rx are not strictly on the same side or
// the intersection falls outside the face extent.
std::optional<Vec3> reflection_point(const Face& face, const Vec3& tx, const Vec3& rx);

// First-order tracer: the LOS path when unobstructed plus one reflected path
// per candidate face whose specular point is valid and whose two legs are
// clear. Per-path power gain is (lambda / (4*pi*length))^2 * Gamma^2 with
// Gamma = 1 for LOS. Throws std::runtime_error inside the 1 cm near field.
ChannelImpulseResponse trace_paths(const Scene& scene, std::span<const Face> faces,
                                   const Vec3& tx, const Vec3& rx,
                                   const RadioConfig& radio);
ChannelImpulseResponse trace_paths(const Scene& scene, const Vec3& tx, const Vec3& rx,
                                   const RadioConfig& radio);

// Non-coherent sum of per-path powers by default; magnitude-squared sum of
// complex amplitudes when radio.coherent is set. Zero for an empty response.
double received_power_w(const ChannelImpulseResponse& cir, const RadioConfig& radio);

// kB * T * B * 10^(NF/10)
double noise_power_w(const RadioConfig& radio);

LinkReport link_report(const Scene& scene, std::span<const Face> faces,
                       const Vec3& uav_pos, int receiver_index,
                       std::span<const Vec3> interferers, const RadioConfig& radio);
LinkReport link_report(const Scene& scene, const Vec3& uav_pos, int receiver_index,
                       std::span<const Vec3> interferers, const RadioConfig& radio);

} // namespace uavdt
