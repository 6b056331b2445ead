#include "uavdt/channel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "uavdt/probe.hpp"

namespace uavdt {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

PropagationPath make_path(PathKind kind, int face_id, double length, double reflectance,
                          double lambda) {
    PropagationPath path;
    path.kind = kind;
    path.face_id = face_id;
    path.length_m = length;
    path.delay_s = length / kSpeedOfLight;
    const double amplitude = lambda / (4.0 * std::numbers::pi * length);
    path.power_gain = std::min(1.0, amplitude * amplitude * reflectance * reflectance);
    double phase = std::fmod(-kTwoPi * length / lambda, kTwoPi);
    if (phase < 0.0) phase += kTwoPi;
    path.phase_rad = phase;
    return path;
}

} // namespace

std::optional<Vec3> reflection_point(const Face& face, const Vec3& tx, const Vec3& rx) {
    const int a = face.axis;
    const double dt = tx[a] - face.offset;
    const double dr = rx[a] - face.offset;
    if (!((dt > 0.0 && dr > 0.0) || (dt < 0.0 && dr < 0.0))) return std::nullopt;

    Vec3 image = tx;
    image[a] = 2.0 * face.offset - tx[a];
    const double denom = rx[a] - image[a]; // |dr| + |dt| with a consistent sign
    const double t = (face.offset - image[a]) / denom;
    Vec3 pt = image + (rx - image) * t;
    pt[a] = face.offset;

    const auto [ua, va] = face_plane_axes(a);
    if (pt[ua] < face.u_min || pt[ua] > face.u_max || pt[va] < face.v_min || pt[va] > face.v_max)
        return std::nullopt;
    return pt;
}

ChannelImpulseResponse trace_paths(const Scene& scene, std::span<const Face> faces,
                                   const Vec3& tx, const Vec3& rx, const RadioConfig& radio) {
    const double direct = distance(tx, rx);
    if (direct < 0.01)
        throw std::runtime_error("trace_paths: tx-rx distance " + std::to_string(direct) +
                                 " m is inside the 1 cm near-field guard");

    probe().path_candidates.fetch_add(1 + faces.size(), std::memory_order_relaxed);

    const double lambda = kSpeedOfLight / radio.carrier_frequency_hz;
    ChannelImpulseResponse cir;
    cir.tx_pos = tx;
    cir.rx_pos = rx;

    if (!segment_occluded(scene, tx, rx))
        cir.paths.push_back(make_path(PathKind::Los, kGroundFace, direct, 1.0, lambda));

    for (std::size_t i = 0; i < faces.size(); ++i) {
        const Face& face = faces[i];
        if (face.reflectance == 0.0) continue; // a zero-gain path carries nothing
        const auto pt = reflection_point(face, tx, rx);
        if (!pt) continue;
        if (segment_occluded(scene, tx, *pt, &face)) continue;
        if (segment_occluded(scene, *pt, rx, &face)) continue;
        const double length = distance(tx, *pt) + distance(*pt, rx);
        cir.paths.push_back(
            make_path(PathKind::Reflected, static_cast<int>(i), length, face.reflectance, lambda));
    }

    std::sort(cir.paths.begin(), cir.paths.end(),
              [](const PropagationPath& a, const PropagationPath& b) {
                  if (a.delay_s != b.delay_s) return a.delay_s < b.delay_s;
                  return a.face_id < b.face_id;
              });
    return cir;
}

ChannelImpulseResponse trace_paths(const Scene& scene, const Vec3& tx, const Vec3& rx,
                                   const RadioConfig& radio) {
    const auto faces = candidate_faces(scene);
    return trace_paths(scene, faces, tx, rx, radio);
}

double received_power_w(const ChannelImpulseResponse& cir, const RadioConfig& radio) {
    if (cir.paths.empty()) return 0.0;
    if (!radio.coherent) {
        double total = 0.0;
        for (const PropagationPath& p : cir.paths) total += p.power_gain;
        return radio.tx_power_w * total;
    }
    double re = 0.0, im = 0.0;
    for (const PropagationPath& p : cir.paths) {
        const double amp = std::sqrt(p.power_gain);
        re += amp * std::cos(p.phase_rad);
        im += amp * std::sin(p.phase_rad);
    }
    return radio.tx_power_w * (re * re + im * im);
}

double noise_power_w(const RadioConfig& radio) {
    return kBoltzmann * radio.reference_temperature_k * radio.bandwidth_hz *
           std::pow(10.0, radio.noise_figure_db / 10.0);
}

LinkReport link_report(const Scene& scene, std::span<const Face> faces, const Vec3& uav_pos,
                       int receiver_index, std::span<const Vec3> interferers,
                       const RadioConfig& radio) {
    if (receiver_index < 0 || receiver_index >= scene.receiver_count())
        throw std::out_of_range("link_report: receiver index " + std::to_string(receiver_index) +
                                " out of range (R=" + std::to_string(scene.receiver_count()) + ")");
    const Vec3& rx = scene.receivers[static_cast<std::size_t>(receiver_index)];

    const double signal = received_power_w(trace_paths(scene, faces, uav_pos, rx, radio), radio);
    double interference = 0.0;
    for (const Vec3& pos : interferers)
        interference += received_power_w(trace_paths(scene, faces, pos, rx, radio), radio);

    LinkReport report;
    report.receiver = receiver_index;
    report.received_power_w = signal;
    report.sinr_linear = signal / (noise_power_w(radio) + interference);
    report.sinr_db = std::clamp(10.0 * std::log10(report.sinr_linear), radio.sinr_floor_db,
                                radio.sinr_ceiling_db);
    report.capacity_bps = radio.bandwidth_hz * std::log2(1.0 + report.sinr_linear);
    return report;
}

LinkReport link_report(const Scene& scene, const Vec3& uav_pos, int receiver_index,
                       std::span<const Vec3> interferers, const RadioConfig& radio) {
    const auto faces = candidate_faces(scene);
    return link_report(scene, faces, uav_pos, receiver_index, interferers, radio);
}

} // namespace uavdt
