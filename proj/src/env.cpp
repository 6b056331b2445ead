#include "uavdt/env.hpp"

#include <chrono>
#include <stdexcept>

#include "uavdt/errors.hpp"
#include "uavdt/probe.hpp"

namespace uavdt {

Vec3 action_to_delta(Action action, double step_size_m) {
    switch (action) {
        case Action::PosX: return {step_size_m, 0.0, 0.0};
        case Action::NegX: return {-step_size_m, 0.0, 0.0};
        case Action::PosY: return {0.0, step_size_m, 0.0};
        case Action::NegY: return {0.0, -step_size_m, 0.0};
        case Action::PosZ: return {0.0, 0.0, step_size_m};
        case Action::NegZ: return {0.0, 0.0, -step_size_m};
    }
    throw std::invalid_argument("action_to_delta: invalid action code " +
                                std::to_string(static_cast<int>(action)));
}

Environment::Environment(EnvConfig config) : cfg_(std::move(config)) {
    if (!(cfg_.step_size_m > 0.0)) throw ConfigError("env: step_size_m must be > 0");
    if (cfg_.episode_length < 1) throw ConfigError("env: episode_length must be >= 1");
    if (cfg_.start_jitter_m < 0.0) throw ConfigError("env: start_jitter_m must be >= 0");
    const auto violations = validate_scene(cfg_.scene);
    if (!violations.empty()) throw ConfigError("env: invalid scene: " + violations.front());
    faces_ = candidate_faces(cfg_.scene);
}

EnvState Environment::reset() const { return EnvState{cfg_.scene.uav_start, 0}; }

EnvState Environment::reset(std::mt19937_64& rng) const {
    if (cfg_.start_jitter_m == 0.0) return reset();
    const double j = cfg_.start_jitter_m;
    Vec3 pos = cfg_.scene.uav_start;
    pos.x += uniform_range(rng, -j, j);
    pos.y += uniform_range(rng, -j, j);
    pos.z += uniform_range(rng, -j, j);
    return EnvState{cfg_.scene.bounds.clamp(pos), 0};
}

StepResult Environment::step(const EnvState& state, Action action) const {
    if (state.step_index >= cfg_.episode_length)
        throw std::runtime_error("env: step on a finished episode (step_index=" +
                                 std::to_string(state.step_index) +
                                 ", T=" + std::to_string(cfg_.episode_length) + ")");
    const Vec3 moved = state.uav_pos + action_to_delta(action, cfg_.step_size_m);
    const Vec3 next = cfg_.scene.bounds.clamp(moved);

    StepResult result;
    auto [reward, reports] = evaluate_position(next);
    result.next_state = EnvState{next, state.step_index + 1};
    result.reward = reward;
    result.done = result.next_state.step_index == cfg_.episode_length;
    result.reports = std::move(reports);
    return result;
}

std::pair<double, std::vector<LinkReport>> Environment::evaluate_position(const Vec3& pos) const {
    if (!cfg_.scene.bounds.contains(pos))
        throw std::invalid_argument("env: position outside scene bounds");

    const auto t0 = std::chrono::steady_clock::now();
    std::vector<LinkReport> reports;
    reports.reserve(cfg_.scene.receivers.size());
    double reward = 0.0;
    for (int r = 0; r < cfg_.scene.receiver_count(); ++r) {
        reports.push_back(link_report(cfg_.scene, faces_, pos, r, cfg_.interferers, cfg_.radio));
        reward += cfg_.reward_scale == RewardScale::DbSum ? reports.back().sinr_db
                                                          : reports.back().sinr_linear;
    }
    const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - t0;
    probe().add_seconds(probe().trace_seconds, dt.count());
    return {reward, std::move(reports)};
}

std::array<double, 3> Environment::observe(const Vec3& pos) const {
    const Aabb& b = cfg_.scene.bounds;
    const auto norm = [](double v, double lo, double hi) {
        return 2.0 * (v - lo) / (hi - lo) - 1.0;
    };
    return {norm(pos.x, b.min.x, b.max.x), norm(pos.y, b.min.y, b.max.y),
            norm(pos.z, b.min.z, b.max.z)};
}

} // namespace uavdt
