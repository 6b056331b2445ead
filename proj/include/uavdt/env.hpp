#pragma once

#include <array>
#include <random>
#include <utility>
#include <vector>

#include "uavdt/channel.hpp"
#include "uavdt/scene.hpp"

namespace uavdt {

// Discrete moves along the signed axes. The integer encoding is stable:
// 0:+X 1:-X 2:+Y 3:-Y 4:+Z 5:-Z.
enum class Action : int {
    PosX = 0,
    NegX = 1,
    PosY = 2,
    NegY = 3,
    PosZ = 4,
    NegZ = 5,
};
inline constexpr int kActionCount = 6;

enum class RewardScale { DbSum, LinearSum };

struct EnvConfig {
    Scene scene;
    RadioConfig radio;
    double step_size_m = 5.0;
    int episode_length = 50; // steps per episode
    RewardScale reward_scale = RewardScale::DbSum;
    double start_jitter_m = 0.0; // optional seeded start offset, cube half-width
    std::vector<Vec3> interferers;
};

struct EnvState {
    Vec3 uav_pos;
    int step_index = 0;
};

struct StepResult {
    EnvState next_state;
    double reward = 0.0;
    bool done = false;
    std::vector<LinkReport> reports; // one per receiver, at the new position
};

Vec3 action_to_delta(Action action, double step_size_m);

// Positioning environment wrapping scene + channel. The object itself is
// immutable; episode state travels through step() explicitly, so evaluation
// is pure and safe to call concurrently.
class Environment {
  public:
    explicit Environment(EnvConfig config);

    const EnvConfig& config() const { return cfg_; }
    const Scene& scene() const { return cfg_.scene; }
    std::span<const Face> faces() const { return faces_; }

    EnvState reset() const;
    // Start-jitter variant; falls back to the plain reset when jitter is off.
    EnvState reset(std::mt19937_64& rng) const;

    // Moves, clamps to bounds, and evaluates all receivers at the new
    // position. Throws std::runtime_error when the episode is already done.
    StepResult step(const EnvState& state, Action action) const;

    // Stateless reward evaluation; agrees exactly with step() at the same
    // position. Throws std::invalid_argument for positions outside bounds.
    std::pair<double, std::vector<LinkReport>> evaluate_position(const Vec3& pos) const;

    // Position normalized to [-1, 1] by the flight bounds.
    std::array<double, 3> observe(const Vec3& pos) const;

  private:
    EnvConfig cfg_;
    std::vector<Face> faces_;
};

} // namespace uavdt
