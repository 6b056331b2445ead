#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "uavdt/env.hpp"

namespace uavdt {

struct MlpShape {
    int input_dim = 3;
    int hidden_layers = 2; // H
    int width = 64;        // W
    int action_dim = 6;

    // Trunk + both heads, weights and biases.
    int parameter_count() const;

    bool operator==(const MlpShape&) const = default;
};

// Actor-critic MLP: shared tanh trunk, linear policy head (width -> actions)
// and linear value head (width -> 1). Parameters live in one flat vector so
// the optimizer and the finite-difference checks can treat the network as a
// plain coordinate vector.
class PolicyNetwork {
  public:
    PolicyNetwork() = default;
    explicit PolicyNetwork(const MlpShape& shape); // zero-initialized

    const MlpShape& shape() const { return shape_; }
    std::vector<double>& params() { return params_; }
    const std::vector<double>& params() const { return params_; }

    struct Output {
        std::vector<double> logits;
        double value = 0.0;
    };
    Output forward(std::span<const double> obs) const;

    // Forward pass that keeps the per-layer activations needed by backward().
    struct Trace {
        std::vector<std::vector<double>> hidden; // post-tanh, one per trunk layer
        std::vector<double> logits;
        double value = 0.0;
    };
    Trace forward_trace(std::span<const double> obs) const;

    // Accumulates d(total)/d(params) into grad given the gradient at the two
    // heads for one sample. grad must have parameter_count() entries.
    void backward(std::span<const double> obs, const Trace& trace,
                  std::span<const double> dlogits, double dvalue,
                  std::span<double> grad) const;

  private:
    MlpShape shape_;
    std::vector<double> params_;

    friend PolicyNetwork init_network(const MlpShape&, std::uint64_t);
};

// Seeded init: weights uniform in ±1/sqrt(fan_in), biases zero.
PolicyNetwork init_network(const MlpShape& shape, std::uint64_t seed);

struct Transition {
    std::array<double, 3> obs{};
    int action = 0;
    double reward = 0.0;
    std::array<double, 3> obs_next{};
    double log_prob = 0.0;
    double value = 0.0;
    bool done = false;
};

// Flattened scalar count of one stored transition (3 + 1 + 1 + 3 + 1 + 1 + 1).
inline constexpr int kTransitionDim = 11;

struct PpoHyperparams {
    double gamma = 0.99;
    double gae_lambda = 0.95;
    double clip_epsilon = 0.2;
    double learning_rate = 3e-4;
    int update_epochs = 4;
    int minibatch_size = 64;
    double value_loss_coeff = 0.5;
    double entropy_coeff = 0.01;
    int episodes = 300;
    std::uint64_t seed = 1;
};

std::vector<double> log_softmax(std::span<const double> logits);

// Categorical draw from softmax(logits); returns the index and its log-prob.
std::pair<int, double> sample_action(std::span<const double> logits, std::mt19937_64& rng);

struct GaeResult {
    std::vector<double> advantages;
    std::vector<double> returns;
};
// delta_t = r_t + gamma*V(s_{t+1})*(1-done_t) - V(s_t)
// A_t = delta_t + gamma*lambda*(1-done_t)*A_{t+1};  returns_t = A_t + V(s_t)
GaeResult compute_gae(std::span<const Transition> trajectory, double gamma, double lambda);

struct AdamState {
    std::vector<double> m, v;
    std::int64_t t = 0;
    double beta1 = 0.9, beta2 = 0.999, epsilon = 1e-8;

    void init(int n);
    void step(std::vector<double>& params, std::span<const double> grad, double lr);
};

struct LossStats {
    double policy_loss = 0.0;
    double value_loss = 0.0;
    double entropy = 0.0;
    double total = 0.0;
};

struct PpoBatch {
    std::vector<std::array<double, 3>> obs;
    std::vector<int> actions;
    std::vector<double> old_log_probs;
    std::vector<double> advantages;
    std::vector<double> returns;
    std::size_t size() const { return obs.size(); }
};

// Clipped-surrogate composite loss over one minibatch:
//   total = policy + c_v * value - c_e * entropy
// with the policy term -mean(min(rho*A, clip(rho)*A)). When grad is non-null
// it receives the exact mean gradient via reverse-mode differentiation.
LossStats ppo_loss(const PolicyNetwork& net, const PpoBatch& batch,
                   const PpoHyperparams& hp, std::vector<double>* grad);

// One policy update over a collected episode: GAE, advantage normalization
// (skipped when variance < 1e-8), then update_epochs passes over shuffled
// minibatches with Adam steps. Throws std::runtime_error naming the epoch and
// minibatch if a loss goes non-finite. Returns stats averaged over minibatches.
LossStats ppo_update(PolicyNetwork& net, AdamState& adam,
                     std::span<const Transition> episode,
                     const PpoHyperparams& hp, std::mt19937_64& rng);

struct EpisodeMetrics {
    int episode = 0;
    std::vector<double> mean_sinr_db;      // per receiver, mean over steps
    std::vector<double> mean_capacity_bps; // per receiver, mean over steps
    double capacity_sum_bps = 0.0;         // sum of per-receiver means
    double episode_return = 0.0;           // undiscounted reward sum
    double policy_loss = 0.0;
    double value_loss = 0.0;
    double entropy = 0.0;
};

struct TrainResult {
    PolicyNetwork net;
    std::vector<EpisodeMetrics> metrics;
};

// Full training loop: episodes x steps of observe -> act -> step -> store,
// one ppo_update per episode. Fully reproducible per seed.
TrainResult train(const Environment& env, const MlpShape& shape, const PpoHyperparams& hp,
                  const std::function<void(const EpisodeMetrics&)>& on_episode = {});

struct RolloutResult {
    std::vector<Vec3> positions; // start plus one entry per step
    std::vector<double> rewards; // reward evaluated at each position
    Vec3 best_position;
    double best_reward = 0.0;
    int best_step = 0; // index into positions; earliest on ties
};

// Deterministic argmax-action rollout from reset.
RolloutResult greedy_rollout(const PolicyNetwork& net, const Environment& env);

// Versioned text checkpoint; parameters stored as hex-encoded IEEE bits so
// round trips are exact. Load errors name the offending line.
void save_checkpoint(const PolicyNetwork& net, const std::filesystem::path& path);
PolicyNetwork load_checkpoint(const std::filesystem::path& path);

} // namespace uavdt
