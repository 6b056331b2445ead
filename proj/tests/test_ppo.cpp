#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "uavdt/errors.hpp"
#include "uavdt/ppo.hpp"
#include "uavdt/probe.hpp"

using namespace uavdt;

namespace {

Scene open_scene() {
    Scene s;
    s.ground_reflectance = 0.6;
    s.bounds = {{-60, -60, 10}, {60, 60, 80}};
    s.receivers = {{0, 0, 1.5}};
    s.uav_start = {35, 35, 55};
    return s;
}

EnvConfig tiny_env_config() {
    EnvConfig cfg;
    cfg.scene = open_scene();
    cfg.step_size_m = 5.0;
    cfg.episode_length = 5;
    return cfg;
}

MlpShape small_shape() { return MlpShape{3, 1, 8, 6}; }

// an episode of hand-built transitions with uniform-policy log-probs
std::vector<Transition> synthetic_episode(std::span<const double> rewards) {
    const std::vector<double> zero6(6, 0.0);
    const double lp = log_softmax(zero6)[0];
    std::vector<Transition> eps;
    for (std::size_t t = 0; t < rewards.size(); ++t) {
        Transition tr;
        tr.obs = {0.1 * static_cast<double>(t), -0.2, 0.3};
        tr.action = static_cast<int>(t % 6);
        tr.reward = rewards[t];
        tr.obs_next = tr.obs;
        tr.log_prob = lp;
        tr.value = 0.0;
        tr.done = t + 1 == rewards.size();
        eps.push_back(tr);
    }
    return eps;
}

std::filesystem::path temp_file(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / "uavdt_ppo_tests";
    std::filesystem::create_directories(dir);
    return dir / name;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void spit(const std::filesystem::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    out << text;
}

} // namespace

TEST_CASE("parameter count") {
    CHECK(MlpShape{3, 2, 64, 6}.parameter_count() == 4871);
    CHECK(small_shape().parameter_count() == 95); // 24+8 + 48+6 + 8+1
    CHECK(MlpShape{3, 1, 1, 1}.parameter_count() == 4 + 2 + 2);
    CHECK(PolicyNetwork(small_shape()).params().size() == 95);
}

TEST_CASE("zero-initialized network is the uniform policy") {
    const PolicyNetwork net(MlpShape{3, 2, 16, 6});
    const std::vector<double> obs{0.4, -0.9, 0.2};
    const auto out = net.forward(obs);
    REQUIRE(out.logits.size() == 6);
    for (double l : out.logits) CHECK(l == 0.0);
    CHECK(out.value == 0.0);
    const auto ls = log_softmax(out.logits);
    for (double l : ls) CHECK(l == doctest::Approx(-std::log(6.0)).epsilon(1e-14));
}

TEST_CASE("seeded initialization: bounded weights, zero biases, reproducible") {
    const MlpShape shape{3, 2, 16, 6};
    const PolicyNetwork a = init_network(shape, 77);
    const PolicyNetwork b = init_network(shape, 77);
    const PolicyNetwork c = init_network(shape, 78);
    CHECK(a.params() == b.params());
    CHECK(a.params() != c.params());

    // block layout: [W0 b0][W1 b1][Wp bp][Wv bv]
    const auto& p = a.params();
    const double lim0 = 1.0 / std::sqrt(3.0);
    const double limw = 1.0 / std::sqrt(16.0);
    std::size_t i = 0;
    for (; i < 16 * 3; ++i) CHECK(std::abs(p[i]) <= lim0);
    for (std::size_t k = 0; k < 16; ++k) CHECK(p[i + k] == 0.0); // biases
    i += 16;
    for (std::size_t k = 0; k < 16 * 16; ++k) CHECK(std::abs(p[i + k]) <= limw);
    i += 16 * 16;
    for (std::size_t k = 0; k < 16; ++k) CHECK(p[i + k] == 0.0);
    double nonzero = 0.0;
    for (double v : p) nonzero += v != 0.0 ? 1.0 : 0.0;
    CHECK(nonzero > 100); // the weights are actually random, not left at zero
}

TEST_CASE("value head is linear in its own parameters") {
    const MlpShape shape = small_shape();
    PolicyNetwork net = init_network(shape, 5);
    const std::vector<double> obs{0.2, 0.8, -0.5};
    const auto before = net.forward(obs);

    // the value head (W+1 parameters) sits at the tail of the flat vector
    auto& p = net.params();
    for (std::size_t i = p.size() - 9; i < p.size(); ++i) p[i] *= 2.0;
    const auto after = net.forward(obs);
    CHECK(after.value == 2.0 * before.value);
    CHECK(after.logits == before.logits);
}

TEST_CASE("forward and forward_trace agree") {
    const PolicyNetwork net = init_network(MlpShape{3, 3, 12, 6}, 21);
    const std::vector<double> obs{-0.3, 0.6, 0.9};
    const auto out = net.forward(obs);
    const auto trace = net.forward_trace(obs);
    CHECK(out.logits == trace.logits);
    CHECK(out.value == trace.value);
    REQUIRE(trace.hidden.size() == 3);
    for (const auto& h : trace.hidden) {
        REQUIRE(h.size() == 12);
        for (double v : h) CHECK(std::abs(v) < 1.0); // tanh range
    }
}

TEST_CASE("log_softmax normalizes and is shift invariant") {
    const std::vector<double> logits{0.3, -0.7, 1.1, 0.0, -2.0, 0.5};
    const auto ls = log_softmax(logits);
    double mass = 0.0;
    for (double l : ls) {
        CHECK(l < 0.0);
        mass += std::exp(l);
    }
    CHECK(mass == doctest::Approx(1.0).epsilon(1e-12));

    std::vector<double> shifted = logits;
    for (double& v : shifted) v += 1234.5;
    const auto ls2 = log_softmax(shifted);
    for (std::size_t i = 0; i < ls.size(); ++i)
        CHECK(ls2[i] == doctest::Approx(ls[i]).epsilon(1e-12));

    // extreme logits survive thanks to max subtraction
    const auto extreme = log_softmax(std::vector<double>{1000.0, 0.0, -1000.0});
    CHECK(std::isfinite(extreme[0]));
    CHECK(extreme[0] == doctest::Approx(0.0));
    CHECK(extreme[1] == doctest::Approx(-1000.0).epsilon(1e-9));
}

TEST_CASE("sample_action: one draw per call, matching log-probs, 4-sigma frequencies") {
    const std::vector<double> logits{0.3, -0.7, 1.1, 0.0, -2.0, 0.5};
    const auto ls = log_softmax(logits);

    std::mt19937_64 rng(123), twin(123);
    const auto [a0, lp0] = sample_action(logits, rng);
    CHECK(lp0 == ls[static_cast<std::size_t>(a0)]);
    (void)twin();
    CHECK(rng() == twin()); // exactly one engine draw consumed

    const int n = 60000;
    std::vector<int> counts(6, 0);
    std::mt19937_64 r2(123);
    for (int i = 0; i < n; ++i) {
        const auto [a, lp] = sample_action(logits, r2);
        REQUIRE(a >= 0);
        REQUIRE(a < 6);
        CHECK(lp <= 0.0);
        ++counts[static_cast<std::size_t>(a)];
    }
    for (std::size_t i = 0; i < 6; ++i) {
        const double p = std::exp(ls[i]);
        const double sigma = std::sqrt(n * p * (1.0 - p));
        CHECK(std::abs(counts[i] - n * p) <= 4.0 * sigma);
    }
}

TEST_CASE("gae: base cases") {
    SUBCASE("empty trajectory throws") {
        CHECK_THROWS_AS(compute_gae({}, 0.99, 0.95), std::invalid_argument);
    }

    SUBCASE("single terminal step") {
        Transition tr;
        tr.reward = 3.0;
        tr.value = 1.25;
        tr.done = true;
        const auto g = compute_gae(std::vector<Transition>{tr}, 0.99, 0.95);
        CHECK(g.advantages[0] == 3.0 - 1.25);
        CHECK(g.returns[0] == g.advantages[0] + 1.25);
    }

    SUBCASE("lambda zero reduces to one-step deltas") {
        std::vector<Transition> traj(4);
        std::mt19937_64 rng(2);
        for (std::size_t t = 0; t < traj.size(); ++t) {
            traj[t].reward = uniform_range(rng, -2, 2);
            traj[t].value = uniform_range(rng, -1, 1);
            traj[t].done = t + 1 == traj.size();
        }
        const double gamma = 0.9;
        const auto g = compute_gae(traj, gamma, 0.0);
        for (std::size_t t = 0; t < traj.size(); ++t) {
            const double v_next = t + 1 < traj.size() ? traj[t + 1].value : 0.0;
            const double nonterm = traj[t].done ? 0.0 : 1.0;
            const double delta = traj[t].reward + gamma * v_next * nonterm - traj[t].value;
            CHECK(g.advantages[t] == doctest::Approx(delta).epsilon(1e-14));
            CHECK(g.returns[t] == g.advantages[t] + traj[t].value);
        }
    }

    SUBCASE("gamma zero ignores the future entirely") {
        std::vector<Transition> traj(5);
        std::mt19937_64 rng(3);
        for (std::size_t t = 0; t < traj.size(); ++t) {
            traj[t].reward = uniform_range(rng, -2, 2);
            traj[t].value = uniform_range(rng, -1, 1);
            traj[t].done = t + 1 == traj.size();
        }
        const auto g = compute_gae(traj, 0.0, 0.95);
        for (std::size_t t = 0; t < traj.size(); ++t)
            CHECK(g.advantages[t] == traj[t].reward - traj[t].value);
    }
}

TEST_CASE("gae: lambda one telescopes to monte-carlo advantages") {
    std::vector<Transition> traj(6);
    std::mt19937_64 rng(4);
    for (std::size_t t = 0; t < traj.size(); ++t) {
        traj[t].reward = uniform_range(rng, -2, 2);
        traj[t].value = uniform_range(rng, -1, 1);
        traj[t].done = t + 1 == traj.size();
    }
    const double gamma = 0.9;
    const auto g = compute_gae(traj, gamma, 1.0);

    std::vector<double> mc(traj.size());
    double acc = 0.0;
    for (std::size_t ri = 0; ri < traj.size(); ++ri) {
        const std::size_t t = traj.size() - 1 - ri;
        acc = traj[t].reward + gamma * acc;
        mc[t] = acc;
    }
    for (std::size_t t = 0; t < traj.size(); ++t)
        CHECK(g.advantages[t] == doctest::Approx(mc[t] - traj[t].value).epsilon(1e-12));
}

TEST_CASE("gae: a mid-trajectory terminal cuts the recursion") {
    std::vector<Transition> traj(6);
    std::mt19937_64 rng(6);
    for (std::size_t t = 0; t < traj.size(); ++t) {
        traj[t].reward = uniform_range(rng, -2, 2);
        traj[t].value = uniform_range(rng, -1, 1);
        traj[t].done = t == 2 || t == 5;
    }
    const auto g = compute_gae(traj, 0.99, 0.95);
    CHECK(g.advantages[2] == traj[2].reward - traj[2].value);
    CHECK(g.advantages[5] == traj[5].reward - traj[5].value);
}

TEST_CASE("adam: first and second step match the textbook recursion") {
    AdamState adam;
    adam.init(3);
    std::vector<double> params{1.0, -2.0, 0.5};
    const std::vector<double> g1{0.3, -0.1, 0.0};
    const std::vector<double> g2{-0.2, 0.4, 1.0};
    const double lr = 0.01;

    std::vector<double> m(3, 0.0), v(3, 0.0), expect{1.0, -2.0, 0.5};
    const auto oracle_step = [&](const std::vector<double>& g, std::int64_t t) {
        const double bc1 = 1.0 - std::pow(0.9, static_cast<double>(t));
        const double bc2 = 1.0 - std::pow(0.999, static_cast<double>(t));
        for (std::size_t i = 0; i < 3; ++i) {
            m[i] = 0.9 * m[i] + 0.1 * g[i];
            v[i] = 0.999 * v[i] + 0.001 * g[i] * g[i];
            expect[i] -= lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + 1e-8);
        }
    };

    adam.step(params, g1, lr);
    oracle_step(g1, 1);
    CHECK(adam.t == 1);
    for (std::size_t i = 0; i < 3; ++i) CHECK(params[i] == doctest::Approx(expect[i]).epsilon(1e-15));

    adam.step(params, g2, lr);
    oracle_step(g2, 2);
    CHECK(adam.t == 2);
    for (std::size_t i = 0; i < 3; ++i) CHECK(params[i] == doctest::Approx(expect[i]).epsilon(1e-15));

    // bias-corrected first step is close to a signed step of size lr
    AdamState fresh;
    fresh.init(1);
    std::vector<double> q{0.0};
    fresh.step(q, std::vector<double>{0.25}, lr);
    CHECK(q[0] == doctest::Approx(-lr).epsilon(1e-6));

    std::vector<double> wrong{1.0};
    CHECK_THROWS_AS(adam.step(wrong, g1, lr), std::invalid_argument);
}

TEST_CASE("ppo_loss: exact values at rho == 1") {
    const PolicyNetwork net(small_shape()); // uniform policy, zero value
    const double lp = log_softmax(std::vector<double>(6, 0.0))[2];

    PpoBatch batch;
    batch.obs = {{0.1, 0.2, 0.3}, {-0.4, 0.0, 0.9}};
    batch.actions = {2, 2};
    batch.old_log_probs = {lp, lp};
    batch.advantages = {1.5, -0.5};
    batch.returns = {2.0, -1.0};

    PpoHyperparams hp;
    const auto stats = ppo_loss(net, batch, hp, nullptr);
    // rho = 1 exactly: surrogate = advantage, so policy loss is -mean(A)
    CHECK(stats.policy_loss == doctest::Approx(-(1.5 - 0.5) / 2.0).epsilon(1e-15));
    CHECK(stats.value_loss == doctest::Approx((4.0 + 1.0) / 2.0).epsilon(1e-15));
    CHECK(stats.entropy == doctest::Approx(std::log(6.0)).epsilon(1e-12));
    CHECK(stats.total == doctest::Approx(stats.policy_loss + hp.value_loss_coeff * stats.value_loss -
                                         hp.entropy_coeff * stats.entropy)
                             .epsilon(1e-15));

    PpoBatch empty;
    CHECK_THROWS_AS(ppo_loss(net, empty, hp, nullptr), std::invalid_argument);
    PpoBatch ragged = batch;
    ragged.actions.pop_back();
    CHECK_THROWS_AS(ppo_loss(net, ragged, hp, nullptr), std::invalid_argument);
}

TEST_CASE("ppo_loss: epsilon zero with fresh log-probs kills the policy gradient") {
    PolicyNetwork net = init_network(small_shape(), 31);
    std::mt19937_64 rng(8);

    PpoBatch batch;
    for (int k = 0; k < 5; ++k) {
        const std::array<double, 3> obs{uniform_range(rng, -1, 1), uniform_range(rng, -1, 1),
                                        uniform_range(rng, -1, 1)};
        const int action = static_cast<int>(uniform_below(rng, 6));
        const auto ls = log_softmax(net.forward(obs).logits);
        batch.obs.push_back(obs);
        batch.actions.push_back(action);
        batch.old_log_probs.push_back(ls[static_cast<std::size_t>(action)]); // rho == 1 exactly
        batch.advantages.push_back(uniform_range(rng, -2, 2));
        batch.returns.push_back(uniform_range(rng, -1, 1));
    }

    PpoHyperparams hp;
    hp.clip_epsilon = 0.0;
    hp.value_loss_coeff = 0.0;
    hp.entropy_coeff = 0.0;
    std::vector<double> grad;
    const auto stats = ppo_loss(net, batch, hp, &grad);
    CHECK(std::isfinite(stats.total));
    REQUIRE(grad.size() == net.params().size());
    for (double g : grad) CHECK(g == 0.0);
}

TEST_CASE("ppo_loss: analytic gradient matches central finite differences") {
    PolicyNetwork net = init_network(small_shape(), 13);
    std::mt19937_64 rng(14);

    // rho values held well clear of the clip boundaries 0.8 and 1.2 so the
    // h = 1e-5 probes never cross a branch
    const std::vector<double> shifts{0.0, 0.05, -0.05, 0.5, -0.5, 0.03, -0.4, 0.45};
    PpoBatch batch;
    for (std::size_t k = 0; k < shifts.size(); ++k) {
        const std::array<double, 3> obs{uniform_range(rng, -1, 1), uniform_range(rng, -1, 1),
                                        uniform_range(rng, -1, 1)};
        const int action = static_cast<int>(uniform_below(rng, 6));
        const auto ls = log_softmax(net.forward(obs).logits);
        batch.obs.push_back(obs);
        batch.actions.push_back(action);
        batch.old_log_probs.push_back(ls[static_cast<std::size_t>(action)] - shifts[k]);
        const double sign = uniform_unit(rng) < 0.5 ? -1.0 : 1.0;
        batch.advantages.push_back(sign * uniform_range(rng, 0.5, 2.0));
        batch.returns.push_back(uniform_range(rng, -1, 1));
    }

    PpoHyperparams hp;
    std::vector<double> grad;
    (void)ppo_loss(net, batch, hp, &grad);
    REQUIRE(grad.size() == net.params().size());

    const double h = 1e-5;
    auto& p = net.params();
    double worst = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double saved = p[i];
        p[i] = saved + h;
        const double up = ppo_loss(net, batch, hp, nullptr).total;
        p[i] = saved - h;
        const double dn = ppo_loss(net, batch, hp, nullptr).total;
        p[i] = saved;
        const double fd = (up - dn) / (2.0 * h);
        const double rel = std::abs(fd - grad[i]) /
                           std::max({1e-3, std::abs(fd), std::abs(grad[i])});
        worst = std::max(worst, rel);
    }
    CHECK(worst <= 1e-4);
}

TEST_CASE("ppo_update: advantage normalization skips degenerate batches") {
    PpoHyperparams hp;
    hp.gamma = 0.0;
    hp.gae_lambda = 0.0;
    hp.update_epochs = 1;
    hp.minibatch_size = 8;

    // identical rewards with a zero value head: variance is exactly zero, so
    // the raw advantage (= 2) survives and the rho = 1 policy loss is -2
    {
        PolicyNetwork net(small_shape());
        AdamState adam;
        std::mt19937_64 rng(1);
        const std::vector<double> rewards{2.0, 2.0};
        const auto stats = ppo_update(net, adam, synthetic_episode(rewards), hp, rng);
        CHECK(stats.policy_loss == doctest::Approx(-2.0).epsilon(1e-15));
    }
    // distinct rewards get normalized to zero mean, so the loss vanishes
    {
        PolicyNetwork net(small_shape());
        AdamState adam;
        std::mt19937_64 rng(1);
        const std::vector<double> rewards{1.0, 3.0};
        const auto stats = ppo_update(net, adam, synthetic_episode(rewards), hp, rng);
        CHECK(stats.policy_loss == doctest::Approx(0.0));
    }
}

TEST_CASE("ppo_update: rejects empty buffers and aborts on non-finite loss") {
    PolicyNetwork net(small_shape());
    AdamState adam;
    PpoHyperparams hp;
    std::mt19937_64 rng(1);
    CHECK_THROWS_AS(ppo_update(net, adam, {}, hp, rng), std::invalid_argument);

    net.params()[0] = std::numeric_limits<double>::quiet_NaN();
    const std::vector<double> rewards{1.0, 2.0, 3.0};
    const auto episode = synthetic_episode(rewards);
    CHECK_THROWS_WITH_AS(ppo_update(net, adam, episode, hp, rng),
                         doctest::Contains("non-finite loss in epoch 0, minibatch 0"),
                         std::runtime_error);
}

TEST_CASE("train: reproducible per seed, one update per episode") {
    EnvConfig cfg = tiny_env_config();
    const Environment env(cfg);
    const MlpShape shape = small_shape();
    PpoHyperparams hp;
    hp.episodes = 4;
    hp.seed = 9;

    std::vector<EpisodeMetrics> seen;
    const TrainResult a = train(env, shape, hp, [&](const EpisodeMetrics& m) { seen.push_back(m); });
    const TrainResult b = train(env, shape, hp);
    REQUIRE(a.metrics.size() == 4);
    REQUIRE(seen.size() == 4);
    CHECK(a.net.params() == b.net.params());
    for (std::size_t i = 0; i < 4; ++i) {
        CHECK(a.metrics[i].episode == static_cast<int>(i) + 1);
        CHECK(a.metrics[i].episode_return == b.metrics[i].episode_return);
        CHECK(a.metrics[i].capacity_sum_bps == b.metrics[i].capacity_sum_bps);
        CHECK(a.metrics[i].policy_loss == b.metrics[i].policy_loss);
        CHECK(a.metrics[i].value_loss == b.metrics[i].value_loss);
        CHECK(a.metrics[i].entropy == b.metrics[i].entropy);
        CHECK(a.metrics[i].episode_return == seen[i].episode_return);
        REQUIRE(a.metrics[i].mean_sinr_db.size() == 1);
        REQUIRE(a.metrics[i].mean_capacity_bps.size() == 1);
        CHECK(a.metrics[i].capacity_sum_bps == a.metrics[i].mean_capacity_bps[0]);
        CHECK(std::isfinite(a.metrics[i].policy_loss));
    }

    PpoHyperparams hp2 = hp;
    hp2.seed = 10;
    const TrainResult c = train(env, shape, hp2);
    CHECK(a.net.params() != c.net.params());
}

TEST_CASE("train: single-episode single-step run works end to end") {
    EnvConfig cfg = tiny_env_config();
    cfg.episode_length = 1;
    const Environment env(cfg);
    PpoHyperparams hp;
    hp.episodes = 1;
    const TrainResult r = train(env, small_shape(), hp);
    REQUIRE(r.metrics.size() == 1);
    CHECK(std::isfinite(r.metrics[0].episode_return));
    CHECK(r.metrics[0].capacity_sum_bps > 0.0);
}

TEST_CASE("train: validates hyperparameters") {
    const Environment env(tiny_env_config());
    PpoHyperparams hp;
    hp.episodes = 0;
    CHECK_THROWS_AS(train(env, small_shape(), hp), ConfigError);
    hp.episodes = 1;
    hp.update_epochs = 0;
    CHECK_THROWS_AS(train(env, small_shape(), hp), ConfigError);
    hp.update_epochs = 1;
    hp.minibatch_size = 0;
    CHECK_THROWS_AS(train(env, small_shape(), hp), ConfigError);
}

TEST_CASE("training improves the return on a one-building scene") {
    // a lone tower casts a shadow, so position choices move the reward by tens
    // of dB; the open-space landscape is too flat to learn from in 200 episodes
    GridSceneParams gp;
    gp.rows = 1;
    gp.cols = 1;
    gp.seed = 1;
    gp.flight_floor_m = 30.0;
    gp.flight_ceiling_m = 80.0;
    gp.start_altitude_m = 35.0;
    EnvConfig cfg;
    cfg.scene = generate_urban_grid(gp);
    cfg.step_size_m = 5.0;
    cfg.episode_length = 50;
    cfg.start_jitter_m = 40.0;
    const Environment env(cfg);

    int improved = 0;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        PpoHyperparams hp;
        hp.episodes = 200;
        hp.seed = seed;
        const TrainResult r = train(env, MlpShape{3, 2, 64, 6}, hp);
        double first = 0.0, last = 0.0;
        for (int i = 0; i < 10; ++i) {
            first += r.metrics[static_cast<std::size_t>(i)].episode_return;
            last += r.metrics[r.metrics.size() - 1 - static_cast<std::size_t>(i)].episode_return;
        }
        if (last > first) ++improved;
    }
    CHECK(improved >= 9);
}

TEST_CASE("greedy rollout: argmax actions, earliest best step") {
    Scene s = open_scene();
    s.receivers = {{50, 0, 1.5}};
    s.uav_start = {0, 0, 40};
    s.bounds = {{-50, -50, 10}, {50, 50, 80}};
    EnvConfig cfg;
    cfg.scene = s;
    cfg.step_size_m = 5.0;
    cfg.episode_length = 12;
    const Environment env(cfg);

    // zero net: all logits tie, argmax keeps index 0 = +X
    const PolicyNetwork net(small_shape());
    const RolloutResult rr = greedy_rollout(net, env);
    REQUIRE(rr.positions.size() == 13);
    REQUIRE(rr.rewards.size() == 13);
    for (int t = 0; t <= 12; ++t) {
        const double x = std::min(50.0, 5.0 * t);
        CHECK(rr.positions[static_cast<std::size_t>(t)] == Vec3{x, 0, 40});
        CHECK(rr.rewards[static_cast<std::size_t>(t)] ==
              env.evaluate_position(rr.positions[static_cast<std::size_t>(t)]).first);
    }
    // x = 50 is first reached at step 10; steps 11 and 12 repeat the position
    // and reward, and the earliest index must win the tie
    CHECK(rr.rewards[11] == rr.rewards[10]);
    CHECK(rr.best_step == 10);
    CHECK(rr.best_position == Vec3{50, 0, 40});
    CHECK(rr.best_reward == rr.rewards[10]);
}

TEST_CASE("probe counters: path candidates, trunk macs, transition scalars") {
    probe().reset();

    Scene s = open_scene();
    RadioConfig radio;
    (void)trace_paths(s, {0, 0, 40}, {10, 0, 40}, radio); // 1 LOS + 1 ground face
    CHECK(snapshot_probe().path_candidates == 2);

    probe().reset();
    const PolicyNetwork net(MlpShape{3, 3, 32, 6});
    (void)net.forward(std::vector<double>{0.1, 0.2, 0.3});
    CHECK(snapshot_probe().mlp_macs == 2 * 32 * 32); // layers 1 and 2 only

    probe().reset();
    EnvConfig cfg = tiny_env_config();
    cfg.episode_length = 3;
    const Environment env(cfg);
    PpoHyperparams hp;
    hp.episodes = 2;
    (void)train(env, small_shape(), hp);
    CHECK(snapshot_probe().transition_scalars == 2 * 3 * kTransitionDim);
}

TEST_CASE("checkpoint round trip is bit exact") {
    const auto path = temp_file("roundtrip.ckpt");
    PolicyNetwork net = init_network(MlpShape{3, 2, 8, 6}, 55);
    net.params()[0] = std::numeric_limits<double>::quiet_NaN();
    net.params()[1] = std::numeric_limits<double>::infinity();
    net.params()[2] = -0.0;
    save_checkpoint(net, path);
    const PolicyNetwork loaded = load_checkpoint(path);
    CHECK(loaded.shape() == net.shape());
    REQUIRE(loaded.params().size() == net.params().size());
    CHECK(std::memcmp(loaded.params().data(), net.params().data(),
                      net.params().size() * sizeof(double)) == 0);
}

TEST_CASE("checkpoint load errors name the offending line") {
    const auto path = temp_file("tamper.ckpt");
    const PolicyNetwork net = init_network(MlpShape{3, 1, 4, 6}, 2);
    save_checkpoint(net, path);
    const std::string good = slurp(path);

    SUBCASE("bad header") {
        spit(path, "ckpt v2\n" + good.substr(good.find('\n') + 1));
        CHECK_THROWS_WITH_AS(load_checkpoint(path), doctest::Contains(":1: bad header"),
                             std::runtime_error);
    }
    SUBCASE("shape mismatch in the parameter count") {
        std::string bad = good;
        const auto pos = bad.find("params ");
        bad.replace(pos, bad.find('\n', pos) - pos, "params 999");
        spit(path, bad);
        CHECK_THROWS_WITH_AS(load_checkpoint(path),
                             doctest::Contains("does not match shape"), std::runtime_error);
    }
    SUBCASE("short hex line") {
        std::string bad = good;
        const auto pos = bad.find('\n', bad.find("params ")) + 1;
        bad.erase(pos, 4);
        spit(path, bad);
        CHECK_THROWS_WITH_AS(load_checkpoint(path),
                             doctest::Contains("expected 16 hex chars"), std::runtime_error);
    }
    SUBCASE("invalid hex digit") {
        std::string bad = good;
        const auto pos = bad.find('\n', bad.find("params ")) + 1;
        bad[pos] = 'z';
        spit(path, bad);
        CHECK_THROWS_WITH_AS(load_checkpoint(path), doctest::Contains("bad hex digit"),
                             std::runtime_error);
    }
    SUBCASE("missing trailer") {
        std::string bad = good.substr(0, good.rfind("end\n"));
        spit(path, bad);
        CHECK_THROWS_WITH_AS(load_checkpoint(path), doctest::Contains("unexpected end of file"),
                             std::runtime_error);
    }
    SUBCASE("missing file") {
        CHECK_THROWS_WITH_AS(load_checkpoint(temp_file("no-such.ckpt")),
                             doctest::Contains("cannot open checkpoint"), std::runtime_error);
    }
}
