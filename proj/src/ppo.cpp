#include "uavdt/ppo.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "uavdt/errors.hpp"
#include "uavdt/probe.hpp"

namespace uavdt {

int MlpShape::parameter_count() const {
    const int trunk0 = input_dim * width + width;
    const int trunk_rest = (hidden_layers - 1) * (width * width + width);
    const int policy = width * action_dim + action_dim;
    const int value = width + 1;
    return trunk0 + trunk_rest + policy + value;
}

namespace {

// Offsets of each weight/bias block in the flat parameter vector.
struct Layout {
    std::vector<int> w_off, b_off; // one per trunk layer
    int policy_w = 0, policy_b = 0;
    int value_w = 0, value_b = 0;

    explicit Layout(const MlpShape& s) {
        int cur = 0;
        for (int l = 0; l < s.hidden_layers; ++l) {
            const int fan_in = l == 0 ? s.input_dim : s.width;
            w_off.push_back(cur);
            cur += s.width * fan_in;
            b_off.push_back(cur);
            cur += s.width;
        }
        policy_w = cur;
        cur += s.action_dim * s.width;
        policy_b = cur;
        cur += s.action_dim;
        value_w = cur;
        cur += s.width;
        value_b = cur;
    }
};

void check_shape(const MlpShape& s) {
    if (s.input_dim < 1 || s.hidden_layers < 1 || s.width < 1 || s.action_dim < 1)
        throw ConfigError("ppo: MlpShape fields must all be >= 1");
}

} // namespace

PolicyNetwork::PolicyNetwork(const MlpShape& shape) : shape_(shape) {
    check_shape(shape);
    params_.assign(static_cast<std::size_t>(shape.parameter_count()), 0.0);
}

PolicyNetwork::Trace PolicyNetwork::forward_trace(std::span<const double> obs) const {
    const MlpShape& s = shape_;
    const Layout lay(s);
    const double* p = params_.data();

    Trace trace;
    trace.hidden.resize(static_cast<std::size_t>(s.hidden_layers));
    std::vector<double> prev(obs.begin(), obs.end());
    for (int l = 0; l < s.hidden_layers; ++l) {
        const int fan_in = l == 0 ? s.input_dim : s.width;
        std::vector<double>& h = trace.hidden[static_cast<std::size_t>(l)];
        h.resize(static_cast<std::size_t>(s.width));
        const double* w = p + lay.w_off[static_cast<std::size_t>(l)];
        const double* b = p + lay.b_off[static_cast<std::size_t>(l)];
        for (int i = 0; i < s.width; ++i) {
            double z = b[i];
            const double* row = w + i * fan_in;
            for (int j = 0; j < fan_in; ++j) z += row[j] * prev[static_cast<std::size_t>(j)];
            h[static_cast<std::size_t>(i)] = std::tanh(z);
        }
        if (l > 0)
            probe().mlp_macs.fetch_add(
                static_cast<std::uint64_t>(s.width) * static_cast<std::uint64_t>(s.width),
                std::memory_order_relaxed);
        prev = h;
    }

    const std::vector<double>& top = trace.hidden.back();
    trace.logits.resize(static_cast<std::size_t>(s.action_dim));
    for (int a = 0; a < s.action_dim; ++a) {
        double z = p[lay.policy_b + a];
        const double* row = p + lay.policy_w + a * s.width;
        for (int j = 0; j < s.width; ++j) z += row[j] * top[static_cast<std::size_t>(j)];
        trace.logits[static_cast<std::size_t>(a)] = z;
    }
    double v = p[lay.value_b];
    for (int j = 0; j < s.width; ++j) v += p[lay.value_w + j] * top[static_cast<std::size_t>(j)];
    trace.value = v;
    return trace;
}

PolicyNetwork::Output PolicyNetwork::forward(std::span<const double> obs) const {
    Trace t = forward_trace(obs);
    return Output{std::move(t.logits), t.value};
}

void PolicyNetwork::backward(std::span<const double> obs, const Trace& trace,
                             std::span<const double> dlogits, double dvalue,
                             std::span<double> grad) const {
    const MlpShape& s = shape_;
    const Layout lay(s);
    const double* p = params_.data();
    const std::vector<double>& top = trace.hidden.back();

    std::vector<double> dh(static_cast<std::size_t>(s.width), 0.0);

    for (int j = 0; j < s.width; ++j) {
        grad[static_cast<std::size_t>(lay.value_w + j)] += dvalue * top[static_cast<std::size_t>(j)];
        dh[static_cast<std::size_t>(j)] += dvalue * p[lay.value_w + j];
    }
    grad[static_cast<std::size_t>(lay.value_b)] += dvalue;

    for (int a = 0; a < s.action_dim; ++a) {
        const double d = dlogits[static_cast<std::size_t>(a)];
        if (d == 0.0) continue;
        const int row = lay.policy_w + a * s.width;
        for (int j = 0; j < s.width; ++j) {
            grad[static_cast<std::size_t>(row + j)] += d * top[static_cast<std::size_t>(j)];
            dh[static_cast<std::size_t>(j)] += d * p[row + j];
        }
        grad[static_cast<std::size_t>(lay.policy_b + a)] += d;
    }

    for (int l = s.hidden_layers - 1; l >= 0; --l) {
        const int fan_in = l == 0 ? s.input_dim : s.width;
        const std::vector<double>& h = trace.hidden[static_cast<std::size_t>(l)];
        std::vector<double> dz(static_cast<std::size_t>(s.width));
        for (int i = 0; i < s.width; ++i) {
            const double hi = h[static_cast<std::size_t>(i)];
            dz[static_cast<std::size_t>(i)] = dh[static_cast<std::size_t>(i)] * (1.0 - hi * hi);
        }
        const int w0 = lay.w_off[static_cast<std::size_t>(l)];
        const int b0 = lay.b_off[static_cast<std::size_t>(l)];
        std::vector<double> dprev(static_cast<std::size_t>(fan_in), 0.0);
        for (int i = 0; i < s.width; ++i) {
            const double dzi = dz[static_cast<std::size_t>(i)];
            grad[static_cast<std::size_t>(b0 + i)] += dzi;
            const int row = w0 + i * fan_in;
            for (int j = 0; j < fan_in; ++j) {
                const double in_j = l == 0 ? obs[static_cast<std::size_t>(j)]
                                           : trace.hidden[static_cast<std::size_t>(l - 1)]
                                                         [static_cast<std::size_t>(j)];
                grad[static_cast<std::size_t>(row + j)] += dzi * in_j;
                dprev[static_cast<std::size_t>(j)] += dzi * p[row + j];
            }
        }
        dh = std::move(dprev);
    }
}

PolicyNetwork init_network(const MlpShape& shape, std::uint64_t seed) {
    check_shape(shape);
    PolicyNetwork net(shape);
    const Layout lay(shape);
    std::mt19937_64 rng(seed);
    std::vector<double>& p = net.params();

    const auto fill = [&](int offset, int rows, int fan_in) {
        const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
        for (int i = 0; i < rows * fan_in; ++i)
            p[static_cast<std::size_t>(offset + i)] = uniform_range(rng, -bound, bound);
    };
    for (int l = 0; l < shape.hidden_layers; ++l)
        fill(lay.w_off[static_cast<std::size_t>(l)], shape.width,
             l == 0 ? shape.input_dim : shape.width);
    fill(lay.policy_w, shape.action_dim, shape.width);
    fill(lay.value_w, 1, shape.width);
    return net;
}

std::vector<double> log_softmax(std::span<const double> logits) {
    const double m = *std::max_element(logits.begin(), logits.end());
    double sum = 0.0;
    for (double x : logits) sum += std::exp(x - m);
    const double lse = m + std::log(sum);
    std::vector<double> out(logits.size());
    for (std::size_t i = 0; i < logits.size(); ++i) out[i] = logits[i] - lse;
    return out;
}

std::pair<int, double> sample_action(std::span<const double> logits, std::mt19937_64& rng) {
    const std::vector<double> ls = log_softmax(logits);
    const double u = uniform_unit(rng);
    double cum = 0.0;
    for (std::size_t i = 0; i < ls.size(); ++i) {
        cum += std::exp(ls[i]);
        if (u < cum) return {static_cast<int>(i), ls[i]};
    }
    return {static_cast<int>(ls.size()) - 1, ls.back()};
}

GaeResult compute_gae(std::span<const Transition> trajectory, double gamma, double lambda) {
    if (trajectory.empty()) throw std::invalid_argument("compute_gae: empty trajectory");
    const std::size_t n = trajectory.size();
    GaeResult out;
    out.advantages.resize(n);
    out.returns.resize(n);
    double a_next = 0.0;
    for (std::size_t ri = 0; ri < n; ++ri) {
        const std::size_t t = n - 1 - ri;
        const Transition& tr = trajectory[t];
        const double nonterminal = tr.done ? 0.0 : 1.0;
        const double v_next = t + 1 < n ? trajectory[t + 1].value : 0.0;
        const double delta = tr.reward + gamma * v_next * nonterminal - tr.value;
        a_next = delta + gamma * lambda * nonterminal * a_next;
        out.advantages[t] = a_next;
        out.returns[t] = a_next + tr.value;
    }
    return out;
}

void AdamState::init(int n) {
    m.assign(static_cast<std::size_t>(n), 0.0);
    v.assign(static_cast<std::size_t>(n), 0.0);
    t = 0;
}

void AdamState::step(std::vector<double>& params, std::span<const double> grad, double lr) {
    if (m.size() != params.size() || grad.size() != params.size())
        throw std::invalid_argument("AdamState::step: size mismatch");
    ++t;
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(t));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(t));
    for (std::size_t i = 0; i < params.size(); ++i) {
        m[i] = beta1 * m[i] + (1.0 - beta1) * grad[i];
        v[i] = beta2 * v[i] + (1.0 - beta2) * grad[i] * grad[i];
        params[i] -= lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + epsilon);
    }
}

LossStats ppo_loss(const PolicyNetwork& net, const PpoBatch& batch, const PpoHyperparams& hp,
                   std::vector<double>* grad) {
    const std::size_t n = batch.size();
    if (n == 0) throw std::invalid_argument("ppo_loss: empty batch");
    if (batch.actions.size() != n || batch.old_log_probs.size() != n ||
        batch.advantages.size() != n || batch.returns.size() != n)
        throw std::invalid_argument("ppo_loss: ragged batch");

    if (grad) grad->assign(net.params().size(), 0.0);
    const double inv_n = 1.0 / static_cast<double>(n);
    const double eps = hp.clip_epsilon;

    LossStats stats;
    std::vector<double> dlogits(static_cast<std::size_t>(net.shape().action_dim));
    for (std::size_t k = 0; k < n; ++k) {
        const auto trace = net.forward_trace(batch.obs[k]);
        const std::vector<double> ls = log_softmax(trace.logits);
        const int a = batch.actions[k];
        const double lp_new = ls[static_cast<std::size_t>(a)];
        const double rho = std::exp(lp_new - batch.old_log_probs[k]);
        const double adv = batch.advantages[k];

        const double u = rho * adv;
        const double rho_c = std::clamp(rho, 1.0 - eps, 1.0 + eps);
        const double v = rho_c * adv;
        // min() tie resolves to the clipped branch, whose derivative vanishes
        // outside the strict clip interior (so eps = 0 kills the policy term).
        const bool use_clipped = !(u < v);
        const double surrogate = use_clipped ? v : u;

        double entropy = 0.0;
        for (double l : ls) entropy -= std::exp(l) * l;
        const double verr = trace.value - batch.returns[k];

        stats.policy_loss += -surrogate * inv_n;
        stats.value_loss += verr * verr * inv_n;
        stats.entropy += entropy * inv_n;

        if (grad) {
            double dlp = -adv * rho;
            if (use_clipped && !(rho > 1.0 - eps && rho < 1.0 + eps)) dlp = 0.0;
            for (std::size_t j = 0; j < ls.size(); ++j) {
                const double pj = std::exp(ls[j]);
                const double indicator = static_cast<int>(j) == a ? 1.0 : 0.0;
                const double d_policy = dlp * (indicator - pj);
                const double d_entropy = hp.entropy_coeff * pj * (ls[j] + entropy);
                dlogits[j] = (d_policy + d_entropy) * inv_n;
            }
            const double dvalue = 2.0 * hp.value_loss_coeff * verr * inv_n;
            net.backward(batch.obs[k], trace, dlogits, dvalue, *grad);
        }
    }
    stats.total =
        stats.policy_loss + hp.value_loss_coeff * stats.value_loss - hp.entropy_coeff * stats.entropy;
    return stats;
}

namespace {

void fisher_yates(std::vector<std::size_t>& idx, std::mt19937_64& rng) {
    for (std::size_t i = idx.size(); i > 1; --i) {
        const std::size_t j = uniform_below(rng, i);
        std::swap(idx[i - 1], idx[j]);
    }
}

} // namespace

LossStats ppo_update(PolicyNetwork& net, AdamState& adam, std::span<const Transition> episode,
                     const PpoHyperparams& hp, std::mt19937_64& rng) {
    if (episode.empty()) throw std::invalid_argument("ppo_update: empty transition buffer");
    const auto t0 = std::chrono::steady_clock::now();

    GaeResult gae = compute_gae(episode, hp.gamma, hp.gae_lambda);
    const std::size_t n = episode.size();

    double mean = 0.0;
    for (double a : gae.advantages) mean += a;
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (double a : gae.advantages) var += (a - mean) * (a - mean);
    var /= static_cast<double>(n);
    if (var >= 1e-8) {
        const double inv_std = 1.0 / std::sqrt(var);
        for (double& a : gae.advantages) a = (a - mean) * inv_std;
    }

    if (adam.m.size() != net.params().size()) adam.init(static_cast<int>(net.params().size()));

    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::vector<double> grad;
    LossStats acc;
    int minibatches = 0;

    for (int epoch = 0; epoch < hp.update_epochs; ++epoch) {
        fisher_yates(idx, rng);
        for (std::size_t start = 0; start < n; start += static_cast<std::size_t>(hp.minibatch_size)) {
            const std::size_t stop = std::min(n, start + static_cast<std::size_t>(hp.minibatch_size));
            PpoBatch batch;
            for (std::size_t k = start; k < stop; ++k) {
                const Transition& tr = episode[idx[k]];
                batch.obs.push_back(tr.obs);
                batch.actions.push_back(tr.action);
                batch.old_log_probs.push_back(tr.log_prob);
                batch.advantages.push_back(gae.advantages[idx[k]]);
                batch.returns.push_back(gae.returns[idx[k]]);
            }
            const LossStats stats = ppo_loss(net, batch, hp, &grad);
            if (!std::isfinite(stats.total))
                throw std::runtime_error("ppo_update: non-finite loss in epoch " +
                                         std::to_string(epoch) + ", minibatch " +
                                         std::to_string(minibatches));
            adam.step(net.params(), grad, hp.learning_rate);
            acc.policy_loss += stats.policy_loss;
            acc.value_loss += stats.value_loss;
            acc.entropy += stats.entropy;
            acc.total += stats.total;
            ++minibatches;
        }
    }

    acc.policy_loss /= minibatches;
    acc.value_loss /= minibatches;
    acc.entropy /= minibatches;
    acc.total /= minibatches;

    const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - t0;
    probe().add_seconds(probe().update_seconds, dt.count());
    return acc;
}

TrainResult train(const Environment& env, const MlpShape& shape, const PpoHyperparams& hp,
                  const std::function<void(const EpisodeMetrics&)>& on_episode) {
    if (hp.episodes < 1) throw ConfigError("ppo: episodes must be >= 1");
    if (hp.update_epochs < 1) throw ConfigError("ppo: update_epochs must be >= 1");
    if (hp.minibatch_size < 1) throw ConfigError("ppo: minibatch_size must be >= 1");

    TrainResult result;
    result.net = init_network(shape, hp.seed);
    AdamState adam;
    adam.init(static_cast<int>(result.net.params().size()));
    std::mt19937_64 rng(hp.seed ^ 0x9E3779B97F4A7C15ULL);

    const int R = env.scene().receiver_count();
    const int T = env.config().episode_length;
    std::vector<Transition> transitions;
    transitions.reserve(static_cast<std::size_t>(T));

    for (int ep = 1; ep <= hp.episodes; ++ep) {
        EnvState state = env.reset(rng);
        transitions.clear();
        std::vector<double> sinr_sum(static_cast<std::size_t>(R), 0.0);
        std::vector<double> cap_sum(static_cast<std::size_t>(R), 0.0);
        double ret = 0.0;

        for (int t = 0; t < T; ++t) {
            const std::array<double, 3> obs = env.observe(state.uav_pos);
            const auto tp0 = std::chrono::steady_clock::now();
            const PolicyNetwork::Output out = result.net.forward(obs);
            const auto [action, log_prob] = sample_action(out.logits, rng);
            const std::chrono::duration<double> dtp = std::chrono::steady_clock::now() - tp0;
            probe().add_seconds(probe().policy_seconds, dtp.count());

            const StepResult res = env.step(state, static_cast<Action>(action));
            Transition tr;
            tr.obs = obs;
            tr.action = action;
            tr.reward = res.reward;
            tr.obs_next = env.observe(res.next_state.uav_pos);
            tr.log_prob = log_prob;
            tr.value = out.value;
            tr.done = res.done;
            transitions.push_back(tr);
            probe().transition_scalars.fetch_add(kTransitionDim, std::memory_order_relaxed);

            for (int r = 0; r < R; ++r) {
                sinr_sum[static_cast<std::size_t>(r)] += res.reports[static_cast<std::size_t>(r)].sinr_db;
                cap_sum[static_cast<std::size_t>(r)] += res.reports[static_cast<std::size_t>(r)].capacity_bps;
            }
            ret += res.reward;
            state = res.next_state;
        }

        LossStats stats;
        try {
            stats = ppo_update(result.net, adam, transitions, hp, rng);
        } catch (const std::exception& e) {
            throw std::runtime_error("train: episode " + std::to_string(ep) + ": " + e.what());
        }

        EpisodeMetrics m;
        m.episode = ep;
        for (int r = 0; r < R; ++r) {
            m.mean_sinr_db.push_back(sinr_sum[static_cast<std::size_t>(r)] / T);
            m.mean_capacity_bps.push_back(cap_sum[static_cast<std::size_t>(r)] / T);
            m.capacity_sum_bps += m.mean_capacity_bps.back();
        }
        m.episode_return = ret;
        m.policy_loss = stats.policy_loss;
        m.value_loss = stats.value_loss;
        m.entropy = stats.entropy;
        if (on_episode) on_episode(m);
        result.metrics.push_back(std::move(m));
    }
    return result;
}

RolloutResult greedy_rollout(const PolicyNetwork& net, const Environment& env) {
    RolloutResult rr;
    EnvState state = env.reset();
    rr.positions.push_back(state.uav_pos);
    rr.rewards.push_back(env.evaluate_position(state.uav_pos).first);
    rr.best_position = state.uav_pos;
    rr.best_reward = rr.rewards.front();
    rr.best_step = 0;

    const int T = env.config().episode_length;
    for (int t = 0; t < T; ++t) {
        const auto out = net.forward(env.observe(state.uav_pos));
        int action = 0;
        for (std::size_t i = 1; i < out.logits.size(); ++i)
            if (out.logits[i] > out.logits[static_cast<std::size_t>(action)])
                action = static_cast<int>(i);
        const StepResult res = env.step(state, static_cast<Action>(action));
        rr.positions.push_back(res.next_state.uav_pos);
        rr.rewards.push_back(res.reward);
        if (res.reward > rr.best_reward) {
            rr.best_reward = res.reward;
            rr.best_position = res.next_state.uav_pos;
            rr.best_step = static_cast<int>(rr.positions.size()) - 1;
        }
        state = res.next_state;
    }
    return rr;
}

void save_checkpoint(const PolicyNetwork& net, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open checkpoint for writing: " + path.string());
    const MlpShape& s = net.shape();
    out << "ckpt v1\n";
    out << "shape in=" << s.input_dim << " hidden=" << s.hidden_layers << " width=" << s.width
        << " actions=" << s.action_dim << "\n";
    out << "params " << net.params().size() << "\n";
    char buf[32];
    for (double v : net.params()) {
        std::snprintf(buf, sizeof buf, "%016llx\n",
                      static_cast<unsigned long long>(std::bit_cast<std::uint64_t>(v)));
        out << buf;
    }
    out << "end\n";
    if (!out) throw std::runtime_error("failed writing checkpoint: " + path.string());
}

PolicyNetwork load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open checkpoint: " + path.string());
    std::string line;
    int line_no = 0;
    const auto fail = [&](const std::string& msg) -> std::runtime_error {
        return std::runtime_error("checkpoint " + path.string() + ":" + std::to_string(line_no) +
                                  ": " + msg);
    };
    const auto next_line = [&]() {
        if (!std::getline(in, line)) throw fail("unexpected end of file");
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
    };

    next_line();
    if (line != "ckpt v1") throw fail("bad header (expected 'ckpt v1')");
    next_line();
    MlpShape shape;
    if (std::sscanf(line.c_str(), "shape in=%d hidden=%d width=%d actions=%d", &shape.input_dim,
                    &shape.hidden_layers, &shape.width, &shape.action_dim) != 4)
        throw fail("bad shape line");
    next_line();
    std::size_t count = 0;
    if (std::sscanf(line.c_str(), "params %zu", &count) != 1) throw fail("bad params line");

    PolicyNetwork net(shape);
    if (count != net.params().size())
        throw fail("parameter count " + std::to_string(count) + " does not match shape (expected " +
                   std::to_string(net.params().size()) + ")");
    for (std::size_t i = 0; i < count; ++i) {
        next_line();
        if (line.size() != 16) throw fail("bad parameter encoding (expected 16 hex chars)");
        std::uint64_t bits = 0;
        for (char c : line) {
            const int nib = (c >= '0' && c <= '9')   ? c - '0'
                            : (c >= 'a' && c <= 'f') ? c - 'a' + 10
                                                     : -1;
            if (nib < 0) throw fail("bad hex digit in parameter");
            bits = (bits << 4) | static_cast<std::uint64_t>(nib);
        }
        net.params()[i] = std::bit_cast<double>(bits);
    }
    next_line();
    if (line != "end") throw fail("missing 'end' trailer");
    return net;
}

} // namespace uavdt
