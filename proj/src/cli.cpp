#include "uavdt/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>

#include <CLI11.hpp>

#include "uavdt/errors.hpp"
#include "uavdt/hash.hpp"
#include "uavdt/probe.hpp"
#include "uavdt/svg.hpp"

namespace uavdt {

namespace {

std::string fnum(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

constexpr const char* kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c",
                                    "#d62728", "#9467bd", "#8c564b"};
constexpr int kPaletteSize = 6;

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open for writing: " + path.string());
    return f;
}

} // namespace

// ---- sweep ----

SweepResult run_sweep(const Environment& env, int nx, int ny, int nz) {
    if (nx < 1 || ny < 1 || nz < 1)
        throw ConfigError("sweep: grid counts must be >= 1");
    const Aabb& b = env.scene().bounds;
    const auto axis_value = [](double lo, double hi, int i, int n) {
        if (n == 1) return (lo + hi) / 2;
        return lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
    };

    SweepResult result;
    result.nx = nx;
    result.ny = ny;
    result.nz = nz;
    result.points.reserve(static_cast<std::size_t>(nx) * ny * nz);
    double best = -std::numeric_limits<double>::infinity();
    for (int iz = 0; iz < nz; ++iz)
        for (int iy = 0; iy < ny; ++iy)
            for (int ix = 0; ix < nx; ++ix) {
                SweepPoint p;
                p.ix = ix;
                p.iy = iy;
                p.iz = iz;
                p.pos = Vec3{axis_value(b.min.x, b.max.x, ix, nx),
                             axis_value(b.min.y, b.max.y, iy, ny),
                             axis_value(b.min.z, b.max.z, iz, nz)};
                auto [reward, reports] = env.evaluate_position(p.pos);
                p.reward = reward;
                p.sinr_db.reserve(reports.size());
                for (const LinkReport& r : reports) p.sinr_db.push_back(r.sinr_db);
                if (p.reward > best) {
                    best = p.reward;
                    result.best_index = result.points.size();
                }
                result.points.push_back(std::move(p));
            }
    return result;
}

void write_sweep_csv(const std::filesystem::path& path, const SweepResult& sweep) {
    std::ofstream f = open_out(path);
    const std::size_t receivers = sweep.points.empty() ? 0 : sweep.points[0].sinr_db.size();
    f << "ix,iy,iz,x,y,z,reward";
    for (std::size_t r = 0; r < receivers; ++r) f << ",sinr_db_r" << (r + 1);
    f << "\n";
    for (const SweepPoint& p : sweep.points) {
        f << p.ix << "," << p.iy << "," << p.iz << "," << fnum(p.pos.x) << "," << fnum(p.pos.y)
          << "," << fnum(p.pos.z) << "," << fnum(p.reward);
        for (double s : p.sinr_db) f << "," << fnum(s);
        f << "\n";
    }
    if (!f) throw std::runtime_error("failed writing: " + path.string());
}

// ---- episodes.csv ----

std::string episodes_csv_header(int receivers) {
    std::string h = "episode,return";
    for (int r = 1; r <= receivers; ++r) h += ",sinr_db_r" + std::to_string(r);
    for (int r = 1; r <= receivers; ++r) h += ",capacity_r" + std::to_string(r);
    h += ",capacity_sum,policy_loss,value_loss,entropy";
    return h;
}

std::string episodes_csv_row(const EpisodeMetrics& m) {
    std::string row = std::to_string(m.episode) + "," + fnum(m.episode_return);
    for (double s : m.mean_sinr_db) row += "," + fnum(s);
    for (double c : m.mean_capacity_bps) row += "," + fnum(c);
    row += "," + fnum(m.capacity_sum_bps) + "," + fnum(m.policy_loss) + "," +
           fnum(m.value_loss) + "," + fnum(m.entropy);
    return row;
}

// ---- probe ----

double loglog_slope(std::span<const ProbeSample> samples) {
    if (samples.size() < 2)
        throw std::invalid_argument("loglog_slope: need at least 2 samples");
    std::vector<double> xs, ys;
    for (const ProbeSample& s : samples) {
        if (s.value <= 0 || s.counter == 0)
            throw std::invalid_argument("loglog_slope: samples must be positive");
        xs.push_back(std::log(s.value));
        ys.push_back(std::log(static_cast<double>(s.counter)));
    }
    const double n = static_cast<double>(xs.size());
    const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
    const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / n;
    double num = 0, den = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        num += (xs[i] - mx) * (ys[i] - my);
        den += (xs[i] - mx) * (xs[i] - mx);
    }
    if (den == 0) throw std::invalid_argument("loglog_slope: all sample values equal");
    return num / den;
}

ProbeReport run_probe(const RunConfig& cfg, const std::string& variable,
                      const std::vector<int>& values) {
    if (variable != "E" && variable != "T" && variable != "R" && variable != "W")
        throw ConfigError("probe: variable must be one of E, T, R, W");
    if (values.size() < 3) throw ConfigError("probe: need at least 3 values");
    for (int v : values)
        if (v < 1) throw ConfigError("probe: values must be >= 1");

    // A small fixed baseline so each sample isolates the swept variable.
    RunConfig base = cfg;
    base.scene_file.clear();
    base.ppo.episodes = 4;
    base.episode_length = 8;
    base.scene.n_receivers = 2;
    base.shape.width = 32;
    base.shape.hidden_layers = std::max(2, base.shape.hidden_layers);
    base.ppo.update_epochs = 2;
    base.start_jitter_m = 0.0;

    ProbeReport report;
    report.variable = variable;
    report.counter_name = variable == "W" ? "mlp_macs" : "path_candidates";

    for (int v : values) {
        RunConfig run = base;
        if (variable == "E") run.ppo.episodes = v;
        else if (variable == "T") run.episode_length = v;
        else if (variable == "R") run.scene.n_receivers = v;
        else run.shape.width = v;

        Environment env = make_environment(run);
        probe().reset();
        train(env, run.shape, run.ppo);
        const ProbeSnapshot snap = snapshot_probe();

        ProbeSample sample;
        sample.value = static_cast<double>(v);
        if (variable == "W") {
            sample.counter = snap.mlp_macs;
            sample.seconds = snap.policy_seconds + snap.update_seconds;
        } else {
            sample.counter = snap.path_candidates;
            sample.seconds = snap.trace_seconds;
        }
        report.samples.push_back(sample);
    }
    report.slope = loglog_slope(report.samples);
    return report;
}

// ---- ledger-sim ----

namespace {

struct SimAudit {
    bool no_unverified_pay = true;
};

// Independent walk over the sealed chain: every settlement must agree with
// the task's terminal state, appear at most once, and node accounts must end
// at exactly genesis + verified payments - slashes.
SimAudit audit_chain(const Ledger& ledger, Token node_genesis_total) {
    SimAudit audit;
    std::map<TaskId, int> settlements;
    Token paid = 0, slashed = 0;
    for (const Block& b : ledger.blocks()) {
        for (const Event& e : b.events) {
            if (e.kind != EventKind::TaskSettled) continue;
            settlements[e.task] += 1;
            const Task& t = ledger.tasks().at(e.task);
            if (e.verified) {
                if (t.status != TaskStatus::Settled) audit.no_unverified_pay = false;
                paid += t.payment;
            } else {
                if (t.status != TaskStatus::Refunded) audit.no_unverified_pay = false;
                slashed += e.slash;
            }
        }
    }
    for (const auto& [task, n] : settlements)
        if (n != 1) audit.no_unverified_pay = false;

    Token node_total = 0;
    for (const auto& [id, node] : ledger.nodes())
        node_total += ledger.accounts().at(node.account).balance;
    if (node_total != node_genesis_total + paid - slashed) audit.no_unverified_pay = false;
    return audit;
}

std::string kind_name(EventKind k) {
    switch (k) {
        case EventKind::MintAccount: return "MintAccount";
        case EventKind::RegisterNode: return "RegisterNode";
        case EventKind::TaskValidated: return "TaskValidated";
        case EventKind::TaskExcluded: return "TaskExcluded";
        case EventKind::NodeSelected: return "NodeSelected";
        case EventKind::TaskExecuted: return "TaskExecuted";
        case EventKind::TaskGasExhausted: return "TaskGasExhausted";
        case EventKind::TaskSettled: return "TaskSettled";
        case EventKind::TaskNotified: return "TaskNotified";
    }
    return "?";
}

void write_timeline(const std::filesystem::path& path, const Ledger& ledger) {
    std::ofstream f = open_out(path);
    for (const Block& b : ledger.blocks()) {
        f << "block " << b.height << " " << hex_encode(b.hash).substr(0, 12) << ":";
        for (const Event& e : b.events) {
            f << " " << kind_name(e.kind);
            if (e.kind == EventKind::MintAccount)
                f << "(" << e.account << "," << e.amount << ")";
            else if (e.kind == EventKind::RegisterNode)
                f << "(" << e.node << ",stake=" << e.stake << ")";
            else if (e.kind == EventKind::NodeSelected)
                f << "(task=" << e.task << "," << e.node << ")";
            else if (e.kind == EventKind::TaskSettled)
                f << "(task=" << e.task << "," << (e.verified ? "verified" : "slashed") << ")";
            else
                f << "(task=" << e.task << ")";
        }
        f << "\n";
    }
    if (!f) throw std::runtime_error("failed writing: " + path.string());
}

} // namespace

LedgerSimReport run_ledger_sim(const RunConfig& cfg, std::ostream& out) {
    const LedgerSimConfig& sim = cfg.sim;

    GenesisConfig genesis;
    genesis.config = cfg.ledger;
    for (int u = 0; u < sim.users; ++u)
        genesis.accounts.push_back({"u" + std::to_string(u), sim.initial_balance});
    const int dishonest = static_cast<int>(std::llround(sim.fault_rate * sim.nodes));
    for (int n = 0; n < sim.nodes; ++n) {
        const std::string id = "n" + std::to_string(n);
        genesis.accounts.push_back({id, sim.node_stake});
        DePinNode node;
        node.id = id;
        node.account = id;
        node.stake = sim.node_stake;
        node.capacity = sim.node_capacity;
        node.honest = n < sim.nodes - dishonest;
        genesis.nodes.push_back(node);
    }
    const Token node_genesis_total = static_cast<Token>(sim.nodes) * sim.node_stake;

    Ledger ledger(genesis);
    const Environment env = make_environment(cfg);
    const ComputeHook hook = [&env](const TaskSpec& spec) {
        std::vector<double> result;
        result.reserve(spec.positions.size());
        for (const Vec3& p : spec.positions) result.push_back(env.evaluate_position(p).first);
        return result;
    };

    std::mt19937_64 rng(sim.seed);
    const Aabb& bounds = env.scene().bounds;
    const auto random_spec = [&](int positions) {
        TaskSpec spec;
        spec.scene_ref = "grid";
        spec.radio_ref = "default";
        spec.receivers = env.config().scene.receiver_count();
        for (int i = 0; i < positions; ++i)
            spec.positions.push_back(Vec3{uniform_range(rng, bounds.min.x, bounds.max.x),
                                          uniform_range(rng, bounds.min.y, bounds.max.y),
                                          uniform_range(rng, bounds.min.z, bounds.max.z)});
        return spec;
    };

    std::vector<TaskId> submitted;
    std::set<TaskId> undelivered;
    const auto deliver_eligible = [&]() {
        bool progress = false;
        for (auto it = undelivered.begin(); it != undelivered.end();) {
            const Task& t = ledger.tasks().at(*it);
            const bool terminal =
                t.status == TaskStatus::Settled || t.status == TaskStatus::Refunded;
            if (terminal && ledger.finality_depth_of(*it) >= ledger.config().finality_depth) {
                ledger.notify(*it);
                it = undelivered.erase(it);
                progress = true;
            } else {
                ++it;
            }
        }
        return progress;
    };

    int remaining = sim.tasks;
    while (remaining > 0) {
        const int batch = std::min(sim.nodes, remaining);
        std::vector<TaskId> this_round;
        for (int b = 0; b < batch; ++b) {
            const std::string requester =
                "u" + std::to_string(static_cast<int>(submitted.size()) % sim.users);
            TaskSpec spec = random_spec(sim.positions_per_task);
            std::int64_t gas_limit = sim.gas_limit;
            if (uniform_unit(rng) < 0.1) gas_limit = std::max<std::int64_t>(0, ledger.required_gas(spec) - 1);
            const TaskId id = ledger.submit_request(requester, spec, sim.payment, gas_limit);
            submitted.push_back(id);
            this_round.push_back(id);
            undelivered.insert(id);
        }
        remaining -= batch;

        ledger.validate_round();
        for (TaskId id : this_round)
            if (!ledger.select_node(id))
                throw InvariantError("ledger-sim: no node with free capacity for task " +
                                     std::to_string(id));
        for (TaskId id : this_round) {
            const ExecutionRecord rec = ledger.execute_task(id, hook);
            if (!rec.gas_exhausted) ledger.verify_and_settle(id, hook);
        }
        deliver_eligible();
    }

    // Drain: seal buffered events until every task is delivered. If the chain
    // stalls short of finality, pad it with throwaway submissions.
    for (int guard = 0; !undelivered.empty(); ++guard) {
        if (guard > 10 * sim.tasks + 100)
            throw InvariantError("ledger-sim: failed to drain undelivered tasks");
        const bool delivered = deliver_eligible();
        if (ledger.pending_count() > 0) {
            ledger.validate_round();
        } else if (!delivered) {
            TaskSpec spec = random_spec(1);
            ledger.submit_request("u0", spec, 1, ledger.required_gas(spec));
            ledger.validate_round();
        }
    }

    LedgerSimReport report;
    report.tasks = sim.tasks;
    for (TaskId id : submitted) {
        const Task& t = ledger.tasks().at(id);
        if (t.status == TaskStatus::Settled) ++report.settled;
        else if (t.status == TaskStatus::Refunded) ++report.refunded;
    }

    try {
        ledger.check_conservation();
        report.conservation_ok = true;
    } catch (const InvariantError&) {
        report.conservation_ok = false;
    }
    report.no_unverified_pay_ok = audit_chain(ledger, node_genesis_total).no_unverified_pay;

    std::filesystem::create_directories(cfg.output.dir);
    report.log_path = cfg.output.dir / "ledger.log";
    report.timeline_path = cfg.output.dir / "ledger_timeline.txt";
    ledger.write_log(report.log_path);
    write_timeline(report.timeline_path, ledger);

    const Ledger replayed = Ledger::replay(report.log_path);
    report.replay_ok =
        replayed == ledger && replayed.state_digest() == ledger.state_digest();

    out << "tasks: " << report.tasks << "\n";
    out << "settled: " << report.settled << "\n";
    out << "refunded: " << report.refunded << "\n";
    out << "blocks: " << ledger.blocks().size() << "\n";
    out << "burned: " << ledger.burned() << "\n";
    out << "conservation: " << (report.conservation_ok ? "ok" : "VIOLATED") << "\n";
    out << "unverified-pay: " << (report.no_unverified_pay_ok ? "none" : "DETECTED") << "\n";
    out << "replay: " << (report.replay_ok ? "ok" : "MISMATCH") << "\n";
    out << "log: " << report.log_path.string() << "\n";
    out << "timeline: " << report.timeline_path.string() << "\n";
    return report;
}

// ---- commands ----

void cmd_scene_gen(const RunConfig& cfg, std::ostream& out) {
    const Scene scene = cfg.scene_file.empty() ? generate_urban_grid(cfg.scene)
                                               : read_scene_file(cfg.scene_file);
    std::filesystem::create_directories(cfg.output.dir);
    const std::filesystem::path path = cfg.output.dir / "scene.txt";
    write_scene_file(scene, path);
    out << "buildings: " << scene.buildings.size() << "\n";
    out << "receivers: " << scene.receiver_count() << "\n";
    out << "faces: " << candidate_faces(scene).size() << "\n";
    out << "complexity L: " << scene.complexity() << "\n";
    out << "bounds: " << fnum(scene.bounds.min.x) << " " << fnum(scene.bounds.min.y) << " "
        << fnum(scene.bounds.min.z) << " to " << fnum(scene.bounds.max.x) << " "
        << fnum(scene.bounds.max.y) << " " << fnum(scene.bounds.max.z) << "\n";
    out << "scene: " << path.string() << "\n";
}

namespace {

void print_greedy(const Environment& env, const RolloutResult& roll, std::ostream& out) {
    out << "greedy best reward: " << fnum(roll.best_reward) << "\n";
    out << "greedy best position: " << fnum(roll.best_position.x) << " "
        << fnum(roll.best_position.y) << " " << fnum(roll.best_position.z) << "\n";
    out << "greedy best step: " << roll.best_step << "\n";
    const auto [reward, reports] = env.evaluate_position(roll.best_position);
    for (std::size_t r = 0; r < reports.size(); ++r)
        out << "receiver " << (r + 1) << ": sinr_db=" << fnum(reports[r].sinr_db)
            << " capacity_bps=" << fnum(reports[r].capacity_bps) << "\n";
}

void write_training_charts(const RunConfig& cfg, const std::vector<EpisodeMetrics>& metrics,
                           int receivers) {
    std::vector<double> x;
    x.reserve(metrics.size());
    for (const EpisodeMetrics& m : metrics) x.push_back(static_cast<double>(m.episode));

    const auto color = [](int i) { return std::string(kPalette[i % kPaletteSize]); };
    const auto add_pair = [&](std::vector<Series>& dst, const std::string& label,
                              const std::string& c, std::vector<double> y) {
        Series raw;
        raw.label = label;
        raw.color = c;
        raw.opacity = 0.25;
        raw.stroke_width = 1.0;
        raw.y = y;
        dst.push_back(raw);
        Series ma;
        ma.label = label + " ma10";
        ma.color = c;
        ma.stroke_width = 2.5;
        ma.y = moving_average(y, 10);
        dst.push_back(std::move(ma));
    };

    std::vector<Series> sinr_series;
    std::vector<Series> cap_series;
    for (int r = 0; r < receivers; ++r) {
        std::vector<double> s, c;
        for (const EpisodeMetrics& m : metrics) {
            s.push_back(m.mean_sinr_db[static_cast<std::size_t>(r)]);
            c.push_back(m.mean_capacity_bps[static_cast<std::size_t>(r)]);
        }
        add_pair(sinr_series, "r" + std::to_string(r + 1), color(r), std::move(s));
        add_pair(cap_series, "r" + std::to_string(r + 1), color(r), std::move(c));
    }
    std::vector<double> cap_sum;
    for (const EpisodeMetrics& m : metrics) cap_sum.push_back(m.capacity_sum_bps);
    add_pair(cap_series, "sum", "#000000", std::move(cap_sum));

    ChartSpec sinr_spec;
    sinr_spec.title = "Mean SINR per episode";
    sinr_spec.x_label = "episode";
    sinr_spec.y_label = "SINR (dB)";
    write_line_chart(cfg.output.dir / "sinr.svg", sinr_spec, x, sinr_series);

    ChartSpec cap_spec;
    cap_spec.title = "Mean capacity per episode";
    cap_spec.x_label = "episode";
    cap_spec.y_label = "capacity (bit/s)";
    write_line_chart(cfg.output.dir / "capacity.svg", cap_spec, x, cap_series);
}

} // namespace

void cmd_train(const RunConfig& cfg, std::ostream& out) {
    Environment env = make_environment(cfg);
    const int receivers = env.config().scene.receiver_count();
    std::filesystem::create_directories(cfg.output.dir);

    std::ofstream csv = open_out(cfg.output.dir / "episodes.csv");
    csv << episodes_csv_header(receivers) << "\n";
    const TrainResult result = train(env, cfg.shape, cfg.ppo, [&](const EpisodeMetrics& m) {
        csv << episodes_csv_row(m) << "\n";
        csv.flush();
    });
    if (!csv) throw std::runtime_error("failed writing episodes.csv");

    const std::filesystem::path ckpt = cfg.output.dir / "policy.ckpt";
    save_checkpoint(result.net, ckpt);
    write_training_charts(cfg, result.metrics, receivers);

    out << "episodes: " << result.metrics.size() << "\n";
    out << "final return: " << fnum(result.metrics.back().episode_return) << "\n";
    out << "final capacity_sum: " << fnum(result.metrics.back().capacity_sum_bps) << "\n";
    print_greedy(env, greedy_rollout(result.net, env), out);
    out << "checkpoint: " << ckpt.string() << "\n";
    out << "episodes csv: " << (cfg.output.dir / "episodes.csv").string() << "\n";
    out << "charts: " << (cfg.output.dir / "sinr.svg").string() << " "
        << (cfg.output.dir / "capacity.svg").string() << "\n";
}

void cmd_eval(const RunConfig& cfg, const std::filesystem::path& checkpoint, std::ostream& out) {
    const PolicyNetwork net = load_checkpoint(checkpoint);
    if (net.shape() != cfg.shape) {
        const MlpShape& a = net.shape();
        const MlpShape& b = cfg.shape;
        std::string msg = "checkpoint shape does not match config:";
        if (a.input_dim != b.input_dim)
            msg += " input_dim " + std::to_string(a.input_dim) + " vs " + std::to_string(b.input_dim) + ";";
        if (a.hidden_layers != b.hidden_layers)
            msg += " hidden_layers " + std::to_string(a.hidden_layers) + " vs " +
                   std::to_string(b.hidden_layers) + ";";
        if (a.width != b.width)
            msg += " width " + std::to_string(a.width) + " vs " + std::to_string(b.width) + ";";
        if (a.action_dim != b.action_dim)
            msg += " action_dim " + std::to_string(a.action_dim) + " vs " +
                   std::to_string(b.action_dim) + ";";
        throw ConfigError(msg);
    }
    Environment env = make_environment(cfg);
    print_greedy(env, greedy_rollout(net, env), out);
}

void cmd_sweep(const RunConfig& cfg, int nx, int ny, int nz, std::ostream& out) {
    Environment env = make_environment(cfg);
    const SweepResult sweep = run_sweep(env, nx, ny, nz);
    std::filesystem::create_directories(cfg.output.dir);
    const std::filesystem::path path = cfg.output.dir / "sweep.csv";
    write_sweep_csv(path, sweep);
    const SweepPoint& best = sweep.points[sweep.best_index];
    out << "grid: " << nx << "x" << ny << "x" << nz << "\n";
    out << "best reward: " << fnum(best.reward) << "\n";
    out << "best position: " << fnum(best.pos.x) << " " << fnum(best.pos.y) << " "
        << fnum(best.pos.z) << "\n";
    out << "sweep csv: " << path.string() << "\n";
}

void cmd_ledger_sim(const RunConfig& cfg, std::ostream& out) { run_ledger_sim(cfg, out); }

void cmd_probe(const RunConfig& cfg, const std::string& variable, std::vector<int> values,
               std::ostream& out) {
    if (values.empty()) {
        if (variable == "E") values = {2, 4, 8};
        else if (variable == "T") values = {8, 16, 32};
        else if (variable == "R") values = {2, 4, 8};
        else values = {32, 64, 128};
    }
    const ProbeReport report = run_probe(cfg, variable, values);

    std::filesystem::create_directories(cfg.output.dir);
    const std::filesystem::path path = cfg.output.dir / ("probe_" + report.variable + ".csv");
    std::ofstream f = open_out(path);
    f << "variable,value,counter_name,counter,seconds\n";
    for (const ProbeSample& s : report.samples)
        f << report.variable << "," << fnum(s.value) << "," << report.counter_name << ","
          << s.counter << "," << fnum(s.seconds) << "\n";
    if (!f) throw std::runtime_error("failed writing: " + path.string());

    out << "probe variable: " << report.variable << "\n";
    out << "counter: " << report.counter_name << "\n";
    for (const ProbeSample& s : report.samples)
        out << "  " << report.variable << "=" << fnum(s.value) << " counter=" << s.counter
            << " seconds=" << fnum(s.seconds) << "\n";
    char slope[32];
    std::snprintf(slope, sizeof slope, "%.4f", report.slope);
    out << "slope: " << slope << "\n";
    out << "probe csv: " << path.string() << "\n";
}

// ---- entry point ----

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"desk-scale digital twin: UAV relay placement over a ray-traced "
                 "urban radio scene, PPO training, and a DePIN settlement ledger"};
    app.require_subcommand(1);

    std::string config_path;
    std::uint64_t seed = 0;
    std::string out_dir;
    app.add_option("--config", config_path, "INI config file");
    CLI::Option* seed_opt = app.add_option("--seed", seed, "master seed override");
    CLI::Option* out_opt = app.add_option("--out", out_dir, "output directory override");

    CLI::App* scene_gen = app.add_subcommand("scene-gen", "generate the urban scene and save it");
    CLI::App* train_cmd = app.add_subcommand("train", "train the PPO policy");
    CLI::App* eval_cmd = app.add_subcommand("eval", "greedy rollout from a checkpoint");
    std::string checkpoint;
    eval_cmd->add_option("--checkpoint", checkpoint, "policy checkpoint")->required();
    CLI::App* sweep_cmd = app.add_subcommand("sweep", "brute-force reward grid over the bounds");
    int nx = 11, ny = 11, nz = 5;
    sweep_cmd->add_option("--nx", nx, "grid points along x");
    sweep_cmd->add_option("--ny", ny, "grid points along y");
    sweep_cmd->add_option("--nz", nz, "grid points along z");
    CLI::App* ledger_cmd = app.add_subcommand("ledger-sim", "run the task settlement workload");
    CLI::App* probe_cmd = app.add_subcommand("probe", "complexity probe: counters vs one variable");
    std::string var;
    std::vector<int> values;
    probe_cmd->add_option("--var", var, "swept variable: E, T, R, or W")->required();
    probe_cmd->add_option("--values", values, "swept values (comma separated)")->delimiter(',');

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 2;
    }

    try {
        RunConfig cfg;
        if (!config_path.empty()) cfg = load_config_file(config_path);
        if (seed_opt->count() > 0) apply_seed_override(cfg, seed);
        if (out_opt->count() > 0) apply_out_override(cfg, out_dir);
        validate_config(cfg);

        if (scene_gen->parsed()) cmd_scene_gen(cfg, out);
        else if (train_cmd->parsed()) cmd_train(cfg, out);
        else if (eval_cmd->parsed()) cmd_eval(cfg, checkpoint, out);
        else if (sweep_cmd->parsed()) cmd_sweep(cfg, nx, ny, nz, out);
        else if (ledger_cmd->parsed()) cmd_ledger_sim(cfg, out);
        else if (probe_cmd->parsed()) cmd_probe(cfg, var, values, out);
        return 0;
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << "\n";
        return 2;
    } catch (const InvariantError& e) {
        err << "invariant violation: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 3;
    }
}

} // namespace uavdt
