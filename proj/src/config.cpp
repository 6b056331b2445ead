#include "uavdt/config.hpp"

#include <cctype>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "uavdt/errors.hpp"

namespace uavdt {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

struct Parser {
    const std::string& origin;
    int line_no = 0;

    [[noreturn]] void fail(const std::string& msg) const {
        throw ConfigError(origin + ":" + std::to_string(line_no) + ": " + msg);
    }

    double num(const std::string& key, const std::string& value) const {
        const char* s = value.c_str();
        char* end = nullptr;
        const double v = std::strtod(s, &end);
        if (end == s || *end != '\0' || !std::isfinite(v))
            fail(key + ": expected a finite number, got '" + value + "'");
        return v;
    }

    std::int64_t integer(const std::string& key, const std::string& value) const {
        const double v = num(key, value);
        const auto i = static_cast<std::int64_t>(v);
        if (static_cast<double>(i) != v)
            fail(key + ": expected an integer, got '" + value + "'");
        return i;
    }

    std::uint64_t uinteger(const std::string& key, const std::string& value) const {
        const std::int64_t i = integer(key, value);
        if (i < 0) fail(key + ": expected a non-negative integer, got '" + value + "'");
        return static_cast<std::uint64_t>(i);
    }

    int int32(const std::string& key, const std::string& value) const {
        return static_cast<int>(integer(key, value));
    }

    bool boolean(const std::string& key, const std::string& value) const {
        if (value == "true" || value == "1") return true;
        if (value == "false" || value == "0") return false;
        fail(key + ": expected true/false, got '" + value + "'");
    }
};

} // namespace

RunConfig parse_config_text(const std::string& text, const std::string& origin) {
    RunConfig cfg;
    Parser p{origin};
    std::string section;

    std::istringstream in(text);
    std::string raw;
    while (std::getline(in, raw)) {
        ++p.line_no;
        std::string line = trim(raw);
        if (line.empty() || line[0] == '#' || line[0] == ';') continue;

        if (line.front() == '[') {
            if (line.back() != ']') p.fail("unterminated section header");
            section = trim(line.substr(1, line.size() - 2));
            if (section != "scene" && section != "radio" && section != "env" &&
                section != "ppo" && section != "ledger" && section != "output")
                p.fail("unknown section [" + section + "]");
            continue;
        }

        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) p.fail("expected 'key = value'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) p.fail("empty key");
        if (section.empty()) p.fail("key '" + key + "' outside any section");

        if (section == "scene") {
            GridSceneParams& s = cfg.scene;
            if (key == "rows") s.rows = p.int32(key, value);
            else if (key == "cols") s.cols = p.int32(key, value);
            else if (key == "building_footprint_m") s.building_footprint_m = p.num(key, value);
            else if (key == "street_width_m") s.street_width_m = p.num(key, value);
            else if (key == "height_min_m") s.height_min_m = p.num(key, value);
            else if (key == "height_max_m") s.height_max_m = p.num(key, value);
            else if (key == "n_receivers") s.n_receivers = p.int32(key, value);
            else if (key == "seed") s.seed = p.uinteger(key, value);
            else if (key == "start_altitude_m") s.start_altitude_m = p.num(key, value);
            else if (key == "receiver_height_m") s.receiver_height_m = p.num(key, value);
            else if (key == "ground_reflectance") s.ground_reflectance = p.num(key, value);
            else if (key == "building_reflectance") s.building_reflectance = p.num(key, value);
            else if (key == "flight_floor_m") s.flight_floor_m = p.num(key, value);
            else if (key == "flight_ceiling_m") s.flight_ceiling_m = p.num(key, value);
            else if (key == "file") cfg.scene_file = value;
            else p.fail("unknown key '" + key + "' in [scene]");
        } else if (section == "radio") {
            RadioConfig& r = cfg.radio;
            if (key == "carrier_frequency_hz") r.carrier_frequency_hz = p.num(key, value);
            else if (key == "bandwidth_hz") r.bandwidth_hz = p.num(key, value);
            else if (key == "tx_power_w") r.tx_power_w = p.num(key, value);
            else if (key == "noise_figure_db") r.noise_figure_db = p.num(key, value);
            else if (key == "reference_temperature_k") r.reference_temperature_k = p.num(key, value);
            else if (key == "max_reflection_order") r.max_reflection_order = p.int32(key, value);
            else if (key == "sinr_floor_db") r.sinr_floor_db = p.num(key, value);
            else if (key == "sinr_ceiling_db") r.sinr_ceiling_db = p.num(key, value);
            else if (key == "coherent") r.coherent = p.boolean(key, value);
            else p.fail("unknown key '" + key + "' in [radio]");
        } else if (section == "env") {
            if (key == "step_size_m") cfg.step_size_m = p.num(key, value);
            else if (key == "episode_length") cfg.episode_length = p.int32(key, value);
            else if (key == "reward_scale") {
                if (value == "db_sum") cfg.reward_scale = RewardScale::DbSum;
                else if (value == "linear_sum") cfg.reward_scale = RewardScale::LinearSum;
                else p.fail("reward_scale: expected db_sum or linear_sum, got '" + value + "'");
            } else if (key == "start_jitter_m") cfg.start_jitter_m = p.num(key, value);
            else p.fail("unknown key '" + key + "' in [env]");
        } else if (section == "ppo") {
            PpoHyperparams& h = cfg.ppo;
            if (key == "hidden_layers") cfg.shape.hidden_layers = p.int32(key, value);
            else if (key == "width") cfg.shape.width = p.int32(key, value);
            else if (key == "gamma") h.gamma = p.num(key, value);
            else if (key == "gae_lambda") h.gae_lambda = p.num(key, value);
            else if (key == "clip_epsilon") h.clip_epsilon = p.num(key, value);
            else if (key == "learning_rate") h.learning_rate = p.num(key, value);
            else if (key == "update_epochs") h.update_epochs = p.int32(key, value);
            else if (key == "minibatch_size") h.minibatch_size = p.int32(key, value);
            else if (key == "value_loss_coeff") h.value_loss_coeff = p.num(key, value);
            else if (key == "entropy_coeff") h.entropy_coeff = p.num(key, value);
            else if (key == "episodes") h.episodes = p.int32(key, value);
            else p.fail("unknown key '" + key + "' in [ppo]");
        } else if (section == "ledger") {
            LedgerConfig& l = cfg.ledger;
            LedgerSimConfig& m = cfg.sim;
            if (key == "gas_price") l.gas_price = p.integer(key, value);
            else if (key == "gas_base") l.gas_base = p.integer(key, value);
            else if (key == "gas_per_eval") l.gas_per_eval = p.integer(key, value);
            else if (key == "slash_fraction") l.slash_fraction = p.num(key, value);
            else if (key == "finality_depth") l.finality_depth = p.int32(key, value);
            else if (key == "validators") l.validators = p.int32(key, value);
            else if (key == "quorum_num") l.quorum_num = p.int32(key, value);
            else if (key == "quorum_den") l.quorum_den = p.int32(key, value);
            else if (key == "users") m.users = p.int32(key, value);
            else if (key == "nodes") m.nodes = p.int32(key, value);
            else if (key == "fault_rate") m.fault_rate = p.num(key, value);
            else if (key == "tasks") m.tasks = p.int32(key, value);
            else if (key == "positions_per_task") m.positions_per_task = p.int32(key, value);
            else if (key == "initial_balance") m.initial_balance = p.integer(key, value);
            else if (key == "node_stake") m.node_stake = p.integer(key, value);
            else if (key == "node_capacity") m.node_capacity = p.int32(key, value);
            else if (key == "payment") m.payment = p.integer(key, value);
            else if (key == "gas_limit") m.gas_limit = p.integer(key, value);
            else p.fail("unknown key '" + key + "' in [ledger]");
        } else { // output
            if (key == "dir") cfg.output.dir = value;
            else if (key == "seed") cfg.output.seed = p.uinteger(key, value);
            else p.fail("unknown key '" + key + "' in [output]");
        }
    }

    apply_seed_override(cfg, cfg.output.seed);
    return cfg;
}

RunConfig load_config_file(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ConfigError("cannot open config file: " + path.string());
    std::ostringstream buf;
    buf << f.rdbuf();
    RunConfig cfg = parse_config_text(buf.str(), path.string());
    validate_config(cfg);
    return cfg;
}

void validate_config(const RunConfig& cfg) {
    const auto bad = [](const std::string& msg) { throw ConfigError("config: " + msg); };

    if (cfg.scene_file.empty()) {
        const GridSceneParams& s = cfg.scene;
        if (s.rows < 1 || s.cols < 1) bad("scene.rows and scene.cols must be >= 1");
        if (!(s.building_footprint_m > 0)) bad("scene.building_footprint_m must be > 0");
        if (!(s.street_width_m > 0)) bad("scene.street_width_m must be > 0");
        if (!(s.height_min_m > 0)) bad("scene.height_min_m must be > 0");
        if (!(s.height_max_m >= s.height_min_m)) bad("scene.height_max_m must be >= height_min_m");
        if (s.n_receivers < 1) bad("scene.n_receivers must be >= 1");
        if (!(s.receiver_height_m >= 0)) bad("scene.receiver_height_m must be >= 0");
        if (!(s.flight_floor_m >= 0)) bad("scene.flight_floor_m must be >= 0");
        if (!(s.flight_ceiling_m > s.flight_floor_m))
            bad("scene.flight_ceiling_m must be > flight_floor_m");
        if (!(s.start_altitude_m >= s.flight_floor_m && s.start_altitude_m <= s.flight_ceiling_m))
            bad("scene.start_altitude_m must lie in [flight_floor_m, flight_ceiling_m]");
        if (!(s.ground_reflectance >= 0 && s.ground_reflectance <= 1))
            bad("scene.ground_reflectance must be in [0,1]");
        if (!(s.building_reflectance >= 0 && s.building_reflectance <= 1))
            bad("scene.building_reflectance must be in [0,1]");
    }

    const RadioConfig& r = cfg.radio;
    if (!(r.carrier_frequency_hz > 0)) bad("radio.carrier_frequency_hz must be > 0");
    if (!(r.bandwidth_hz > 0)) bad("radio.bandwidth_hz must be > 0");
    if (!(r.tx_power_w > 0)) bad("radio.tx_power_w must be > 0");
    if (!(r.noise_figure_db >= 0)) bad("radio.noise_figure_db must be >= 0");
    if (!(r.reference_temperature_k > 0)) bad("radio.reference_temperature_k must be > 0");
    if (r.max_reflection_order != 1) bad("radio.max_reflection_order: only 1 is supported");
    if (!(r.sinr_floor_db < r.sinr_ceiling_db))
        bad("radio.sinr_floor_db must be < sinr_ceiling_db");

    if (!(cfg.step_size_m > 0)) bad("env.step_size_m must be > 0");
    if (cfg.episode_length < 1) bad("env.episode_length must be >= 1");
    if (!(cfg.start_jitter_m >= 0)) bad("env.start_jitter_m must be >= 0");

    const MlpShape& sh = cfg.shape;
    if (sh.hidden_layers < 1) bad("ppo.hidden_layers must be >= 1");
    if (sh.width < 1) bad("ppo.width must be >= 1");

    const PpoHyperparams& h = cfg.ppo;
    if (!(h.gamma > 0 && h.gamma <= 1)) bad("ppo.gamma must be in (0,1]");
    if (!(h.gae_lambda >= 0 && h.gae_lambda <= 1)) bad("ppo.gae_lambda must be in [0,1]");
    if (!(h.clip_epsilon > 0 && h.clip_epsilon < 1)) bad("ppo.clip_epsilon must be in (0,1)");
    if (!(h.learning_rate > 0)) bad("ppo.learning_rate must be > 0");
    if (h.update_epochs < 1) bad("ppo.update_epochs must be >= 1");
    if (h.minibatch_size < 1) bad("ppo.minibatch_size must be >= 1");
    if (!(h.value_loss_coeff >= 0)) bad("ppo.value_loss_coeff must be >= 0");
    if (!(h.entropy_coeff >= 0)) bad("ppo.entropy_coeff must be >= 0");
    if (h.episodes < 1) bad("ppo.episodes must be >= 1");

    const LedgerConfig& l = cfg.ledger;
    if (l.gas_price < 0) bad("ledger.gas_price must be >= 0");
    if (l.gas_base < 0) bad("ledger.gas_base must be >= 0");
    if (l.gas_per_eval < 0) bad("ledger.gas_per_eval must be >= 0");
    if (!(l.slash_fraction >= 0 && l.slash_fraction <= 1))
        bad("ledger.slash_fraction must be in [0,1]");
    if (l.finality_depth < 0) bad("ledger.finality_depth must be >= 0");
    if (l.validators < 1) bad("ledger.validators must be >= 1");
    if (l.quorum_num < 1 || l.quorum_den < l.quorum_num)
        bad("ledger.quorum must satisfy 1 <= quorum_num <= quorum_den");

    const LedgerSimConfig& m = cfg.sim;
    if (m.users < 1) bad("ledger.users must be >= 1");
    if (m.nodes < 1) bad("ledger.nodes must be >= 1");
    if (!(m.fault_rate >= 0 && m.fault_rate <= 1)) bad("ledger.fault_rate must be in [0,1]");
    if (m.tasks < 1) bad("ledger.tasks must be >= 1");
    if (m.positions_per_task < 1) bad("ledger.positions_per_task must be >= 1");
    if (m.initial_balance <= 0) bad("ledger.initial_balance must be > 0");
    if (m.node_stake < 0) bad("ledger.node_stake must be >= 0");
    if (m.node_capacity < 1) bad("ledger.node_capacity must be >= 1");
    if (m.payment <= 0) bad("ledger.payment must be > 0");
    if (m.gas_limit < 0) bad("ledger.gas_limit must be >= 0");

    if (cfg.output.dir.empty()) bad("output.dir must not be empty");
}

void apply_seed_override(RunConfig& cfg, std::uint64_t seed) {
    cfg.output.seed = seed;
    cfg.ppo.seed = seed;
    cfg.sim.seed = seed;
}

void apply_out_override(RunConfig& cfg, const std::filesystem::path& dir) {
    cfg.output.dir = dir;
}

Environment make_environment(const RunConfig& cfg) {
    EnvConfig env_cfg;
    env_cfg.scene = cfg.scene_file.empty() ? generate_urban_grid(cfg.scene)
                                           : read_scene_file(cfg.scene_file);
    env_cfg.radio = cfg.radio;
    env_cfg.step_size_m = cfg.step_size_m;
    env_cfg.episode_length = cfg.episode_length;
    env_cfg.reward_scale = cfg.reward_scale;
    env_cfg.start_jitter_m = cfg.start_jitter_m;
    return Environment(env_cfg);
}

} // namespace uavdt
