#include "qtrader/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

#include "qtrader/errors.hpp"

namespace qtrader {

namespace {

using nlohmann::json;

}  // namespace

RunConfig default_config() {
    return RunConfig{};
}

std::string config_to_json_text(const RunConfig& c) {
    json j;
    j["window"] = c.train.net.window;
    j["features"] = c.train.net.features;
    j["lstm_hidden"] = c.train.net.lstm_hidden;
    j["qubits"] = c.train.net.qubits;
    j["heads"] = c.train.net.heads;
    j["layers"] = c.train.net.layers;
    j["affine_head"] = c.train.net.affine_head;
    j["gamma"] = c.train.gamma;
    j["episodes"] = c.train.episodes;
    j["batch_size"] = c.train.batch_size;
    j["target_update"] = c.train.target_update;
    j["learning_rate"] = c.train.learning_rate;
    j["weight_decay"] = c.train.weight_decay;
    j["lion_beta1"] = c.train.lion_beta1;
    j["lion_beta2"] = c.train.lion_beta2;
    j["huber_delta"] = c.train.huber_delta;
    j["reward_clip"] = c.train.reward_clip;
    j["commission"] = c.train.commission;
    j["replay_capacity"] = c.train.replay_capacity;
    j["prepopulate_capacity"] = c.train.prepopulate_capacity;
    j["per_alpha"] = c.train.per_alpha;
    j["per_beta"] = c.train.per_beta0;
    j["per_epsilon"] = c.train.per_epsilon;
    j["ucb_c"] = c.train.ucb_c;
    j["k1"] = c.train.dual_thrust.k1;
    j["k2"] = c.train.dual_thrust.k2;
    j["dual_thrust_lookback"] = c.train.dual_thrust.lookback;
    j["seed"] = c.train.seed;
    j["threads"] = c.train.threads;
    j["periods_per_year"] = c.periods_per_year;
    return j.dump(2);
}

RunConfig config_from_json_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) {
        throw ConfigError("config must be a JSON object");
    }

    static const std::set<std::string> known = {
        "window",        "features",      "lstm_hidden",   "qubits",
        "heads",         "layers",        "affine_head",   "gamma",
        "episodes",      "batch_size",    "target_update", "learning_rate",
        "weight_decay",  "lion_beta1",    "lion_beta2",    "huber_delta",
        "reward_clip",   "commission",    "replay_capacity", "prepopulate_capacity",
        "per_alpha",     "per_beta",      "per_epsilon",   "ucb_c",
        "k1",            "k2",            "dual_thrust_lookback", "seed",
        "threads",       "periods_per_year"};
    for (const auto& [key, value] : j.items()) {
        if (!known.count(key)) {
            throw ConfigError("unknown config key '" + key + "'");
        }
    }

    RunConfig c;
    try {
        c.train.net.window = j.value("window", c.train.net.window);
        c.train.net.features = j.value("features", c.train.net.features);
        c.train.net.lstm_hidden = j.value("lstm_hidden", c.train.net.lstm_hidden);
        c.train.net.qubits = j.value("qubits", c.train.net.qubits);
        c.train.net.heads = j.value("heads", c.train.net.heads);
        c.train.net.layers = j.value("layers", c.train.net.layers);
        c.train.net.affine_head = j.value("affine_head", c.train.net.affine_head);
        c.train.gamma = j.value("gamma", c.train.gamma);
        c.train.episodes = j.value("episodes", c.train.episodes);
        c.train.batch_size = j.value("batch_size", c.train.batch_size);
        c.train.target_update = j.value("target_update", c.train.target_update);
        c.train.learning_rate = j.value("learning_rate", c.train.learning_rate);
        c.train.weight_decay = j.value("weight_decay", c.train.weight_decay);
        c.train.lion_beta1 = j.value("lion_beta1", c.train.lion_beta1);
        c.train.lion_beta2 = j.value("lion_beta2", c.train.lion_beta2);
        c.train.huber_delta = j.value("huber_delta", c.train.huber_delta);
        c.train.reward_clip = j.value("reward_clip", c.train.reward_clip);
        c.train.commission = j.value("commission", c.train.commission);
        c.train.replay_capacity = j.value("replay_capacity", c.train.replay_capacity);
        c.train.prepopulate_capacity =
            j.value("prepopulate_capacity", c.train.prepopulate_capacity);
        c.train.per_alpha = j.value("per_alpha", c.train.per_alpha);
        c.train.per_beta0 = j.value("per_beta", c.train.per_beta0);
        c.train.per_epsilon = j.value("per_epsilon", c.train.per_epsilon);
        c.train.ucb_c = j.value("ucb_c", c.train.ucb_c);
        c.train.dual_thrust.k1 = j.value("k1", c.train.dual_thrust.k1);
        c.train.dual_thrust.k2 = j.value("k2", c.train.dual_thrust.k2);
        c.train.dual_thrust.lookback =
            j.value("dual_thrust_lookback", c.train.dual_thrust.lookback);
        c.train.seed = j.value("seed", c.train.seed);
        c.train.threads = j.value("threads", c.train.threads);
        c.periods_per_year = j.value("periods_per_year", c.periods_per_year);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("bad config value: ") + e.what());
    }

    validate(c);
    return c;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open config file: " + path);
    }
    std::stringstream ss;
    ss << in.rdbuf();
    return config_from_json_text(ss.str());
}

void validate(const RunConfig& c) {
    auto fail = [](const std::string& msg) { throw ConfigError("invalid config: " + msg); };
    const TrainConfig& t = c.train;
    if (t.net.window < 1) fail("window must be >= 1");
    if (t.net.features != 4) fail("features must be 4 (OHLC log returns)");
    if (t.net.lstm_hidden < 1) fail("lstm_hidden must be >= 1");
    if (t.net.qubits < kActionCount || t.net.qubits > 12) {
        fail("qubits must be in [3, 12]");
    }
    if (t.net.heads < 1) fail("heads must be >= 1");
    if (t.net.layers < 1) fail("layers must be >= 1");
    if (!(t.gamma > 0.0 && t.gamma < 1.0)) fail("gamma must be in (0, 1)");
    if (t.episodes < 0) fail("episodes must be >= 0");
    if (t.batch_size < 1) fail("batch_size must be >= 1");
    if (t.target_update < 1) fail("target_update must be >= 1");
    if (t.learning_rate <= 0.0) fail("learning_rate must be positive");
    if (t.weight_decay < 0.0) fail("weight_decay must be >= 0");
    if (!(t.lion_beta1 >= 0.0 && t.lion_beta1 < 1.0)) fail("lion_beta1 must be in [0, 1)");
    if (!(t.lion_beta2 >= 0.0 && t.lion_beta2 < 1.0)) fail("lion_beta2 must be in [0, 1)");
    if (t.huber_delta <= 0.0) fail("huber_delta must be positive");
    if (t.reward_clip <= 0.0) fail("reward_clip must be positive");
    if (t.commission < 0.0 || t.commission >= 1.0) fail("commission must be in [0, 1)");
    if (t.replay_capacity < t.batch_size) fail("replay_capacity must be >= batch_size");
    if (t.prepopulate_capacity < 0) fail("prepopulate_capacity must be >= 0");
    if (t.per_alpha < 0.0) fail("per_alpha must be >= 0");
    if (!(t.per_beta0 >= 0.0 && t.per_beta0 <= 1.0)) fail("per_beta must be in [0, 1]");
    if (t.per_epsilon <= 0.0) fail("per_epsilon must be positive");
    if (!(t.ucb_c > 0.0 && t.ucb_c < 1.0)) fail("ucb_c must be in (0, 1)");
    if (t.dual_thrust.k1 <= 0.0 || t.dual_thrust.k2 <= 0.0) fail("k1 and k2 must be positive");
    if (t.dual_thrust.lookback < 1) fail("dual_thrust_lookback must be >= 1");
    if (t.threads < 1) fail("threads must be >= 1");
    if (c.periods_per_year <= 0.0) fail("periods_per_year must be positive");
}

}  // namespace qtrader
