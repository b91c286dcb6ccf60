#include "qtrader/network.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "qtrader/errors.hpp"

#include "json.hpp"

#include "qtrader/quantum_tape.hpp"
#include "qtrader/rng.hpp"

namespace qtrader {

namespace {

using nlohmann::json;

void fill_uniform(Tensor& t, double lo, double hi, Rng& rng) {
    for (double& x : t.v) x = rng.uniform(lo, hi);
}

}  // namespace

std::vector<ParamRef> param_refs(NetworkParams& p) {
    std::vector<ParamRef> refs;
    refs.push_back({"lstm.w_xi", &p.lstm.w_xi});
    refs.push_back({"lstm.w_hi", &p.lstm.w_hi});
    refs.push_back({"lstm.b_i", &p.lstm.b_i});
    refs.push_back({"lstm.w_xf", &p.lstm.w_xf});
    refs.push_back({"lstm.w_hf", &p.lstm.w_hf});
    refs.push_back({"lstm.b_f", &p.lstm.b_f});
    refs.push_back({"lstm.w_xg", &p.lstm.w_xg});
    refs.push_back({"lstm.w_hg", &p.lstm.w_hg});
    refs.push_back({"lstm.b_g", &p.lstm.b_g});
    refs.push_back({"lstm.w_xo", &p.lstm.w_xo});
    refs.push_back({"lstm.w_ho", &p.lstm.w_ho});
    refs.push_back({"lstm.b_o", &p.lstm.b_o});
    for (size_t i = 0; i < p.prenet.layers.size(); ++i) {
        refs.push_back({"prenet." + std::to_string(i) + ".w", &p.prenet.layers[i].w});
        refs.push_back({"prenet." + std::to_string(i) + ".b", &p.prenet.layers[i].b});
    }
    for (size_t h = 0; h < p.heads.size(); ++h) {
        const std::string base = "head." + std::to_string(h) + ".";
        refs.push_back({base + "theta_k", &p.heads[h].theta_k});
        refs.push_back({base + "theta_q", &p.heads[h].theta_q});
        refs.push_back({base + "theta_v", &p.heads[h].theta_v});
    }
    refs.push_back({"proj.w", &p.proj_w});
    refs.push_back({"proj.b", &p.proj_b});
    refs.push_back({"postnet.theta", &p.postnet_theta});
    if (p.cfg.affine_head) {
        refs.push_back({"out.scale", &p.out_scale});
        refs.push_back({"out.bias", &p.out_bias});
    }
    return refs;
}

std::vector<ParamRef> param_refs(const NetworkParams& p) {
    return param_refs(const_cast<NetworkParams&>(p));
}

void NetworkGrads::add_scaled(const NetworkGrads& other, double factor) {
    if (g.size() != other.g.size()) {
        throw std::invalid_argument("gradient layout mismatch");
    }
    for (size_t i = 0; i < g.size(); ++i) {
        for (int j = 0; j < g[i].numel(); ++j) g[i][j] += factor * other.g[i][j];
    }
}

NetworkGrads zero_grads(const NetworkParams& params) {
    NetworkGrads grads;
    for (const ParamRef& ref : param_refs(params)) {
        grads.g.emplace_back(ref.tensor->rows, ref.tensor->cols);
    }
    return grads;
}

CircuitSpec circuit_for(const NetConfig& cfg) {
    return CircuitSpec::layered(cfg.qubits, cfg.layers);
}

NetworkParams init_params(const NetConfig& cfg, uint64_t seed) {
    NetworkParams p;
    p.cfg = cfg;
    p.lstm = LstmParams::zeros(cfg.features, cfg.lstm_hidden);
    p.prenet = PreNetParams::zeros(cfg.prenet_dims());
    const CircuitSpec spec = circuit_for(cfg);
    p.heads.assign(cfg.heads, AttentionHeadParams::zeros(spec));
    p.proj_w = Tensor(cfg.qubits, cfg.heads * cfg.qubits);
    p.proj_b = Tensor(cfg.qubits, 1);
    p.postnet_theta = Tensor(spec.param_count, 1);
    if (cfg.affine_head) {
        p.out_scale = Tensor(kActionCount, 1);
        p.out_bias = Tensor(kActionCount, 1);
    }

    Rng rng = Rng::stream(seed, 1);
    const double lstm_bound = 1.0 / std::sqrt(static_cast<double>(cfg.lstm_hidden));
    for (ParamRef& ref : param_refs(p)) {
        if (ref.name.find("theta") != std::string::npos) {
            fill_uniform(*ref.tensor, -M_PI, M_PI, rng);
        } else if (ref.name.rfind("lstm.", 0) == 0) {
            fill_uniform(*ref.tensor, -lstm_bound, lstm_bound, rng);
        } else if (ref.name.rfind("prenet.", 0) == 0) {
            const size_t layer = ref.name[7] - '0';
            const double bound = 1.0 / std::sqrt(static_cast<double>(cfg.prenet_dims()[layer]));
            fill_uniform(*ref.tensor, -bound, bound, rng);
        } else if (ref.name.rfind("proj.", 0) == 0) {
            const double bound = 1.0 / std::sqrt(static_cast<double>(cfg.heads * cfg.qubits));
            fill_uniform(*ref.tensor, -bound, bound, rng);
        } else if (ref.name == "out.scale") {
            for (double& x : ref.tensor->v) x = 1.0;
        } else if (ref.name == "out.bias") {
            ref.tensor->zero();
        }
    }
    return p;
}

NetworkParams clone_params(const NetworkParams& params) {
    return params;  // deep copy by value semantics
}

ForwardCache forward(const NetworkParams& params, const FeatureWindow& window,
                     const CircuitSpec& spec) {
    const NetConfig& cfg = params.cfg;
    if (window.rows != cfg.window || window.cols != cfg.features) {
        throw std::invalid_argument("forward: window is " + std::to_string(window.rows) + "x" +
                                    std::to_string(window.cols) + ", network expects " +
                                    std::to_string(cfg.window) + "x" +
                                    std::to_string(cfg.features));
    }

    ForwardCache cache;
    Tape& tape = cache.tape;

    std::vector<VarId> leaves;
    for (const ParamRef& ref : param_refs(params)) {
        leaves.push_back(tape.leaf(*ref.tensor));
    }
    cache.leaf_ids = leaves;

    size_t at = 0;
    LstmLeafIds lstm;
    lstm.w_xi = leaves[at++];
    lstm.w_hi = leaves[at++];
    lstm.b_i = leaves[at++];
    lstm.w_xf = leaves[at++];
    lstm.w_hf = leaves[at++];
    lstm.b_f = leaves[at++];
    lstm.w_xg = leaves[at++];
    lstm.w_hg = leaves[at++];
    lstm.b_g = leaves[at++];
    lstm.w_xo = leaves[at++];
    lstm.w_ho = leaves[at++];
    lstm.b_o = leaves[at++];
    std::vector<std::pair<VarId, VarId>> prenet_ids;
    for (size_t i = 0; i < params.prenet.layers.size(); ++i) {
        const VarId w = leaves[at++];
        const VarId b = leaves[at++];
        prenet_ids.emplace_back(w, b);
    }
    struct HeadIds {
        VarId theta_k, theta_q, theta_v;
    };
    std::vector<HeadIds> head_ids;
    for (size_t h = 0; h < params.heads.size(); ++h) {
        HeadIds ids;
        ids.theta_k = leaves[at++];
        ids.theta_q = leaves[at++];
        ids.theta_v = leaves[at++];
        head_ids.push_back(ids);
    }
    const VarId proj_w = leaves[at++];
    const VarId proj_b = leaves[at++];
    const VarId postnet_theta = leaves[at++];
    VarId out_scale = -1, out_bias = -1;
    if (cfg.affine_head) {
        out_scale = leaves[at++];
        out_bias = leaves[at++];
    }

    // LSTM over the window rows, oldest first (row 0 is the most recent).
    VarId h = tape.leaf(Tensor(cfg.lstm_hidden, 1));
    VarId c = tape.leaf(Tensor(cfg.lstm_hidden, 1));
    std::vector<VarId> attention_inputs;  // pre-net outputs, chronological order
    for (int r = cfg.window - 1; r >= 0; --r) {
        Tensor x(cfg.features, 1);
        for (int f = 0; f < cfg.features; ++f) x[f] = window.at(r, f);
        const VarId xv = tape.leaf(std::move(x));
        std::tie(h, c) = lstm_cell(tape, xv, h, c, lstm);
        attention_inputs.push_back(pre_net(tape, h, prenet_ids));
    }
    const int seq = static_cast<int>(attention_inputs.size());

    // Quantum multihead self-attention; the most recent attended row feeds on.
    std::vector<VarId> head_lasts;
    const double inv_scale = 1.0 / std::sqrt(static_cast<double>(cfg.qubits));
    for (const HeadIds& ids : head_ids) {
        std::vector<VarId> k_scalars, q_scalars, v_rows;
        for (VarId u : attention_inputs) {
            k_scalars.push_back(tape.slice(quantum_block(tape, spec, ids.theta_k, u), 0, 1));
            q_scalars.push_back(tape.slice(quantum_block(tape, spec, ids.theta_q, u), 0, 1));
            v_rows.push_back(quantum_block(tape, spec, ids.theta_v, u));
        }
        const VarId k_vec = tape.stack_scalars(k_scalars);
        const VarId q_vec = tape.stack_scalars(q_scalars);
        const VarId v_mat = tape.stack_rows(v_rows);
        const VarId scores = tape.scale(tape.neg_sq_diff(q_vec, k_vec), inv_scale);
        const VarId weights = tape.softmax_rows(scores);
        const VarId attended = tape.matmul(weights, v_mat);
        head_lasts.push_back(tape.pick_row(attended, seq - 1));
    }

    const VarId merged = head_lasts.size() == 1 ? head_lasts[0] : tape.concat(head_lasts);
    const VarId projected = tape.add(tape.matvec(proj_w, merged), proj_b);
    const VarId expectations = quantum_block(tape, spec, postnet_theta, projected);
    VarId q = tape.slice(expectations, 0, kActionCount);
    if (cfg.affine_head) {
        q = tape.add(tape.mul(out_scale, q), out_bias);
    }

    cache.q_var = q;
    const Tensor& qv = tape.value(q);
    for (int i = 0; i < kActionCount; ++i) cache.q[i] = qv[i];
    return cache;
}

QValues forward_values(const NetworkParams& params, const FeatureWindow& window,
                       const CircuitSpec& spec) {
    return forward(params, window, spec).q;
}

NetworkGrads backward(ForwardCache& cache, const NetworkParams& params, const QValues& d_q) {
    if (cache.q_var < 0) {
        throw std::logic_error("backward: forward cache is missing");
    }
    Tensor seed(kActionCount, 1);
    for (int i = 0; i < kActionCount; ++i) seed[i] = d_q[i];
    cache.tape.backward(cache.q_var, seed);

    NetworkGrads grads;
    grads.g.reserve(cache.leaf_ids.size());
    for (VarId leaf : cache.leaf_ids) {
        grads.g.push_back(cache.tape.grad(leaf));
    }
    (void)params;
    return grads;
}

NetworkGrads backward(const NetworkParams& params, const FeatureWindow& window,
                      const CircuitSpec& spec, const QValues& d_q) {
    ForwardCache cache = forward(params, window, spec);
    return backward(cache, params, d_q);
}

std::string model_to_json(const NetworkParams& params, uint64_t seed,
                          const std::string& config_echo_json) {
    json j;
    j["format"] = "qtrader-model";
    j["version"] = params.version;
    j["seed"] = seed;
    j["net"] = {{"window", params.cfg.window},
                {"features", params.cfg.features},
                {"lstm_hidden", params.cfg.lstm_hidden},
                {"qubits", params.cfg.qubits},
                {"heads", params.cfg.heads},
                {"layers", params.cfg.layers},
                {"affine_head", params.cfg.affine_head}};
    if (!config_echo_json.empty()) {
        j["config"] = json::parse(config_echo_json);
    }
    json arrays = json::object();
    for (const ParamRef& ref : param_refs(params)) {
        arrays[ref.name] = ref.tensor->v;
    }
    j["params"] = arrays;
    return j.dump(2);
}

NetworkParams model_from_json(const std::string& text, uint64_t* seed_out,
                              std::string* config_echo_out) {
    json j = json::parse(text);
    if (j.value("format", "") != "qtrader-model") {
        throw DataError("not a model file (missing format tag)");
    }
    NetConfig cfg;
    const json& net = j.at("net");
    cfg.window = net.at("window").get<int>();
    cfg.features = net.at("features").get<int>();
    cfg.lstm_hidden = net.at("lstm_hidden").get<int>();
    cfg.qubits = net.at("qubits").get<int>();
    cfg.heads = net.at("heads").get<int>();
    cfg.layers = net.at("layers").get<int>();
    cfg.affine_head = net.at("affine_head").get<bool>();

    NetworkParams params = init_params(cfg, 0);
    params.version = j.at("version").get<int>();
    const json& arrays = j.at("params");
    for (ParamRef& ref : param_refs(params)) {
        if (!arrays.contains(ref.name)) {
            throw DataError("model file is missing parameter group '" + ref.name + "'");
        }
        const auto values = arrays.at(ref.name).get<std::vector<double>>();
        if (static_cast<int>(values.size()) != ref.tensor->numel()) {
            throw DataError("parameter group '" + ref.name + "' has " +
                                     std::to_string(values.size()) + " values, expected " +
                                     std::to_string(ref.tensor->numel()));
        }
        ref.tensor->v = values;
    }
    if (seed_out) *seed_out = j.value("seed", uint64_t{0});
    if (config_echo_out) {
        *config_echo_out = j.contains("config") ? j.at("config").dump() : std::string{};
    }
    return params;
}

void save_model(const NetworkParams& params, uint64_t seed, const std::string& config_echo_json,
                const std::string& path) {
    std::ofstream out(path);
    if (!out) {
        throw DataError("cannot open model file for writing: " + path);
    }
    out << model_to_json(params, seed, config_echo_json) << '\n';
    if (!out) {
        throw DataError("write failed: " + path);
    }
}

NetworkParams load_model(const std::string& path, uint64_t* seed_out,
                         std::string* config_echo_out) {
    std::ifstream in(path);
    if (!in) {
        throw DataError("cannot open model file: " + path);
    }
    std::stringstream ss;
    ss << in.rdbuf();
    return model_from_json(ss.str(), seed_out, config_echo_out);
}

}  // namespace qtrader
