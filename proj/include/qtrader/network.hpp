#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "qtrader/attention.hpp"
#include "qtrader/autodiff.hpp"
#include "qtrader/market_data.hpp"
#include "qtrader/quantum.hpp"
#include "qtrader/tensor.hpp"

namespace qtrader {

inline constexpr int kActionCount = 3;

// Q-value triple ordered (sit, buy, sell); each bounded in [-1, 1] unless the
// optional affine output head is enabled.
using QValues = std::array<double, kActionCount>;

// Structural wiring of the network. The pre-net chain is
// lstm_hidden -> 32 -> 8 -> qubits.
struct NetConfig {
    int window = 24;       // rows of the feature window
    int features = 4;      // columns (OHLC log returns)
    int lstm_hidden = 64;
    int qubits = 4;        // attention dh and post-net width
    int heads = 2;
    int layers = 2;        // entangling-layer depth of every circuit
    bool affine_head = false;  // trainable affine on the Q-values, lifts the [-1,1] bound

    std::vector<int> prenet_dims() const { return {lstm_hidden, 32, 8, qubits}; }
};

struct NetworkParams {
    NetConfig cfg;
    int version = 1;
    LstmParams lstm;
    PreNetParams prenet;
    std::vector<AttentionHeadParams> heads;
    Tensor proj_w;  // qubits x (heads * qubits)
    Tensor proj_b;  // qubits
    Tensor postnet_theta;
    Tensor out_scale;  // affine head only
    Tensor out_bias;
};

// Stable, ordered view of every trainable tensor. The order defines the
// serialization layout, the optimizer state layout and the gradient layout.
struct ParamRef {
    std::string name;
    Tensor* tensor;
};
std::vector<ParamRef> param_refs(NetworkParams& params);
std::vector<ParamRef> param_refs(const NetworkParams& params);  // tensors cast const away; read-only use

// Gradients aligned with param_refs order.
struct NetworkGrads {
    std::vector<Tensor> g;

    void add_scaled(const NetworkGrads& other, double factor);
};
NetworkGrads zero_grads(const NetworkParams& params);

// Classical weights uniform in +-1/sqrt(fan_in), circuit angles uniform in
// +-pi; draw order follows param_refs.
NetworkParams init_params(const NetConfig& cfg, uint64_t seed);

NetworkParams clone_params(const NetworkParams& params);

// Activation cache: the tape recorded by forward plus the leaf bookkeeping
// backward needs. Single use.
struct ForwardCache {
    Tape tape;
    VarId q_var = -1;
    std::vector<VarId> leaf_ids;  // aligned with param_refs
    QValues q{};
};

ForwardCache forward(const NetworkParams& params, const FeatureWindow& window,
                     const CircuitSpec& spec);
QValues forward_values(const NetworkParams& params, const FeatureWindow& window,
                       const CircuitSpec& spec);

// Gradient of dot(d_q, Q(window)) for every parameter. Consumes the cache.
NetworkGrads backward(ForwardCache& cache, const NetworkParams& params, const QValues& d_q);
NetworkGrads backward(const NetworkParams& params, const FeatureWindow& window,
                      const CircuitSpec& spec, const QValues& d_q);

CircuitSpec circuit_for(const NetConfig& cfg);

// Model file: JSON with the structural config, seed provenance, an optional
// caller-supplied config echo and flat row-major parameter arrays.
std::string model_to_json(const NetworkParams& params, uint64_t seed,
                          const std::string& config_echo_json);
NetworkParams model_from_json(const std::string& text, uint64_t* seed_out = nullptr,
                              std::string* config_echo_out = nullptr);
void save_model(const NetworkParams& params, uint64_t seed, const std::string& config_echo_json,
                const std::string& path);
NetworkParams load_model(const std::string& path, uint64_t* seed_out = nullptr,
                         std::string* config_echo_out = nullptr);

}  // namespace qtrader
