#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <vector>

#include "qtrader/errors.hpp"
#include "qtrader/gradcheck.hpp"
#include "qtrader/market_data.hpp"
#include "qtrader/network.hpp"
#include "qtrader/rng.hpp"

using namespace qtrader;

namespace {

NetConfig small_config() {
    NetConfig cfg;
    cfg.window = 6;
    cfg.lstm_hidden = 16;
    cfg.heads = 2;
    cfg.layers = 2;
    return cfg;
}

FeatureWindow window_from_series(const NetConfig& cfg, uint64_t seed, int offset = 0) {
    const PriceSeries series = gbm_series(100.0, 0.05, 0.3, 1.0 / 252.0, cfg.window + 10, seed);
    return feature_window(series, cfg.window + offset, cfg.window);
}

void zero_all(NetworkParams& params) {
    for (ParamRef& ref : param_refs(params)) ref.tensor->zero();
}

}  // namespace

TEST_CASE("all-zero parameters give q = (1, 1, 1)") {
    const NetConfig cfg = small_config();
    NetworkParams params = init_params(cfg, 1);
    zero_all(params);
    const CircuitSpec spec = circuit_for(cfg);

    const QValues q = forward_values(params, window_from_series(cfg, 3), spec);
    for (double v : q) CHECK(v == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("q-values are bounded in [-1, 1]") {
    const NetConfig cfg = small_config();
    const CircuitSpec spec = circuit_for(cfg);
    for (uint64_t seed = 0; seed < 8; ++seed) {
        const NetworkParams params = init_params(cfg, seed);
        const QValues q = forward_values(params, window_from_series(cfg, seed + 100), spec);
        for (double v : q) {
            CHECK(v >= -1.0 - 1e-12);
            CHECK(v <= 1.0 + 1e-12);
        }
    }
}

TEST_CASE("forward is deterministic") {
    const NetConfig cfg = small_config();
    const CircuitSpec spec = circuit_for(cfg);
    const NetworkParams params = init_params(cfg, 5);
    const FeatureWindow w = window_from_series(cfg, 7);
    const QValues a = forward_values(params, w, spec);
    const QValues b = forward_values(params, w, spec);
    CHECK(a == b);
}

TEST_CASE("forward validates the window shape") {
    const NetConfig cfg = small_config();
    const CircuitSpec spec = circuit_for(cfg);
    const NetworkParams params = init_params(cfg, 5);
    NetConfig other = cfg;
    other.window = cfg.window + 2;
    CHECK_THROWS_AS(forward_values(params, window_from_series(other, 7), spec),
                    std::invalid_argument);
}

TEST_CASE("zero loss gradient means zero parameter gradients") {
    const NetConfig cfg = small_config();
    const CircuitSpec spec = circuit_for(cfg);
    const NetworkParams params = init_params(cfg, 11);
    const NetworkGrads grads =
        backward(params, window_from_series(cfg, 13), spec, QValues{0.0, 0.0, 0.0});
    for (const Tensor& g : grads.g) {
        for (double v : g.v) CHECK(v == 0.0);
    }
}

TEST_CASE("backward requires an unconsumed cache") {
    const NetConfig cfg = small_config();
    const CircuitSpec spec = circuit_for(cfg);
    const NetworkParams params = init_params(cfg, 11);
    ForwardCache cache = forward(params, window_from_series(cfg, 13), spec);
    const QValues seed{1.0, 0.0, 0.0};
    backward(cache, params, seed);
    CHECK_THROWS_AS(backward(cache, params, seed), std::logic_error);

    ForwardCache empty;
    CHECK_THROWS_AS(backward(empty, params, seed), std::logic_error);
}

TEST_CASE("post-net angle gradients of a bounded output stay within 1") {
    const NetConfig cfg = small_config();
    const CircuitSpec spec = circuit_for(cfg);
    for (uint64_t seed = 0; seed < 5; ++seed) {
        NetworkParams params = init_params(cfg, seed);
        const auto refs = param_refs(params);
        size_t post = 0;
        while (post < refs.size() && refs[post].name != "postnet.theta") ++post;
        for (int action = 0; action < kActionCount; ++action) {
            QValues seed_q{0.0, 0.0, 0.0};
            seed_q[action] = 1.0;
            const NetworkGrads grads =
                backward(params, window_from_series(cfg, seed + 30), spec, seed_q);
            for (double g : grads.g[post].v) CHECK(std::abs(g) <= 1.0 + 1e-9);
        }
    }
}

TEST_CASE("full-network gradients match finite differences per group") {
    for (const auto& entry : check_network_gradient(1e-3, 2024)) {
        INFO(entry.group, " max rel error ", entry.max_rel_error);
        CHECK(entry.passed);
    }
}

TEST_CASE("clone_params is a deep copy") {
    const NetConfig cfg = small_config();
    const CircuitSpec spec = circuit_for(cfg);
    NetworkParams original = init_params(cfg, 21);
    NetworkParams copy = clone_params(original);
    const FeatureWindow w = window_from_series(cfg, 23);

    CHECK(forward_values(original, w, spec) == forward_values(copy, w, spec));

    const QValues before = forward_values(copy, w, spec);
    original.postnet_theta[0] += 0.5;
    original.lstm.w_xi(0, 0) += 0.5;
    CHECK(forward_values(copy, w, spec) == before);

    const NetworkParams again = clone_params(copy);
    CHECK(forward_values(again, w, spec) == before);
}

TEST_CASE("parameter initialization ranges and determinism") {
    const NetConfig cfg = small_config();
    NetworkParams a = init_params(cfg, 31);
    NetworkParams b = init_params(cfg, 31);
    NetworkParams c = init_params(cfg, 32);

    bool differs = false;
    auto ra = param_refs(a), rb = param_refs(b), rc = param_refs(c);
    for (size_t i = 0; i < ra.size(); ++i) {
        CHECK(ra[i].tensor->v == rb[i].tensor->v);
        differs = differs || ra[i].tensor->v != rc[i].tensor->v;
        const bool is_angle = ra[i].name.find("theta") != std::string::npos;
        for (double v : ra[i].tensor->v) {
            CHECK(std::abs(v) <= (is_angle ? M_PI : 1.0));
        }
    }
    CHECK(differs);
}

TEST_CASE("model serialization round trip preserves the forward pass bit for bit") {
    const NetConfig cfg = small_config();
    const CircuitSpec spec = circuit_for(cfg);
    const NetworkParams params = init_params(cfg, 77);
    const FeatureWindow w = window_from_series(cfg, 78);
    const QValues before = forward_values(params, w, spec);

    const auto path =
        (std::filesystem::temp_directory_path() / "qtrader_model_roundtrip.json").string();
    save_model(params, 77, "", path);
    uint64_t seed = 0;
    const NetworkParams loaded = load_model(path, &seed);
    CHECK(seed == 77);
    CHECK(loaded.cfg.window == cfg.window);

    CHECK(forward_values(loaded, w, spec) == before);

    auto ra = param_refs(params), rl = param_refs(loaded);
    for (size_t i = 0; i < ra.size(); ++i) CHECK(ra[i].tensor->v == rl[i].tensor->v);
}

TEST_CASE("model loader rejects broken files") {
    const auto dir = std::filesystem::temp_directory_path();
    CHECK_THROWS_AS(load_model((dir / "missing_model.json").string()), DataError);
    CHECK_THROWS_AS(model_from_json("{\"format\":\"something-else\"}"), DataError);

    const NetConfig cfg = small_config();
    NetworkParams params = init_params(cfg, 1);
    std::string text = model_to_json(params, 1, "");
    const size_t at = text.find("lstm.w_xi");
    text.replace(at, 9, "lstm.w_??");
    CHECK_THROWS_AS(model_from_json(text), DataError);
}

TEST_CASE("config echo survives the model file") {
    const NetConfig cfg = small_config();
    const NetworkParams params = init_params(cfg, 3);
    const std::string echo = "{\"commission\":0.002,\"episodes\":200}";
    const std::string text = model_to_json(params, 3, echo);
    std::string echo_out;
    model_from_json(text, nullptr, &echo_out);
    CHECK(echo_out.find("\"episodes\":200") != std::string::npos);
}

TEST_CASE("affine output head starts as the identity") {
    NetConfig cfg = small_config();
    const CircuitSpec spec = circuit_for(cfg);
    NetworkParams plain = init_params(cfg, 9);

    cfg.affine_head = true;
    NetworkParams affine = init_params(cfg, 9);
    const FeatureWindow w = window_from_series(cfg, 10);
    CHECK(forward_values(affine, w, spec) == forward_values(plain, w, spec));

    affine.out_scale[0] = 3.0;
    affine.out_bias[0] = 0.5;
    const QValues q = forward_values(affine, w, spec);
    CHECK(q[0] == doctest::Approx(3.0 * forward_values(plain, w, spec)[0] + 0.5).epsilon(1e-12));
}
