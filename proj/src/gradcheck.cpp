#include "qtrader/gradcheck.hpp"

#include <cmath>
#include <sstream>

#include "qtrader/market_data.hpp"
#include "qtrader/quantum.hpp"
#include "qtrader/rng.hpp"
#include "qtrader/training.hpp"

namespace qtrader {

namespace {

double vector_rel_error(const std::vector<double>& a, const std::vector<double>& b) {
    double diff = 0.0, norm = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
        diff += (a[i] - b[i]) * (a[i] - b[i]);
        norm += b[i] * b[i];
    }
    return std::sqrt(diff) / std::max(std::sqrt(norm), 1e-12);
}

struct NetFixture {
    NetworkParams params;
    CircuitSpec spec;
    FrozenBatch batch;
    std::vector<Transition> storage;
    double delta = 1.0;
};

NetFixture make_net_fixture(uint64_t seed) {
    NetFixture fx;
    NetConfig cfg;
    cfg.window = 8;
    cfg.heads = 2;
    cfg.layers = 2;
    fx.params = init_params(cfg, seed);
    fx.spec = circuit_for(cfg);

    const PriceSeries series = gbm_series(100.0, 0.05, 0.3, 1.0 / 252.0, 40, seed + 17);
    Rng rng = Rng::stream(seed, 11);
    for (int i = 0; i < 4; ++i) {
        Transition t;
        const int bar = cfg.window + i * 3;
        t.state = feature_window(series, bar, cfg.window);
        t.action = static_cast<Action>(i % kActionCount);
        fx.storage.push_back(std::move(t));
    }
    for (const Transition& t : fx.storage) {
        fx.batch.items.push_back(&t);
        fx.batch.targets.push_back(rng.uniform(-1.0, 1.0));
        fx.batch.weights.push_back(rng.uniform(0.5, 1.0));
    }
    return fx;
}

}  // namespace

GradCheckReport::Entry check_param_shift(int trials, double tolerance, uint64_t seed) {
    const CircuitSpec spec = CircuitSpec::layered(4, 2);
    Rng rng = Rng::stream(seed, 21);
    const double h = 1e-4;

    double worst = 0.0;
    for (int trial = 0; trial < trials; ++trial) {
        std::vector<double> theta(spec.param_count);
        std::vector<double> x(spec.qubits);
        for (double& v : theta) v = rng.uniform(-M_PI, M_PI);
        for (double& v : x) v = rng.uniform(-M_PI, M_PI);
        const StateVector input = angle_embed(x);
        const int observable = trial % spec.qubits;

        const std::vector<double> ps = param_shift_grad(spec, theta, input, observable);

        std::vector<double> fd(theta.size());
        std::vector<double> shifted = theta;
        for (size_t k = 0; k < theta.size(); ++k) {
            shifted[k] = theta[k] + h;
            const double e_plus = expect_z(run_circuit(spec, shifted, input), observable);
            shifted[k] = theta[k] - h;
            const double e_minus = expect_z(run_circuit(spec, shifted, input), observable);
            shifted[k] = theta[k];
            fd[k] = (e_plus - e_minus) / (2.0 * h);
        }
        worst = std::max(worst, vector_rel_error(ps, fd));
    }

    GradCheckReport::Entry entry;
    entry.group = "post-net parameter-shift";
    entry.max_rel_error = worst;
    entry.tolerance = tolerance;
    entry.passed = worst < tolerance;
    return entry;
}

std::vector<GradCheckReport::Entry> check_network_gradient(double tolerance, uint64_t seed) {
    NetFixture fx = make_net_fixture(seed);
    auto refs = param_refs(fx.params);

    const auto analytic = batch_backward(fx.params, fx.spec, fx.batch, fx.delta, 1);

    // One probe per named group; together they span every parameter family.
    const std::vector<std::string> groups = {
        "lstm.w_xi", "lstm.w_hf",     "prenet.0.w", "prenet.2.b",    "head.0.theta_k",
        "head.0.theta_v", "head.1.theta_q", "proj.w",     "proj.b", "postnet.theta"};

    Rng pick = Rng::stream(seed, 22);
    const double h = 1e-5;
    std::vector<GradCheckReport::Entry> entries;
    for (const std::string& group : groups) {
        size_t g = 0;
        while (g < refs.size() && refs[g].name != group) ++g;
        Tensor& tensor = *refs[g].tensor;

        double rel = 0.0;
        for (int attempt = 0; attempt < 20; ++attempt) {
            const int j = static_cast<int>(pick.below(static_cast<uint64_t>(tensor.numel())));
            const double saved = tensor[j];
            tensor[j] = saved + h;
            const double up = batch_loss(fx.params, fx.spec, fx.batch, fx.delta);
            tensor[j] = saved - h;
            const double down = batch_loss(fx.params, fx.spec, fx.batch, fx.delta);
            tensor[j] = saved;
            const double fd = (up - down) / (2.0 * h);
            const double an = analytic.grads.g[g][j];
            rel = std::abs(an - fd) / std::max({std::abs(an), std::abs(fd), 1e-8});
            if (std::abs(fd) >= 1e-5) break;  // redraw noise-dominated probes
        }

        GradCheckReport::Entry entry;
        entry.group = group;
        entry.max_rel_error = rel;
        entry.tolerance = tolerance;
        entry.passed = rel < tolerance;
        entries.push_back(entry);
    }
    return entries;
}

GradCheckReport run_gradcheck(double ps_tolerance, double net_tolerance, uint64_t seed) {
    GradCheckReport report;
    report.entries.push_back(check_param_shift(20, ps_tolerance, seed));
    for (auto& entry : check_network_gradient(net_tolerance, seed)) {
        report.entries.push_back(std::move(entry));
    }
    for (const auto& entry : report.entries) {
        report.passed = report.passed && entry.passed;
    }
    return report;
}

std::string GradCheckReport::to_string() const {
    std::ostringstream out;
    for (const Entry& e : entries) {
        out << (e.passed ? "[ok]   " : "[FAIL] ") << e.group << ": max rel error "
            << e.max_rel_error << " (tolerance " << e.tolerance << ")\n";
    }
    out << (passed ? "gradcheck passed\n" : "gradcheck FAILED\n");
    return out.str();
}

}  // namespace qtrader
