#include "qtrader/training.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "qtrader/errors.hpp"
#include <thread>

#include "qtrader/backtest.hpp"

namespace qtrader {

OptimizerState OptimizerState::for_params(const NetworkParams& params) {
    OptimizerState state;
    for (const ParamRef& ref : param_refs(params)) {
        state.m.emplace_back(ref.tensor->rows, ref.tensor->cols);
    }
    return state;
}

double huber(double x, double delta) {
    if (delta <= 0.0) throw std::invalid_argument("huber: delta must be positive");
    const double ax = std::abs(x);
    return ax <= delta ? 0.5 * x * x : delta * (ax - 0.5 * delta);
}

double huber_grad(double x, double delta) {
    if (delta <= 0.0) throw std::invalid_argument("huber: delta must be positive");
    if (x > delta) return delta;
    if (x < -delta) return -delta;
    return x;
}

void lion_step(NetworkParams& params, const NetworkGrads& grads, OptimizerState& state, double lr,
               double weight_decay, double beta1, double beta2) {
    auto refs = param_refs(params);
    if (refs.size() != grads.g.size() || refs.size() != state.m.size()) {
        throw std::invalid_argument("lion_step: layout mismatch");
    }
    for (size_t i = 0; i < refs.size(); ++i) {
        Tensor& theta = *refs[i].tensor;
        const Tensor& g = grads.g[i];
        Tensor& m = state.m[i];
        if (!theta.same_shape(g) || !theta.same_shape(m)) {
            throw std::invalid_argument("lion_step: shape mismatch in group " + refs[i].name);
        }
        for (int j = 0; j < theta.numel(); ++j) {
            const double c = beta1 * m[j] + (1.0 - beta1) * g[j];
            const double sign = (c > 0.0) - (c < 0.0);
            theta[j] -= lr * (sign + weight_decay * theta[j]);
            m[j] = beta2 * m[j] + (1.0 - beta2) * g[j];
        }
    }
}

double td_target(double reward, const FeatureWindow& next_state, bool done,
                 const NetworkParams& target_params, const CircuitSpec& spec, double gamma) {
    if (done) return reward;
    const QValues q = forward_values(target_params, next_state, spec);
    return reward + gamma * *std::max_element(q.begin(), q.end());
}

double batch_loss(const NetworkParams& params, const CircuitSpec& spec, const FrozenBatch& batch,
                  double delta) {
    const size_t n = batch.items.size();
    double loss = 0.0;
    for (size_t i = 0; i < n; ++i) {
        const Transition& t = *batch.items[i];
        const QValues q = forward_values(params, t.state, spec);
        const double residual = q[static_cast<int>(t.action)] - batch.targets[i];
        loss += batch.weights[i] * huber(residual, delta);
    }
    return loss / static_cast<double>(n);
}

BatchBackwardResult batch_backward(const NetworkParams& params, const CircuitSpec& spec,
                                   const FrozenBatch& batch, double delta, int threads) {
    const int n = static_cast<int>(batch.items.size());
    std::vector<NetworkGrads> per_sample(n);
    std::vector<double> losses(n, 0.0);
    std::vector<double> tds(n, 0.0);

    auto run_range = [&](int begin, int end) {
        for (int i = begin; i < end; ++i) {
            const Transition& t = *batch.items[i];
            ForwardCache cache = forward(params, t.state, spec);
            const int a = static_cast<int>(t.action);
            const double residual = cache.q[a] - batch.targets[i];
            tds[i] = residual;
            losses[i] = batch.weights[i] * huber(residual, delta);
            QValues seed{0.0, 0.0, 0.0};
            seed[a] = batch.weights[i] * huber_grad(residual, delta) / static_cast<double>(n);
            per_sample[i] = backward(cache, params, seed);
        }
    };

    const int workers = std::clamp(threads, 1, n);
    if (workers <= 1) {
        run_range(0, n);
    } else {
        std::vector<std::thread> pool;
        const int chunk = (n + workers - 1) / workers;
        for (int w = 0; w < workers; ++w) {
            const int begin = w * chunk;
            const int end = std::min(n, begin + chunk);
            if (begin < end) pool.emplace_back(run_range, begin, end);
        }
        for (auto& th : pool) th.join();
    }

    // Fixed reduction order keeps results independent of the thread count.
    BatchBackwardResult result;
    result.grads = zero_grads(params);
    for (int i = 0; i < n; ++i) {
        result.grads.add_scaled(per_sample[i], 1.0);
        result.loss += losses[i];
    }
    result.loss /= static_cast<double>(n);
    result.td_errors = std::move(tds);
    return result;
}

void sync_target(const NetworkParams& policy, NetworkParams& target) {
    target = clone_params(policy);
}

TrainResult train(const PriceSeries& series, const TrainConfig& config) {
    const CircuitSpec spec = circuit_for(config.net);
    NetworkParams params = init_params(config.net, config.seed);
    NetworkParams target = clone_params(params);
    OptimizerState opt = OptimizerState::for_params(params);

    PrioritizedReplayMemory memory(config.replay_capacity, config.per_alpha, config.per_epsilon);
    prepopulate_dual_thrust(memory, series, config.dual_thrust, config.net.window,
                            config.commission, config.reward_clip, config.prepopulate_capacity);

    Rng ucb_rng = Rng::stream(config.seed, 2);
    Rng per_rng = Rng::stream(config.seed, 3);
    UcbCounts counts;
    counts.c = config.ucb_c;

    TradingEnv env(series, config.net.window, config.commission, config.reward_clip);
    const int64_t planned_steps =
        static_cast<int64_t>(config.episodes) * env.steps_per_episode();

    TrainResult result;
    int64_t global_step = 0;
    for (int episode = 1; episode <= config.episodes; ++episode) {
        env.reset();
        EpisodeLog log;
        log.episode = episode;
        double loss_sum = 0.0;
        int loss_count = 0;
        int greedy_hits = 0;

        while (!env.done()) {
            const FeatureWindow state = env.state();
            const QValues q = forward_values(params, state, spec);
            const Action action = ucb_select(q, counts, state_key(state), ucb_rng);
            const int greedy =
                static_cast<int>(std::max_element(q.begin(), q.end()) - q.begin());
            if (static_cast<int>(action) == greedy) ++greedy_hits;

            const auto stepped = env.step(action);
            Transition t;
            t.state = state;
            t.action = action;
            t.reward = stepped.reward;
            t.next_state = env.state();
            t.done = stepped.done;
            memory.store(std::move(t));

            ++global_step;
            log.cum_reward += stepped.reward;
            ++log.steps;

            if (memory.size() >= config.batch_size) {
                const double progress = planned_steps > 0
                                            ? static_cast<double>(global_step) / planned_steps
                                            : 1.0;
                const double beta =
                    config.per_beta0 + (1.0 - config.per_beta0) * std::min(1.0, progress);
                const auto sampled = memory.sample(config.batch_size, beta, per_rng);

                FrozenBatch batch;
                batch.items = sampled.items;
                batch.weights = sampled.weights;
                batch.targets.reserve(sampled.items.size());
                for (const Transition* item : sampled.items) {
                    batch.targets.push_back(td_target(item->reward, item->next_state, item->done,
                                                      target, spec, config.gamma));
                }

                auto bb = batch_backward(params, spec, batch, config.huber_delta, config.threads);
                if (!std::isfinite(bb.loss)) {
                    throw NumericError("non-finite loss at step " +
                                             std::to_string(global_step));
                }
                lion_step(params, bb.grads, opt, config.learning_rate, config.weight_decay,
                          config.lion_beta1, config.lion_beta2);
                memory.update_priorities(sampled.ids, bb.td_errors);
                loss_sum += bb.loss;
                ++loss_count;
            }

            if (global_step % config.target_update == 0) {
                sync_target(params, target);
            }
        }

        log.mean_loss = loss_count > 0 ? loss_sum / loss_count : 0.0;
        log.greedy_frac = log.steps > 0 ? static_cast<double>(greedy_hits) / log.steps : 0.0;
        result.log.push_back(log);
    }

    result.params = std::move(params);
    return result;
}

void write_episode_log_csv(const std::vector<EpisodeLog>& log, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot open episode log for writing: " + path);
    out << "episode,cum_reward,mean_loss,steps\n";
    char buf[32];
    auto fmt = [&buf](double v) {
        auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
        (void)ec;
        return std::string(buf, ptr);
    };
    for (const EpisodeLog& e : log) {
        out << e.episode << ',' << fmt(e.cum_reward) << ',' << fmt(e.mean_loss) << ',' << e.steps
            << '\n';
    }
    if (!out) throw DataError("write failed: " + path);
}

}  // namespace qtrader
