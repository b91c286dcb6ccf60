#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "qtrader/agent.hpp"
#include "qtrader/market_data.hpp"
#include "qtrader/network.hpp"
#include "qtrader/strategies.hpp"

namespace qtrader {

struct TrainConfig {
    NetConfig net;
    double gamma = 0.95;
    int episodes = 200;
    int batch_size = 32;
    int target_update = 100;  // environment steps between target syncs
    double learning_rate = 3e-4;
    double weight_decay = 1e-2;
    double lion_beta1 = 0.9;
    double lion_beta2 = 0.99;
    double huber_delta = 1.0;
    double reward_clip = 0.05;
    double commission = 0.002;
    int replay_capacity = 10000;
    int prepopulate_capacity = 2000;
    double per_alpha = 0.6;
    double per_beta0 = 0.4;  // annealed linearly to 1 over the run
    double per_epsilon = 0.01;
    double ucb_c = 0.5;
    DualThrustParams dual_thrust;
    uint64_t seed = 42;
    int threads = 1;
};

struct EpisodeLog {
    int episode = 0;
    double cum_reward = 0.0;
    double mean_loss = 0.0;
    int steps = 0;
    double greedy_frac = 0.0;  // fraction of steps where the argmax action was taken
};

// Per-parameter momentum, aligned with param_refs order.
struct OptimizerState {
    std::vector<Tensor> m;

    static OptimizerState for_params(const NetworkParams& params);
};

// 0.5 x^2 inside |x| <= delta, delta (|x| - delta/2) outside.
double huber(double x, double delta);
double huber_grad(double x, double delta);

// Sign-momentum update with decoupled weight decay:
//   c = b1 m + (1 - b1) g;  theta -= lr (sign(c) + wd theta);  m = b2 m + (1 - b2) g
// sign(0) = 0.
void lion_step(NetworkParams& params, const NetworkGrads& grads, OptimizerState& state, double lr,
               double weight_decay, double beta1, double beta2);

// y = r if done else r + gamma * max_a Q_target(next_state, a).
double td_target(double reward, const FeatureWindow& next_state, bool done,
                 const NetworkParams& target_params, const CircuitSpec& spec, double gamma);

// A sampled batch frozen for loss evaluation; batch_loss is a pure function of
// the parameters so finite differences can probe it.
struct FrozenBatch {
    std::vector<const Transition*> items;
    std::vector<double> targets;
    std::vector<double> weights;
};

double batch_loss(const NetworkParams& params, const CircuitSpec& spec, const FrozenBatch& batch,
                  double delta);

struct BatchBackwardResult {
    NetworkGrads grads;
    double loss = 0.0;
    std::vector<double> td_errors;
};
BatchBackwardResult batch_backward(const NetworkParams& params, const CircuitSpec& spec,
                                   const FrozenBatch& batch, double delta, int threads);

struct TrainResult {
    NetworkParams params;
    std::vector<EpisodeLog> log;
};

TrainResult train(const PriceSeries& series, const TrainConfig& config);

void sync_target(const NetworkParams& policy, NetworkParams& target);

// CSV: "episode,cum_reward,mean_loss,steps".
void write_episode_log_csv(const std::vector<EpisodeLog>& log, const std::string& path);

}  // namespace qtrader
