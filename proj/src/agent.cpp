#include "qtrader/agent.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace qtrader {

ReplayMemory::ReplayMemory(int capacity) : capacity_(capacity) {
    if (capacity < 1) throw std::invalid_argument("replay capacity must be >= 1");
    items_.reserve(capacity);
}

void ReplayMemory::store(Transition t) {
    if (size() < capacity_) {
        items_.push_back(std::move(t));
    } else {
        items_[head_] = std::move(t);
        head_ = (head_ + 1) % capacity_;
    }
}

const Transition& ReplayMemory::at(int i) const {
    return items_[(head_ + i) % size()];
}

PrioritizedReplayMemory::PrioritizedReplayMemory(int capacity, double alpha, double epsilon)
    : capacity_(capacity), alpha_(alpha), epsilon_(epsilon) {
    if (capacity < 1) throw std::invalid_argument("replay capacity must be >= 1");
    if (epsilon <= 0.0) throw std::invalid_argument("priority floor must be positive");
    items_.reserve(capacity);
    priorities_.reserve(capacity);
}

size_t PrioritizedReplayMemory::slot_of(int i) const {
    return static_cast<size_t>((next_id_ - size() + i) % capacity_);
}

bool PrioritizedReplayMemory::id_live(int64_t id) const {
    return id >= next_id_ - size() && id < next_id_;
}

void PrioritizedReplayMemory::store(Transition t) {
    store(std::move(t), max_priority_);
}

void PrioritizedReplayMemory::store(Transition t, double priority) {
    const double p = std::max(priority, epsilon_);
    const size_t slot = static_cast<size_t>(next_id_ % capacity_);
    if (size() < capacity_) {
        items_.push_back(std::move(t));
        priorities_.push_back(p);
    } else {
        items_[slot] = std::move(t);
        priorities_[slot] = p;
    }
    max_priority_ = std::max(max_priority_, p);
    ++next_id_;
}

PrioritizedReplayMemory::Sample PrioritizedReplayMemory::sample(int batch, double beta,
                                                                Rng& rng) const {
    if (batch < 1 || batch > size()) {
        throw std::invalid_argument("per_sample: batch of " + std::to_string(batch) +
                                    " from memory of size " + std::to_string(size()));
    }
    const int n = size();
    std::vector<double> cdf(n);
    double total = 0.0;
    double min_mass = 0.0;
    for (int i = 0; i < n; ++i) {
        const double mass = std::pow(priorities_[slot_of(i)], alpha_);
        total += mass;
        cdf[i] = total;
        min_mass = (i == 0) ? mass : std::min(min_mass, mass);
    }

    // Largest weight in the memory belongs to the smallest probability.
    const double min_prob = min_mass / total;
    const double max_weight = std::pow(n * min_prob, -beta);

    Sample out;
    out.ids.reserve(batch);
    out.items.reserve(batch);
    out.weights.reserve(batch);
    for (int k = 0; k < batch; ++k) {
        const double u = rng.uniform() * total;
        const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
        const int i = std::min(static_cast<int>(it - cdf.begin()), n - 1);
        const double prob = std::pow(priorities_[slot_of(i)], alpha_) / total;
        out.ids.push_back(next_id_ - n + i);
        out.items.push_back(&items_[slot_of(i)]);
        out.weights.push_back(std::pow(n * prob, -beta) / max_weight);
    }
    return out;
}

void PrioritizedReplayMemory::update_priorities(std::span<const int64_t> ids,
                                                std::span<const double> td_errors) {
    if (ids.size() != td_errors.size()) {
        throw std::invalid_argument("update_priorities: length mismatch");
    }
    for (size_t k = 0; k < ids.size(); ++k) {
        if (!id_live(ids[k])) {
            ++stale_updates_;
            continue;
        }
        const double p = std::abs(td_errors[k]) + epsilon_;
        priorities_[static_cast<size_t>(ids[k] % capacity_)] = p;
        max_priority_ = std::max(max_priority_, p);
    }
}

int state_key(const FeatureWindow& window) {
    int key = 0;
    int scale = 1;
    for (int c = 0; c < window.cols; ++c) {
        const double x = window.at(0, c);
        const int sign = (x > 0.0) - (x < 0.0);
        key += (sign + 1) * scale;
        scale *= 3;
    }
    return key;
}

std::array<double, kActionCount> ucb_weights(const QValues& q, double visit_count, double c,
                                             double t) {
    int greedy = 0;
    for (int a = 1; a < kActionCount; ++a) {
        if (q[a] > q[greedy]) greedy = a;
    }
    const double bonus = c * std::log(t) / visit_count;
    std::array<double, kActionCount> w{};
    for (int a = 0; a < kActionCount; ++a) {
        w[a] = std::max(0.0, a == greedy ? 1.0 - c + bonus : bonus);
    }
    return w;
}

Action ucb_select(const QValues& q, UcbCounts& counts, int key, Rng& rng) {
    const double t_now = static_cast<double>(counts.t + 1);
    const int64_t n = ++counts.visits[key];  // first sight initializes to 1
    counts.t += 1;

    std::array<double, kActionCount> w = ucb_weights(q, static_cast<double>(n), counts.c, t_now);
    double sum = w[0] + w[1] + w[2];
    if (sum <= 0.0) {
        ++counts.fallback_count;
        w = {1.0, 1.0, 1.0};
        sum = 3.0;
    }
    const double u = rng.uniform() * sum;
    double acc = 0.0;
    for (int a = 0; a < kActionCount; ++a) {
        acc += w[a];
        if (u < acc) return static_cast<Action>(a);
    }
    return static_cast<Action>(kActionCount - 1);
}

int prepopulate_dual_thrust(PrioritizedReplayMemory& memory, const PriceSeries& series,
                            const DualThrustParams& params, int window, double commission,
                            double reward_clip, int max_stored) {
    TradingEnv env(series, window, commission, reward_clip);
    int stored = 0;
    while (!env.done() && stored < max_stored) {
        const Action action =
            dual_thrust_decide(series, env.current_bar(), env.portfolio().is_long(), params);
        Transition t;
        t.state = env.state();
        t.action = action;
        const auto result = env.step(action);
        t.reward = result.reward;
        t.next_state = env.state();
        t.done = result.done;
        t.prepopulated = true;
        memory.store(std::move(t));  // maximal current priority
        ++stored;
    }
    return stored;
}

}  // namespace qtrader
