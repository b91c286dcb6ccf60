#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "qtrader/action.hpp"
#include "qtrader/backtest.hpp"
#include "qtrader/market_data.hpp"
#include "qtrader/network.hpp"
#include "qtrader/rng.hpp"
#include "qtrader/strategies.hpp"

namespace qtrader {

struct Transition {
    FeatureWindow state;
    Action action = Action::Sit;
    double reward = 0.0;
    FeatureWindow next_state;
    bool done = false;
    bool prepopulated = false;  // came from the imitation roll-out
};

// Plain FIFO ring buffer.
class ReplayMemory {
  public:
    explicit ReplayMemory(int capacity);

    void store(Transition t);
    int size() const { return static_cast<int>(items_.size()); }
    int capacity() const { return capacity_; }
    // Index 0 is the oldest stored transition.
    const Transition& at(int i) const;

  private:
    int capacity_;
    int head_ = 0;  // slot of the oldest element once full
    std::vector<Transition> items_;
};

// Proportional prioritized replay: P(i) = p_i^alpha / sum_j p_j^alpha with
// importance weights w_i = (size * P(i))^-beta normalized by the largest
// weight in the memory. FIFO ring eviction.
class PrioritizedReplayMemory {
  public:
    PrioritizedReplayMemory(int capacity, double alpha, double epsilon);

    // Unspecified priority: the current maximum (1.0 while empty).
    void store(Transition t);
    void store(Transition t, double priority);

    struct Sample {
        std::vector<int64_t> ids;
        std::vector<const Transition*> items;
        std::vector<double> weights;
    };
    Sample sample(int batch, double beta, Rng& rng) const;

    // p <- |td_error| + epsilon. Ids of evicted items are skipped and counted.
    void update_priorities(std::span<const int64_t> ids, std::span<const double> td_errors);

    int size() const { return static_cast<int>(items_.size()); }
    int capacity() const { return capacity_; }
    const Transition& at(int i) const { return items_[slot_of(i)]; }
    double priority_at(int i) const { return priorities_[slot_of(i)]; }
    double max_priority() const { return max_priority_; }
    int64_t stale_update_count() const { return stale_updates_; }

  private:
    size_t slot_of(int i) const;  // i counted from the oldest element
    bool id_live(int64_t id) const;

    int capacity_;
    double alpha_;
    double epsilon_;
    double max_priority_ = 1.0;
    int64_t next_id_ = 0;  // ids are assigned sequentially; slot = id % capacity
    int64_t stale_updates_ = 0;
    std::vector<Transition> items_;
    std::vector<double> priorities_;
};

// Discretized state class for visit counting: the sign pattern (-/0/+) of the
// most recent window row, packed base 3.
int state_key(const FeatureWindow& window);

struct UcbCounts {
    double c = 0.5;                    // exploration constant, 0 < c < 1
    int64_t t = 0;                     // selections made so far
    std::map<int, int64_t> visits;     // state key -> visit count
    int64_t fallback_count = 0;        // degenerate weight vectors seen
};

// Unnormalized selection weights: the greedy action gets 1 - c + c log(t)/n,
// the others c log(t)/n, clamped at zero.
std::array<double, kActionCount> ucb_weights(const QValues& q, double visit_count, double c,
                                             double t);

// Samples from the renormalized weights and updates the visit counts.
Action ucb_select(const QValues& q, UcbCounts& counts, int key, Rng& rng);

// Rolls the Dual Thrust policy through a training environment and stores every
// transition with maximal priority, flagged as pre-populated. At most
// max_stored transitions are kept. Returns the stored count.
int prepopulate_dual_thrust(PrioritizedReplayMemory& memory, const PriceSeries& series,
                            const DualThrustParams& params, int window, double commission,
                            double reward_clip, int max_stored);

}  // namespace qtrader
