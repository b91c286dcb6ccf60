#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <array>
#include <cmath>
#include <map>
#include <vector>

#include "qtrader/agent.hpp"
#include "qtrader/market_data.hpp"
#include "qtrader/rng.hpp"

using namespace qtrader;

namespace {

FeatureWindow window_of_signs(std::array<int, 4> signs) {
    FeatureWindow w;
    w.rows = 2;
    w.t_index = 5;
    w.m = {0, 0, 0, 0, 0.5, -0.5, 0.5, -0.5};  // older row, arbitrary
    for (int c = 0; c < 4; ++c) w.m[c] = 0.1 * signs[c];
    return w;
}

Transition make_transition(double reward, int tag = 0) {
    Transition t;
    t.state = window_of_signs({1, 0, 0, 0});
    t.state.t_index = tag;
    t.action = Action::Buy;
    t.reward = reward;
    t.next_state = t.state;
    return t;
}

}  // namespace

TEST_CASE("state_key packs the sign pattern of the latest row") {
    CHECK(state_key(window_of_signs({0, 0, 0, 0})) == 1 + 3 + 9 + 27);
    CHECK(state_key(window_of_signs({1, 1, 1, 1})) == 2 * (1 + 3 + 9 + 27));
    CHECK(state_key(window_of_signs({-1, -1, -1, -1})) == 0);
    CHECK(state_key(window_of_signs({1, -1, 0, 1})) == 2 + 0 + 9 + 54);
}

TEST_CASE("state_key ignores older rows and uniform price scale") {
    FeatureWindow a = window_of_signs({1, -1, 1, 0});
    FeatureWindow b = a;
    b.m[4] = -9.0;  // older row differs
    CHECK(state_key(a) == state_key(b));

    const PriceSeries base = gbm_series(50.0, 0.1, 0.4, 1.0 / 252.0, 30, 6);
    PriceSeries scaled = base;
    for (OhlcBar& bar : scaled.bars) {
        bar.open *= 7.0;
        bar.high *= 7.0;
        bar.low *= 7.0;
        bar.close *= 7.0;
    }
    for (int t = 10; t < 29; ++t) {
        CHECK(state_key(feature_window(base, t, 8)) == state_key(feature_window(scaled, t, 8)));
    }
}

TEST_CASE("ucb weights reproduce the hand-evaluated cases") {
    const QValues q{0.1, 0.9, 0.2};  // argmax = buy

    // t = e so log(t) = 1; n = 1; c = 0.5.
    const auto w = ucb_weights(q, 1.0, 0.5, std::exp(1.0));
    CHECK(w[0] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(w[1] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(w[2] == doctest::Approx(0.5).epsilon(1e-12));
    const double sum = w[0] + w[1] + w[2];
    CHECK(w[0] / sum == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(w[1] / sum == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(w[2] / sum == doctest::Approx(0.25).epsilon(1e-12));

    // t = 1 gives log(t) = 0: only the greedy arm survives.
    const auto w1 = ucb_weights(q, 1.0, 0.5, 1.0);
    CHECK(w1[0] == 0.0);
    CHECK(w1[1] == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(w1[2] == 0.0);
}

TEST_CASE("first selection is greedy with probability one") {
    const QValues q{-0.2, 0.1, 0.7};
    for (uint64_t seed = 0; seed < 20; ++seed) {
        UcbCounts counts;
        counts.c = 0.5;
        Rng rng(seed);
        CHECK(ucb_select(q, counts, 3, rng) == Action::Sell);
        CHECK(counts.t == 1);
        CHECK(counts.visits.at(3) == 1);
    }
}

TEST_CASE("ucb approaches pure argmax as c goes to zero") {
    const QValues q{0.3, -0.1, 0.2};
    UcbCounts counts;
    counts.c = 1e-9;
    Rng rng(7);
    for (int step = 0; step < 500; ++step) {
        CHECK(ucb_select(q, counts, step % 5, rng) == Action::Sit);
    }
}

TEST_CASE("visit counts grow and exploration weight decays per state") {
    const QValues q{1.0, 0.0, 0.0};
    UcbCounts counts;
    counts.c = 0.5;
    Rng rng(3);
    for (int i = 0; i < 10; ++i) ucb_select(q, counts, 42, rng);
    CHECK(counts.visits.at(42) == 10);
    CHECK(counts.t == 10);

    // n = 10 at t = 11: non-greedy weight is c log(11)/10.
    const auto w = ucb_weights(q, 10.0, 0.5, 11.0);
    CHECK(w[1] == doctest::Approx(0.5 * std::log(11.0) / 10.0).epsilon(1e-12));
}

TEST_CASE("degenerate all-zero weights fall back to uniform and are counted") {
    // c = 1 (outside the contract) with t = 1 zeroes every weight.
    const QValues q{0.0, 1.0, 0.0};
    const auto w = ucb_weights(q, 1.0, 1.0, 1.0);
    CHECK(w[0] + w[1] + w[2] == 0.0);

    UcbCounts counts;
    counts.c = 1.0;
    Rng rng(11);
    std::map<Action, int> histogram;
    for (int i = 0; i < 3000; ++i) {
        UcbCounts fresh;
        fresh.c = 1.0;
        Rng r(i);
        ++histogram[ucb_select(q, fresh, 0, r)];
        counts = fresh;
    }
    CHECK(counts.fallback_count == 1);
    CHECK(histogram[Action::Sit] > 800);
    CHECK(histogram[Action::Buy] > 800);
    CHECK(histogram[Action::Sell] > 800);
}

TEST_CASE("selection sequence is reproducible under a fixed seed") {
    const PriceSeries series = gbm_series(100.0, 0.05, 0.3, 1.0 / 252.0, 60, 15);
    auto roll = [&] {
        UcbCounts counts;
        Rng rng(99);
        std::vector<Action> actions;
        for (int t = 10; t < 59; ++t) {
            const FeatureWindow w = feature_window(series, t, 8);
            const QValues q{0.1 * (t % 3), 0.05 * (t % 5), 0.02 * (t % 7)};
            actions.push_back(ucb_select(q, counts, state_key(w), rng));
        }
        return actions;
    };
    CHECK(roll() == roll());
}

TEST_CASE("plain replay memory is a fifo ring") {
    ReplayMemory memory(3);
    CHECK(memory.capacity() == 3);
    for (int i = 0; i < 5; ++i) memory.store(make_transition(i));
    CHECK(memory.size() == 3);
    CHECK(memory.at(0).reward == 2.0);  // oldest two evicted
    CHECK(memory.at(2).reward == 4.0);
    CHECK_THROWS_AS(ReplayMemory(0), std::invalid_argument);
}

TEST_CASE("prioritized store defaults and floors") {
    PrioritizedReplayMemory memory(8, 0.6, 0.01);
    memory.store(make_transition(0.0));  // empty-memory default priority
    CHECK(memory.priority_at(0) == 1.0);

    memory.store(make_transition(1.0), 0.0);  // floored
    CHECK(memory.priority_at(1) == 0.01);

    memory.store(make_transition(2.0), 5.0);
    CHECK(memory.priority_at(2) == 5.0);
    CHECK(memory.max_priority() == 5.0);

    memory.store(make_transition(3.0));  // unspecified -> current max
    CHECK(memory.priority_at(3) == 5.0);
}

TEST_CASE("prioritized ring eviction keeps the newest items") {
    PrioritizedReplayMemory memory(4, 1.0, 0.01);
    for (int i = 0; i < 7; ++i) memory.store(make_transition(i), 1.0 + i);
    CHECK(memory.size() == 4);
    CHECK(memory.at(0).reward == 3.0);
    CHECK(memory.at(3).reward == 6.0);
    CHECK(memory.priority_at(0) == 4.0);
}

TEST_CASE("equal priorities sample uniformly with unit weights") {
    PrioritizedReplayMemory memory(16, 0.6, 0.01);
    for (int i = 0; i < 8; ++i) memory.store(make_transition(i), 2.5);

    Rng rng(5);
    const auto sample = memory.sample(6, 0.7, rng);
    REQUIRE(sample.weights.size() == 6);
    for (double w : sample.weights) CHECK(w == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("beta = 0 gives unit importance weights regardless of priorities") {
    PrioritizedReplayMemory memory(16, 1.0, 0.01);
    for (int i = 0; i < 4; ++i) memory.store(make_transition(i), 1.0 + i);
    Rng rng(6);
    const auto sample = memory.sample(4, 0.0, rng);
    for (double w : sample.weights) CHECK(w == 1.0);
}

TEST_CASE("sampling frequencies follow priorities^alpha") {
    PrioritizedReplayMemory memory(8, 1.0, 0.001);
    for (int i = 0; i < 4; ++i) memory.store(make_transition(i), i + 1.0);

    Rng rng(2718);
    std::array<int, 4> hits{};
    const int draws = 100000;
    for (int k = 0; k < draws; k += 4) {
        const auto sample = memory.sample(4, 0.4, rng);
        for (const Transition* t : sample.items) {
            ++hits[static_cast<int>(t->reward)];
        }
    }
    for (int i = 0; i < 4; ++i) {
        const double expected = (i + 1.0) / 10.0;
        CHECK(std::abs(hits[i] / static_cast<double>(draws) - expected) < 0.01);
    }
}

TEST_CASE("importance weights are (n P)^-beta normalized by the maximum") {
    PrioritizedReplayMemory memory(8, 1.0, 0.001);
    for (int i = 0; i < 4; ++i) memory.store(make_transition(i), i + 1.0);

    const double beta = 0.5;
    Rng rng(11);
    const auto sample = memory.sample(4, beta, rng);
    const double max_w = std::pow(4.0 * (1.0 / 10.0), -beta);  // smallest probability
    for (size_t k = 0; k < sample.items.size(); ++k) {
        const double p = (sample.items[k]->reward + 1.0) / 10.0;
        const double expected = std::pow(4.0 * p, -beta) / max_w;
        CHECK(sample.weights[k] == doctest::Approx(expected).epsilon(1e-12));
    }
}

TEST_CASE("update_priorities applies |td| + epsilon and skips stale ids") {
    PrioritizedReplayMemory memory(4, 1.0, 0.01);
    for (int i = 0; i < 4; ++i) memory.store(make_transition(i), 1.0);

    Rng rng(1);
    const auto sample = memory.sample(2, 0.4, rng);
    memory.update_priorities(sample.ids, std::vector<double>{0.0, -0.5});
    bool saw_floor = false, saw_half = false;
    for (int i = 0; i < memory.size(); ++i) {
        saw_floor = saw_floor || memory.priority_at(i) == 0.01;
        saw_half = saw_half || memory.priority_at(i) == 0.51;
    }
    CHECK(saw_floor);
    CHECK(saw_half);

    // Evict everything, then update with the old ids.
    for (int i = 0; i < 4; ++i) memory.store(make_transition(10 + i), 1.0);
    memory.update_priorities(sample.ids, std::vector<double>{1.0, 1.0});
    CHECK(memory.stale_update_count() == 2);

    CHECK_THROWS_AS(memory.update_priorities(sample.ids, std::vector<double>{1.0}),
                    std::invalid_argument);
}

TEST_CASE("larger |td| means strictly larger sampling mass") {
    PrioritizedReplayMemory memory(2, 1.0, 0.01);
    memory.store(make_transition(0), 1.0);
    memory.store(make_transition(1), 1.0);
    Rng rng(3);
    auto sample = memory.sample(2, 0.0, rng);
    // Order ids so index 0 gets the small update.
    std::vector<int64_t> ids = {0, 1};
    memory.update_priorities(ids, std::vector<double>{0.1, 0.9});
    CHECK(memory.priority_at(1) > memory.priority_at(0));
}

TEST_CASE("dual thrust prepopulation on a flat market stores only sits") {
    PriceSeries s;
    s.symbol = "FLAT";
    for (int k = 0; k < 40; ++k) {
        s.bars.push_back({Date::from_ymd(2022, 1, 1).plus_days(k), 50, 50, 50, 50, 1});
    }
    PrioritizedReplayMemory memory(1000, 0.6, 0.01);
    const int stored = prepopulate_dual_thrust(memory, s, DualThrustParams{}, 8, 0.002, 0.05, 1000);
    CHECK(stored == 40 - 8 - 1);
    CHECK(memory.size() == stored);
    for (int i = 0; i < memory.size(); ++i) {
        CHECK(memory.at(i).action == Action::Sit);
        CHECK(memory.at(i).reward == 0.0);
        CHECK(memory.at(i).prepopulated);
        CHECK(memory.priority_at(i) == 1.0);
    }
    CHECK(memory.at(memory.size() - 1).done);
}

TEST_CASE("prepopulation respects the capacity bound") {
    const PriceSeries series = gbm_series(100.0, 0.05, 0.3, 1.0 / 252.0, 200, 9);
    PrioritizedReplayMemory memory(1000, 0.6, 0.01);
    const int stored = prepopulate_dual_thrust(memory, series, DualThrustParams{}, 8, 0.002, 0.05, 50);
    CHECK(stored == 50);
    CHECK(memory.size() == 50);
}

TEST_CASE("prepopulation buys at the first breakout bar") {
    // Flat at 100, then a jump to 120 at bar 20.
    PriceSeries s;
    s.symbol = "BREAK";
    for (int k = 0; k < 40; ++k) {
        double close = k >= 20 ? 120.0 : 100.0;
        OhlcBar b;
        b.date = Date::from_ymd(2022, 3, 1).plus_days(k);
        b.open = k == 0 ? 100.0 : s.bars[k - 1].close;
        b.close = close;
        b.high = std::max(b.open, b.close);
        b.low = std::min(b.open, b.close);
        b.volume = 1;
        s.bars.push_back(b);
    }

    const int window = 8;
    const DualThrustParams params;
    PrioritizedReplayMemory memory(1000, 0.6, 0.01);
    prepopulate_dual_thrust(memory, s, params, window, 0.0, 0.05, 1000);

    // Independent recomputation of the first bar whose close crosses BuyLine.
    int expected_first_buy = -1;
    for (int t = window; t < s.size() - 1 && expected_first_buy < 0; ++t) {
        double hh = 0.0, ll = 1e300, hc = 0.0, lc = 1e300;
        for (int i = t - params.lookback; i < t; ++i) {
            hh = std::max(hh, s.bars[i].high);
            ll = std::min(ll, s.bars[i].low);
            hc = std::max(hc, s.bars[i].close);
            lc = std::min(lc, s.bars[i].close);
        }
        const double range = std::max(hh - lc, hc - ll);
        if (s.bars[t].close > s.bars[t].open + params.k1 * range) expected_first_buy = t;
    }
    REQUIRE(expected_first_buy == 20);

    int first_buy_bar = -1;
    for (int i = 0; i < memory.size() && first_buy_bar < 0; ++i) {
        if (memory.at(i).action == Action::Buy) first_buy_bar = window + i;
    }
    CHECK(first_buy_bar == expected_first_buy);
}
