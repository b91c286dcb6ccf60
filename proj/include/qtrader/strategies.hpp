#pragma once

#include <span>

#include "qtrader/action.hpp"
#include "qtrader/market_data.hpp"

namespace qtrader {

struct DualThrustParams {
    double k1 = 0.8;
    double k2 = 0.4;
    int lookback = 4;  // bars used for the HH/HC/LL/LC extremes
};

struct ThrustLines {
    double open = 0.0;
    double range = 0.0;
    double buy_line = 0.0;
    double sell_line = 0.0;
};

// Range = max(HH - LC, HC - LL) over the history; BuyLine = open + k1 * Range,
// SellLine = open - k2 * Range.
ThrustLines dual_thrust_lines(std::span<const OhlcBar> history, double open,
                              const DualThrustParams& params);

// Long-only reading: buy on an upward breakout when flat, sell the long on a
// downward breakout, otherwise sit.
Action dual_thrust_signal(double price, const ThrustLines& lines, bool is_long);

// Signal at bar t using the lookback bars before t and bar t's open; Sit until
// enough history exists.
Action dual_thrust_decide(const PriceSeries& series, int t, bool is_long,
                          const DualThrustParams& params);

}  // namespace qtrader
