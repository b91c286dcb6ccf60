#include "qtrader/strategies.hpp"

#include <algorithm>
#include <stdexcept>

namespace qtrader {

ThrustLines dual_thrust_lines(std::span<const OhlcBar> history, double open,
                              const DualThrustParams& params) {
    if (history.empty()) {
        throw std::invalid_argument("dual_thrust_lines: empty history");
    }
    if (static_cast<int>(history.size()) != params.lookback) {
        throw std::invalid_argument("dual_thrust_lines: history must hold exactly lookback bars");
    }
    double hh = history[0].high;
    double lc = history[0].close;
    double hc = history[0].close;
    double ll = history[0].low;
    for (const OhlcBar& bar : history) {
        hh = std::max(hh, bar.high);
        ll = std::min(ll, bar.low);
        hc = std::max(hc, bar.close);
        lc = std::min(lc, bar.close);
    }
    ThrustLines lines;
    lines.open = open;
    lines.range = std::max(hh - lc, hc - ll);
    lines.buy_line = open + params.k1 * lines.range;
    lines.sell_line = open - params.k2 * lines.range;
    return lines;
}

Action dual_thrust_signal(double price, const ThrustLines& lines, bool is_long) {
    if (!is_long && price > lines.buy_line) return Action::Buy;
    if (is_long && price < lines.sell_line) return Action::Sell;
    return Action::Sit;
}

Action dual_thrust_decide(const PriceSeries& series, int t, bool is_long,
                          const DualThrustParams& params) {
    if (t < params.lookback || t >= series.size()) return Action::Sit;
    const std::span<const OhlcBar> history(&series.bars[t - params.lookback],
                                           static_cast<size_t>(params.lookback));
    const ThrustLines lines = dual_thrust_lines(history, series.bars[t].open, params);
    return dual_thrust_signal(series.bars[t].close, lines, is_long);
}

}  // namespace qtrader
