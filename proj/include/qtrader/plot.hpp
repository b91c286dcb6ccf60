#pragma once

#include <string>

#include "qtrader/backtest.hpp"
#include "qtrader/market_data.hpp"

namespace qtrader {

// Static SVG: close-price polyline with green upward triangles at buys and red
// downward triangles at sells. Throws DataError when a trade references a bar
// outside the series.
std::string render_trade_svg(const PriceSeries& series, const TradeLog& trades);

void write_trade_svg(const PriceSeries& series, const TradeLog& trades, const std::string& path);

}  // namespace qtrader
