#include "qtrader/plot.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "qtrader/errors.hpp"

namespace qtrader {

namespace {

constexpr double kWidth = 960.0;
constexpr double kHeight = 480.0;
constexpr double kMargin = 48.0;

std::string num(double v) {
    std::ostringstream ss;
    ss.precision(2);
    ss << std::fixed << v;
    return ss.str();
}

}  // namespace

std::string render_trade_svg(const PriceSeries& series, const TradeLog& trades) {
    if (series.size() < 2) {
        throw DataError("plot: series too short");
    }
    for (const TradeRecord& t : trades) {
        if (t.bar < 0 || t.bar >= series.size()) {
            throw DataError("plot: trade references bar " + std::to_string(t.bar) +
                            " outside the series (0.." + std::to_string(series.size() - 1) + ")");
        }
    }

    double lo = series.bars[0].close;
    double hi = lo;
    for (const OhlcBar& bar : series.bars) {
        lo = std::min(lo, bar.close);
        hi = std::max(hi, bar.close);
    }
    if (hi == lo) hi = lo + 1.0;

    const double plot_w = kWidth - 2 * kMargin;
    const double plot_h = kHeight - 2 * kMargin;
    auto x_of = [&](int bar) {
        return kMargin + plot_w * bar / static_cast<double>(series.size() - 1);
    };
    auto y_of = [&](double price) { return kMargin + plot_h * (hi - price) / (hi - lo); };

    std::ostringstream svg;
    svg << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
        << kHeight << "\" viewBox=\"0 0 " << kWidth << " " << kHeight << "\">\n";
    svg << "  <rect width=\"" << kWidth << "\" height=\"" << kHeight << "\" fill=\"white\"/>\n";

    svg << "  <polyline fill=\"none\" stroke=\"#355\" stroke-width=\"1.2\" points=\"";
    for (int i = 0; i < series.size(); ++i) {
        if (i) svg << ' ';
        svg << num(x_of(i)) << ',' << num(y_of(series.bars[i].close));
    }
    svg << "\"/>\n";

    for (const TradeRecord& t : trades) {
        const double x = x_of(t.bar);
        const double y = y_of(series.bars[t.bar].close);
        if (t.action == Action::Buy) {
            svg << "  <polygon fill=\"#2a2\" points=\"" << num(x) << ',' << num(y + 6) << ' '
                << num(x - 5) << ',' << num(y + 14) << ' ' << num(x + 5) << ',' << num(y + 14)
                << "\"/>\n";
        } else if (t.action == Action::Sell) {
            svg << "  <polygon fill=\"#c22\" points=\"" << num(x) << ',' << num(y - 6) << ' '
                << num(x - 5) << ',' << num(y - 14) << ' ' << num(x + 5) << ',' << num(y - 14)
                << "\"/>\n";
        }
    }

    svg << "  <text x=\"" << kMargin << "\" y=\"" << kHeight - 12 << "\" font-size=\"12\">"
        << series.bars.front().date.to_string() << "</text>\n";
    svg << "  <text x=\"" << kWidth - kMargin - 70 << "\" y=\"" << kHeight - 12
        << "\" font-size=\"12\">" << series.bars.back().date.to_string() << "</text>\n";
    svg << "  <text x=\"" << kMargin << "\" y=\"" << kMargin - 8 << "\" font-size=\"12\">"
        << series.symbol << " close</text>\n";
    svg << "</svg>\n";
    return svg.str();
}

void write_trade_svg(const PriceSeries& series, const TradeLog& trades, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot open SVG output: " + path);
    out << render_trade_svg(series, trades);
    if (!out) throw DataError("write failed: " + path);
}

}  // namespace qtrader
