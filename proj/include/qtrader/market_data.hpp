#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace qtrader {

// Calendar day stored as days since 1970-01-01. No time zones, no intraday.
struct Date {
    int32_t days = 0;

    static Date from_ymd(int year, int month, int day);
    static Date parse(const std::string& iso);  // "YYYY-MM-DD", throws on bad input
    std::string to_string() const;
    Date plus_days(int n) const { return Date{days + n}; }

    auto operator<=>(const Date&) const = default;
};

struct OhlcBar {
    Date date;
    double open = 0.0;
    double high = 0.0;
    double low = 0.0;
    double close = 0.0;
    uint64_t volume = 0;

    bool prices_valid() const {
        return open > 0.0 && high > 0.0 && low > 0.0 && close > 0.0 &&
               high >= std::max(open, close) && low <= std::min(open, close);
    }
};

struct PriceSeries {
    std::string symbol;
    std::vector<OhlcBar> bars;

    int size() const { return static_cast<int>(bars.size()); }
};

// State matrix of log returns, n rows x 4 columns (open, high, low, close).
// Row 0 is the most recent step: row r holds ln(feature[t-r] / feature[t-r-1]).
struct FeatureWindow {
    int rows = 0;
    int cols = 4;
    int t_index = 0;  // bar index of the most recent bar covered
    std::vector<double> m;

    double at(int r, int c) const { return m[static_cast<size_t>(r) * cols + c]; }
    const double* row(int r) const { return &m[static_cast<size_t>(r) * cols]; }
};

// CSV format: header "date,open,high,low,close,volume", ISO dates, '.' decimals.
PriceSeries load_csv(const std::string& path);
void write_csv(const PriceSeries& series, const std::string& path);

// Window of the n most recent log-return rows ending at bar t (needs bars t-n..t).
FeatureWindow feature_window(const PriceSeries& series, int t, int n);

// Geometric Brownian motion closes with synthesized OHLC:
//   S_{k+1} = S_k * exp((mu - sigma^2/2) dt + sigma sqrt(dt) z_k)
//   open    = previous close
//   high    = max(open, close) * (1 + 0.5 sigma sqrt(dt) |z_k|)
//   low     = min(open, close) / (1 + 0.5 sigma sqrt(dt) |z_k|)
// z_k standard normal from Rng(seed) (xoshiro256** + Box-Muller).
PriceSeries gbm_series(double s0, double mu, double sigma, double dt, int len, uint64_t seed);

// close_k = s0 + amplitude * sin(2 pi k / period); open = previous close.
PriceSeries sinusoid_series(double s0, double amplitude, int period, int len);

}  // namespace qtrader
