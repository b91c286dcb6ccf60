#include "qtrader/market_data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "qtrader/errors.hpp"

#include "qtrader/rng.hpp"

namespace qtrader {

namespace {

// Civil-date conversions (Howard Hinnant's algorithms), proleptic Gregorian.
int32_t days_from_civil(int y, int m, int d) {
    y -= m <= 2;
    const int era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153u * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<int>(doe) - 719468;
}

void civil_from_days(int32_t z, int& y, int& m, int& d) {
    z += 719468;
    const int era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    y = static_cast<int>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    d = static_cast<int>(doy - (153 * mp + 2) / 5 + 1);
    m = static_cast<int>(mp + (mp < 10 ? 3 : -9));
    y += m <= 2;
}

bool ymd_valid(int y, int m, int d) {
    if (m < 1 || m > 12 || d < 1) return false;
    static const int len[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    int dmax = len[m - 1];
    if (m == 2 && (y % 4 == 0 && (y % 100 != 0 || y % 400 == 0))) dmax = 29;
    return d <= dmax;
}

double parse_price(const std::string& field, int line, const char* name) {
    double value = 0.0;
    const char* first = field.data();
    const char* last = first + field.size();
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last) {
        throw DataError("malformed " + std::string(name) + " at line " +
                                 std::to_string(line) + ": '" + field + "'");
    }
    return value;
}

std::string format_double(double v) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    (void)ec;
    return std::string(buf, ptr);
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    fields.push_back(cur);
    return fields;
}

}  // namespace

Date Date::from_ymd(int year, int month, int day) {
    if (!ymd_valid(year, month, day)) {
        throw std::invalid_argument("invalid calendar date");
    }
    return Date{days_from_civil(year, month, day)};
}

Date Date::parse(const std::string& iso) {
    int y = 0, m = 0, d = 0;
    char dash1 = 0, dash2 = 0;
    std::istringstream ss(iso);
    if (!(ss >> y >> dash1 >> m >> dash2 >> d) || dash1 != '-' || dash2 != '-' ||
        !ss.eof() || iso.size() != 10 || !ymd_valid(y, m, d)) {
        throw std::invalid_argument("bad date '" + iso + "' (expected YYYY-MM-DD)");
    }
    return Date{days_from_civil(y, m, d)};
}

std::string Date::to_string() const {
    int y, m, d;
    civil_from_days(days, y, m, d);
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", y, m, d);
    return buf;
}

PriceSeries load_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw DataError("cannot open data file: " + path);
    }

    std::string line;
    if (!std::getline(in, line)) {
        throw DataError("series too short: " + path + " is empty");
    }
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "date,open,high,low,close,volume") {
        throw DataError("bad CSV header in " + path +
                                 " (expected 'date,open,high,low,close,volume')");
    }

    PriceSeries series;
    const auto stem_begin = path.find_last_of("/\\");
    std::string stem = (stem_begin == std::string::npos) ? path : path.substr(stem_begin + 1);
    const auto dot = stem.find_last_of('.');
    series.symbol = (dot == std::string::npos) ? stem : stem.substr(0, dot);

    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;

        const auto fields = split_csv_line(line);
        if (fields.size() != 6) {
            throw DataError("malformed row at line " + std::to_string(line_no) +
                                     ": expected 6 fields, got " + std::to_string(fields.size()));
        }

        OhlcBar bar;
        try {
            bar.date = Date::parse(fields[0]);
        } catch (const std::invalid_argument& e) {
            throw DataError("malformed row at line " + std::to_string(line_no) + ": " +
                                     e.what());
        }
        bar.open = parse_price(fields[1], line_no, "open");
        bar.high = parse_price(fields[2], line_no, "high");
        bar.low = parse_price(fields[3], line_no, "low");
        bar.close = parse_price(fields[4], line_no, "close");
        {
            uint64_t vol = 0;
            const char* first = fields[5].data();
            const char* last = first + fields[5].size();
            auto [ptr, ec] = std::from_chars(first, last, vol);
            if (ec != std::errc() || ptr != last) {
                throw DataError("malformed volume at line " + std::to_string(line_no) +
                                         ": '" + fields[5] + "'");
            }
            bar.volume = vol;
        }

        if (bar.open <= 0.0 || bar.high <= 0.0 || bar.low <= 0.0 || bar.close <= 0.0) {
            throw DataError("non-positive price at line " + std::to_string(line_no));
        }
        if (!bar.prices_valid()) {
            throw DataError("OHLC invariant violated at line " + std::to_string(line_no));
        }
        if (!series.bars.empty() && bar.date <= series.bars.back().date) {
            throw DataError("duplicate or non-monotonic date at line " +
                                     std::to_string(line_no) + ": " + bar.date.to_string());
        }
        series.bars.push_back(bar);
    }

    if (series.size() < 2) {
        throw DataError("series too short: " + path + " has " +
                                 std::to_string(series.size()) + " bars (need >= 2)");
    }
    return series;
}

void write_csv(const PriceSeries& series, const std::string& path) {
    std::ofstream out(path);
    if (!out) {
        throw DataError("cannot open output file: " + path);
    }
    out << "date,open,high,low,close,volume\n";
    for (const auto& bar : series.bars) {
        out << bar.date.to_string() << ',' << format_double(bar.open) << ','
            << format_double(bar.high) << ',' << format_double(bar.low) << ','
            << format_double(bar.close) << ',' << bar.volume << '\n';
    }
    if (!out) {
        throw DataError("write failed: " + path);
    }
}

FeatureWindow feature_window(const PriceSeries& series, int t, int n) {
    if (n < 1) {
        throw std::invalid_argument("window length must be >= 1");
    }
    if (t < n || t >= series.size()) {
        throw std::invalid_argument("insufficient history: window of " + std::to_string(n) +
                                    " ending at bar " + std::to_string(t) + " needs bars " +
                                    std::to_string(t - n) + ".." + std::to_string(t));
    }

    FeatureWindow w;
    w.rows = n;
    w.t_index = t;
    w.m.resize(static_cast<size_t>(n) * 4);
    for (int r = 0; r < n; ++r) {
        const OhlcBar& cur = series.bars[t - r];
        const OhlcBar& prev = series.bars[t - r - 1];
        double* row = &w.m[static_cast<size_t>(r) * 4];
        row[0] = std::log(cur.open / prev.open);
        row[1] = std::log(cur.high / prev.high);
        row[2] = std::log(cur.low / prev.low);
        row[3] = std::log(cur.close / prev.close);
        for (int c = 0; c < 4; ++c) {
            if (!std::isfinite(row[c])) {
                throw DataError("non-finite log return at bar " + std::to_string(t - r));
            }
        }
    }
    return w;
}

PriceSeries gbm_series(double s0, double mu, double sigma, double dt, int len, uint64_t seed) {
    if (s0 <= 0.0) throw std::invalid_argument("gbm: s0 must be positive");
    if (sigma < 0.0) throw std::invalid_argument("gbm: sigma must be nonnegative");
    if (len < 2) throw std::invalid_argument("gbm: len must be >= 2");

    Rng rng(seed);
    const Date start = Date::from_ymd(2020, 1, 1);
    const double drift = (mu - 0.5 * sigma * sigma) * dt;
    const double vol = sigma * std::sqrt(dt);

    PriceSeries series;
    series.symbol = "GBM";
    series.bars.reserve(len);

    OhlcBar first{start, s0, s0, s0, s0, 1000000};
    series.bars.push_back(first);

    double close = s0;
    for (int k = 1; k < len; ++k) {
        const double z = rng.normal();
        const double open = close;
        close = close * std::exp(drift + vol * z);
        const double band = 1.0 + 0.5 * vol * std::abs(z);
        OhlcBar bar;
        bar.date = start.plus_days(k);
        bar.open = open;
        bar.close = close;
        bar.high = std::max(open, close) * band;
        bar.low = std::min(open, close) / band;
        bar.volume = 1000000;
        series.bars.push_back(bar);
    }
    return series;
}

PriceSeries sinusoid_series(double s0, double amplitude, int period, int len) {
    if (amplitude >= s0) {
        throw std::invalid_argument("sinusoid: amplitude must be less than s0");
    }
    if (amplitude < 0.0) throw std::invalid_argument("sinusoid: amplitude must be nonnegative");
    if (period < 1) throw std::invalid_argument("sinusoid: period must be >= 1");
    if (len < 2) throw std::invalid_argument("sinusoid: len must be >= 2");

    const Date start = Date::from_ymd(2020, 1, 1);
    PriceSeries series;
    series.symbol = "SIN";
    series.bars.reserve(len);

    double prev_close = s0;
    for (int k = 0; k < len; ++k) {
        const double close = s0 + amplitude * std::sin(2.0 * M_PI * k / period);
        const double open = (k == 0) ? close : prev_close;
        OhlcBar bar;
        bar.date = start.plus_days(k);
        bar.open = open;
        bar.close = close;
        bar.high = std::max(open, close);
        bar.low = std::min(open, close);
        bar.volume = 1000000;
        series.bars.push_back(bar);
        prev_close = close;
    }
    return series;
}

}  // namespace qtrader
